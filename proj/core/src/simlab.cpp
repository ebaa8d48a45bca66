#include "haptutor/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "haptutor/error.hpp"
#include "haptutor/random.hpp"
#include "text_util.hpp"

namespace haptutor {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// A pitch from the score's range other than `correct`, if one exists.
std::optional<Pitch> wrong_pitch(Rng& rng, const Score& score, Pitch correct) {
  const auto range = pitch_range(score);
  if (!range || range->low == range->high) return std::nullopt;
  auto d = static_cast<int>(rng.uniform_int(range->low.degree, range->high.degree - 1));
  if (d >= correct.degree) ++d;
  if (d > range->high.degree) d = range->low.degree;
  return Pitch{d};
}

class TraceBuilder {
 public:
  void play(Millis t, std::optional<Pitch> p) {
    t = std::max(t, last_t_);
    last_t_ = t;
    if (!events_.empty() && events_.back().pitch == p) return;
    if (events_.empty() && !p) return;
    events_.push_back({t, p});
  }
  std::optional<Pitch> held() const {
    return events_.empty() ? std::nullopt : events_.back().pitch;
  }
  std::vector<PitchEvent> take() { return std::move(events_); }

 private:
  std::vector<PitchEvent> events_;
  Millis last_t_ = std::numeric_limits<Millis>::min();
};

}  // namespace

void LearnerParams::validate() const {
  if (!in_unit(gain_passive) || !in_unit(gain_active) || gain_passive <= 0.0 ||
      gain_active >= 1.0) {
    throw ConfigError("learner gains must lie in (0, 1)");
  }
  if (gain_active < gain_passive) {
    throw ConfigError("gain_active must not be below gain_passive");
  }
  if (!(decay_per_min >= 0.0)) throw ConfigError("decay rate must be non-negative");
  if (!in_unit(motor_noise)) throw ConfigError("motor_noise must lie in [0, 1]");
  if (!(recall_threshold > 0.0 && recall_threshold <= 1.0)) {
    throw ConfigError("recall_threshold must lie in (0, 1]");
  }
  if (latency_min_ms < 0 || latency_max_ms < latency_min_ms) {
    throw ConfigError("latency bounds must satisfy 0 <= min <= max");
  }
}

LearnerModel LearnerModel::fresh(std::size_t notes, const LearnerParams& params) {
  params.validate();
  return LearnerModel{params, std::vector<double>(notes, 0.0),
                      std::vector<double>(notes, 0.0)};
}

PassResult simulate_pass(const LearnerModel& learner, const Score& score,
                         const FingeringChart& chart, Phase phase,
                         const TutorConfig& tutor, std::uint64_t seed,
                         Millis link_delay_ms) {
  const auto mode = mode_for(phase);
  if (!mode) throw ValidationError("exams are simulated by simulate_exam");
  if (learner.mastery.size() != score.size()) {
    throw ValidationError("learner model does not match the score length");
  }
  const LearnerParams& lp = learner.params;
  const auto timeline = schedule(score, tutor);

  Rng rng(seed);
  PassResult out;
  out.learner = learner;
  auto& m = out.learner.mastery;
  auto& c = out.learner.consolidation;
  TraceBuilder trace;

  for (const auto& n : timeline) {
    const std::size_t i = n.index;
    if (*mode == Mode::Mandatory) {
      trace.play(n.onset_ms, n.pitch);
      m[i] += lp.gain_passive * (1.0 - m[i]);
      continue;
    }
    const Millis latency = rng.uniform_int(lp.latency_min_ms, lp.latency_max_ms);
    const bool success = rng.chance(m[i] * (1.0 - lp.motor_noise));
    if (success) {
      trace.play(n.onset_ms + latency, n.pitch);
      m[i] += lp.gain_active * (1.0 - m[i]);
      c[i] += (lp.gain_active - lp.gain_passive) / lp.gain_active * (m[i] - c[i]);
      continue;
    }
    auto wrong = wrong_pitch(rng, score, n.pitch);
    // A pitch still sounding from the previous note would satisfy this one.
    if (trace.held() == n.pitch) trace.play(n.onset_ms, std::nullopt);
    if (wrong) trace.play(n.onset_ms + latency, wrong);
    const Millis corrected_at = n.onset_ms + tutor.delta_t_ms + link_delay_ms;
    if (*mode == Mode::Adaptive && corrected_at < n.end_ms) {
      trace.play(corrected_at, n.pitch);
    }
    m[i] += lp.gain_passive * (1.0 - m[i]);
  }

  out.trace = trace.take();
  TutorSession session(score, chart, *mode, tutor);
  run_to_completion(session, out.trace);
  out.outcome.phase = phase;
  out.outcome.note_count = score.size();
  out.outcome.mistake_count = *mode == Mode::Mandatory ? 0 : session.mistake_count();
  out.outcome.duration_ms = timeline.empty() ? 0 : timeline.back().end_ms;
  return out;
}

LearnerModel forget(const LearnerModel& learner, double elapsed_minutes) {
  if (!(elapsed_minutes >= 0.0)) throw ValidationError("elapsed time must be >= 0");
  LearnerModel out = learner;
  const double keep = std::exp(-learner.params.decay_per_min * elapsed_minutes);
  for (std::size_t i = 0; i < out.mastery.size(); ++i) {
    const double floor = out.consolidation[i];
    out.mastery[i] = std::clamp(floor + (out.mastery[i] - floor) * keep, 0.0, 1.0);
  }
  return out;
}

ExamAttempt simulate_exam(const LearnerModel& learner, const Score& score,
                          const FingeringChart& chart, ExamStrictness strictness,
                          std::uint64_t seed) {
  if (learner.mastery.size() != score.size()) {
    throw ValidationError("learner model does not match the score length");
  }
  validate(score, chart);
  Rng rng(seed);
  ExamAttempt out;
  TraceBuilder trace;
  const Millis ioi_gap = 10;
  for (std::size_t i = 0; i < score.size(); ++i) {
    const Note& n = score.notes[i];
    std::optional<Pitch> play;
    if (learner.mastery[i] >= learner.params.recall_threshold) {
      play = n.pitch;
    } else if (rng.chance(0.5)) {
      play = wrong_pitch(rng, score, n.pitch);
    }
    if (!play) continue;
    if (trace.held() == play) trace.play(n.onset_ms - ioi_gap, std::nullopt);
    trace.play(n.onset_ms, play);
  }
  out.events = trace.take();
  out.result = grade_exam(score, out.events, strictness);
  out.duration_ms = score.end_ms();
  return out;
}

std::string_view to_string(Song s) { return s == Song::A ? "A" : "B"; }

std::array<TrialAssignment, 2> counterbalanced_trials(std::size_t participant) {
  switch (participant % 4) {
    case 0:
      return {{{Song::A, StrategyKind::Dynamic}, {Song::B, StrategyKind::Static}}};
    case 1:
      return {{{Song::A, StrategyKind::Static}, {Song::B, StrategyKind::Dynamic}}};
    case 2:
      return {{{Song::B, StrategyKind::Dynamic}, {Song::A, StrategyKind::Static}}};
    default:
      return {{{Song::B, StrategyKind::Static}, {Song::A, StrategyKind::Dynamic}}};
  }
}

void ExperimentPlan::validate() const {
  if (participants == 0) throw ConfigError("need at least one participant");
  if (replications == 0) throw ConfigError("need at least one replication");
  if (!(forget_minutes >= 0.0)) throw ConfigError("forget interval must be >= 0");
  if (!(cutoff_minutes > 0.0)) throw ConfigError("learning cutoff must be positive");
  if (!(population_spread >= 0.0 && population_spread < 1.0)) {
    throw ConfigError("population spread must lie in [0, 1)");
  }
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
}

namespace {

struct LearnRun {
  bool learned = false;
  Millis elapsed_ms = 0;
  std::size_t passes = 0;
  std::size_t exams = 0;
  LearnerModel learner;
};

struct PassTag {
  std::size_t replication;
  std::size_t participant;
  int order;
  Song song;
  StrategyKind method;
};

LearnRun learn_until_pass(LearnerModel learner, const Score& score,
                          const FingeringChart& chart, StrategyKind method,
                          const SimlabConfig& cfg, Millis cutoff_ms, Rng& rng,
                          const PassTag& tag, std::vector<PassRecord>* sink) {
  const PhaseTable& table = phase_table(method);
  Phase phase = table.front();
  std::vector<PassOutcome> history;
  LearnRun run;
  auto record = [&](const char* kind, const PassOutcome& o) {
    if (sink == nullptr) return;
    sink->push_back({tag.replication, tag.participant, tag.order, tag.song, tag.method,
                     kind, o.phase, o.mistake_count, o.note_count, o.duration_ms});
  };

  while (run.elapsed_ms < cutoff_ms) {
    PassOutcome outcome;
    if (phase == Phase::Test) {
      const ExamAttempt exam = simulate_exam(learner, score, chart,
                                             cfg.strategy.exam_strictness, rng.bits());
      run.elapsed_ms += exam.duration_ms;
      ++run.exams;
      outcome = {Phase::Test,
                 exam.result.pass ? 0 : std::max<std::size_t>(exam.result.forgotten_notes, 1),
                 score.size(), exam.duration_ms};
      record("exam", outcome);
      if (exam.result.pass) {
        run.learned = run.elapsed_ms <= cutoff_ms;
        break;
      }
    } else {
      PassResult pass = simulate_pass(learner, score, chart, phase, cfg.tutor, rng.bits(),
                                      cfg.link_delay_ms);
      learner = std::move(pass.learner);
      run.elapsed_ms += pass.outcome.duration_ms;
      ++run.passes;
      outcome = pass.outcome;
      record("pass", outcome);
    }
    phase = next_phase(table, phase, outcome, history, cfg.strategy);
    history.push_back(outcome);
  }
  run.learner = std::move(learner);
  return run;
}

LearnerParams jittered(const LearnerParams& base, double spread, Rng& rng) {
  LearnerParams p = base;
  const double f = rng.uniform(1.0 - spread, 1.0 + spread);
  p.gain_passive = std::min(base.gain_passive * f, 0.99);
  p.gain_active = std::min(base.gain_active * f, 0.99);
  if (p.gain_active < p.gain_passive) p.gain_active = p.gain_passive;
  return p;
}

struct ParticipantResult {
  std::vector<TrialRecord> trials;
  std::vector<PassRecord> passes;
};

ParticipantResult run_participant(const ExperimentPlan& plan, const SimlabConfig& cfg,
                                  std::size_t replication, std::uint64_t rep_seed,
                                  std::size_t participant, const Score& song_a,
                                  const Score& song_b, const FingeringChart& chart) {
  Rng rng(rep_seed + participant);
  const LearnerParams params = jittered(cfg.learner, plan.population_spread, rng);
  const auto cutoff_ms = static_cast<Millis>(plan.cutoff_minutes * 60000.0);
  ParticipantResult out;
  const auto trials = counterbalanced_trials(participant);
  for (int order = 1; order <= 2; ++order) {
    const TrialAssignment& a = trials[static_cast<std::size_t>(order - 1)];
    const Score& score = a.song == Song::A ? song_a : song_b;
    const PassTag tag{replication, participant, order, a.song, a.method};
    LearnRun run = learn_until_pass(LearnerModel::fresh(score.size(), params), score, chart,
                                    a.method, cfg, cutoff_ms, rng, tag, &out.passes);
    TrialRecord t{replication, participant, order, a.song, a.method, run.learned,
                  run.elapsed_ms, std::nullopt, run.passes, run.exams, std::nullopt};
    if (run.learned) {
      t.rate = learning_rate(1.0, static_cast<double>(run.elapsed_ms) / 60000.0);
      const LearnerModel later = forget(run.learner, plan.forget_minutes);
      const ExamAttempt re = simulate_exam(later, score, chart,
                                           cfg.strategy.exam_strictness, rng.bits());
      t.reexam = re.result;
      out.passes.push_back({replication, participant, order, a.song, a.method, "reexam",
                            Phase::Test,
                            re.result.pass ? 0
                                           : std::max<std::size_t>(re.result.forgotten_notes, 1),
                            score.size(), re.duration_ms});
    }
    out.trials.push_back(t);
  }
  return out;
}

}  // namespace

ConditionSummary summarize(std::span<const TrialRecord> trials, StrategyKind method) {
  ConditionSummary s;
  s.method = method;
  double rate_sum = 0;
  for (const auto& t : trials) {
    if (t.method != method) continue;
    ++s.trials;
    if (!t.learned) continue;
    ++s.learned;
    rate_sum += t.rate.value_or(0.0);
    if (t.reexam && !t.reexam->pass) ++s.forgot;
  }
  if (s.learned > 0) {
    s.mean_rate = rate_sum / static_cast<double>(s.learned);
    s.forgetting_chance = static_cast<double>(s.forgot) / static_cast<double>(s.learned);
  }
  return s;
}

bool ReplicationReport::dynamic_rate_higher() const {
  return dynamic_summary.mean_rate && static_summary.mean_rate &&
         *dynamic_summary.mean_rate > *static_summary.mean_rate;
}

bool ReplicationReport::dynamic_chance_lower() const {
  return dynamic_summary.forgetting_chance && static_summary.forgetting_chance &&
         *dynamic_summary.forgetting_chance < *static_summary.forgetting_chance;
}

SignTest ExperimentReport::rate_sign_test() const {
  std::vector<double> diffs;
  for (const auto& r : replications) {
    diffs.push_back(r.dynamic_summary.mean_rate.value_or(0.0) -
                    r.static_summary.mean_rate.value_or(0.0));
  }
  return sign_test(diffs);
}

SignTest ExperimentReport::chance_sign_test() const {
  std::vector<double> diffs;
  for (const auto& r : replications) {
    diffs.push_back(r.static_summary.forgetting_chance.value_or(0.0) -
                    r.dynamic_summary.forgetting_chance.value_or(0.0));
  }
  return sign_test(diffs);
}

std::size_t ExperimentReport::rate_dynamic_higher() const {
  return static_cast<std::size_t>(
      std::count_if(replications.begin(), replications.end(),
                    [](const ReplicationReport& r) { return r.dynamic_rate_higher(); }));
}

std::size_t ExperimentReport::chance_dynamic_lower() const {
  return static_cast<std::size_t>(
      std::count_if(replications.begin(), replications.end(),
                    [](const ReplicationReport& r) { return r.dynamic_chance_lower(); }));
}

ExperimentReport run_protocol(const ExperimentPlan& plan, const SimlabConfig& cfg,
                              const Score& song_a, const Score& song_b,
                              const FingeringChart& chart) {
  plan.validate();
  cfg.learner.validate();
  cfg.tutor.validate();
  cfg.strategy.validate();
  validate(song_a, chart);
  validate(song_b, chart);

  ExperimentReport report;
  report.plan = plan;
  report.config = cfg;

  for (std::size_t rep = 0; rep < plan.replications; ++rep) {
    const std::uint64_t rep_seed = splitmix64(plan.base_seed + rep);
    std::vector<ParticipantResult> results(plan.participants);
    auto work = [&](std::size_t first) {
      for (std::size_t p = first; p < plan.participants; p += plan.jobs) {
        results[p] = run_participant(plan, cfg, rep, rep_seed, p, song_a, song_b, chart);
      }
    };
    if (plan.jobs == 1) {
      work(0);
    } else {
      std::vector<std::jthread> workers;
      for (std::size_t j = 0; j < plan.jobs && j < plan.participants; ++j) {
        workers.emplace_back(work, j);
      }
    }
    ReplicationReport rr;
    rr.replication = rep;
    rr.seed = rep_seed;
    for (auto& r : results) {
      rr.trials.insert(rr.trials.end(), r.trials.begin(), r.trials.end());
      report.passes.insert(report.passes.end(), r.passes.begin(), r.passes.end());
    }
    rr.static_summary = summarize(rr.trials, StrategyKind::Static);
    rr.dynamic_summary = summarize(rr.trials, StrategyKind::Dynamic);
    report.replications.push_back(std::move(rr));
  }

  if (plan.long_term_days > 0) {
    Rng rng(splitmix64(plan.base_seed ^ 0x5eedf00dULL));
    const LearnerParams params = cfg.learner;
    const auto cutoff_ms = static_cast<Millis>(plan.cutoff_minutes * 60000.0);
    const PassTag none{};
    LearnRun a = learn_until_pass(LearnerModel::fresh(song_a.size(), params), song_a, chart,
                                  StrategyKind::Static, cfg, cutoff_ms, rng, none, nullptr);
    LearnRun b = learn_until_pass(LearnerModel::fresh(song_b.size(), params), song_b, chart,
                                  StrategyKind::Dynamic, cfg, cutoff_ms, rng, none, nullptr);
    report.long_term_static_minutes = static_cast<double>(a.elapsed_ms) / 60000.0;
    report.long_term_dynamic_minutes = static_cast<double>(b.elapsed_ms) / 60000.0;
    for (std::size_t day = 1; day <= plan.long_term_days; ++day) {
      CurvePoint pt;
      pt.day = day;
      auto follow_up = [&](LearnRun& run, const Score& score, StrategyKind method,
                           double& ratio, double& relearn) {
        run.learner = forget(run.learner, 24.0 * 60.0);
        const ExamAttempt exam = simulate_exam(run.learner, score, chart,
                                               cfg.strategy.exam_strictness, rng.bits());
        ratio = forgetting_ratio(exam.result.forgotten_notes, score.size());
        if (!exam.result.pass) {
          LearnRun again = learn_until_pass(run.learner, score, chart, method, cfg,
                                            cutoff_ms, rng, none, nullptr);
          relearn = static_cast<double>(again.elapsed_ms) / 60000.0;
          run.learner = std::move(again.learner);
        }
      };
      follow_up(a, song_a, StrategyKind::Static, pt.static_ratio, pt.static_relearn_minutes);
      follow_up(b, song_b, StrategyKind::Dynamic, pt.dynamic_ratio,
                pt.dynamic_relearn_minutes);
      report.long_term.push_back(pt);
    }
  }
  return report;
}

namespace {

std::string fixed6(double v) { return detail::format_fixed(v, 6); }

std::string opt6(const std::optional<double>& v) { return v ? fixed6(*v) : "na"; }

}  // namespace

std::string format_report(const ExperimentReport& report) {
  const auto& plan = report.plan;
  const auto& lp = report.config.learner;
  const auto& tc = report.config.tutor;
  const auto& sc = report.config.strategy;
  std::ostringstream os;
  os << "haptutor-report v1\n";
  os << "plan participants=" << plan.participants << " replications=" << plan.replications
     << " base_seed=" << plan.base_seed << " forget_minutes=" << fixed6(plan.forget_minutes)
     << " cutoff_minutes=" << fixed6(plan.cutoff_minutes)
     << " spread=" << fixed6(plan.population_spread)
     << " long_term_days=" << plan.long_term_days << '\n';
  os << "learner gain_passive=" << fixed6(lp.gain_passive)
     << " gain_active=" << fixed6(lp.gain_active)
     << " decay_per_min=" << fixed6(lp.decay_per_min)
     << " motor_noise=" << fixed6(lp.motor_noise) << " latency_ms=" << lp.latency_min_ms
     << ".." << lp.latency_max_ms << " recall_threshold=" << fixed6(lp.recall_threshold)
     << '\n';
  os << "tutor delta_t_ms=" << tc.delta_t_ms << " hint_pulse_ms=" << tc.hint_pulse_ms
     << " tempo_scale=" << fixed6(tc.tempo_scale)
     << " hint_scope=" << (tc.hint_scope == HintScope::Full ? "full" : "changed") << '\n';
  os << "strategy advance=" << fixed6(sc.advance_error_threshold)
     << " regress=" << fixed6(sc.regress_error_threshold)
     << " min_passes=" << sc.min_passes_per_phase << '\n';

  auto condition = [&](std::size_t rep, const ConditionSummary& s) {
    os << "condition rep=" << rep << " method=" << to_string(s.method)
       << " trials=" << s.trials << " learned=" << s.learned
       << " mean_rate=" << opt6(s.mean_rate) << " forgot=" << s.forgot
       << " chance=" << opt6(s.forgetting_chance) << '\n';
  };
  for (const auto& rr : report.replications) {
    for (const auto& t : rr.trials) {
      os << "trial rep=" << t.replication << " participant=" << t.participant
         << " order=" << t.order << " song=" << to_string(t.song)
         << " method=" << to_string(t.method) << " learned=" << (t.learned ? 1 : 0)
         << " minutes=" << fixed6(static_cast<double>(t.learning_ms) / 60000.0)
         << " rate=" << opt6(t.rate) << " passes=" << t.passes << " exams=" << t.exams
         << " reexam=" << (t.reexam ? (t.reexam->pass ? "pass" : "fail") : "na")
         << " forgotten=";
      if (t.reexam) {
        os << t.reexam->forgotten_notes;
      } else {
        os << "na";
      }
      os << '\n';
    }
    condition(rr.replication, rr.static_summary);
    condition(rr.replication, rr.dynamic_summary);
    os << "direction rep=" << rr.replication
       << " rate_dynamic_higher=" << (rr.dynamic_rate_higher() ? 1 : 0)
       << " chance_dynamic_lower=" << (rr.dynamic_chance_lower() ? 1 : 0) << '\n';
  }

  for (StrategyKind k : {StrategyKind::Static, StrategyKind::Dynamic}) {
    double rate_sum = 0;
    double chance_sum = 0;
    std::size_t rate_n = 0;
    std::size_t chance_n = 0;
    for (const auto& rr : report.replications) {
      const auto& s = k == StrategyKind::Static ? rr.static_summary : rr.dynamic_summary;
      if (s.mean_rate) {
        rate_sum += *s.mean_rate;
        ++rate_n;
      }
      if (s.forgetting_chance) {
        chance_sum += *s.forgetting_chance;
        ++chance_n;
      }
    }
    os << "summary method=" << to_string(k) << " mean_rate="
       << (rate_n ? fixed6(rate_sum / static_cast<double>(rate_n)) : "na")
       << " mean_chance="
       << (chance_n ? fixed6(chance_sum / static_cast<double>(chance_n)) : "na") << '\n';
  }
  auto sign = [&](const char* metric, const SignTest& t) {
    os << "signtest metric=" << metric << " positive=" << t.positive
       << " negative=" << t.negative << " ties=" << t.ties << " p=" << fixed6(t.p_value)
       << '\n';
  };
  sign("learning_rate", report.rate_sign_test());
  sign("forgetting_chance", report.chance_sign_test());
  os << "directional rate_dynamic_higher=" << report.rate_dynamic_higher() << '/'
     << report.replications.size() << " chance_dynamic_lower=" << report.chance_dynamic_lower()
     << '/' << report.replications.size() << '\n';
  if (!report.long_term.empty()) {
    os << "longterm static_minutes=" << fixed6(report.long_term_static_minutes)
       << " dynamic_minutes=" << fixed6(report.long_term_dynamic_minutes) << '\n';
  }
  for (const auto& pt : report.long_term) {
    os << "curve day=" << pt.day << " static_ratio=" << fixed6(pt.static_ratio)
       << " dynamic_ratio=" << fixed6(pt.dynamic_ratio)
       << " static_relearn_minutes=" << fixed6(pt.static_relearn_minutes)
       << " dynamic_relearn_minutes=" << fixed6(pt.dynamic_relearn_minutes) << '\n';
  }
  return os.str();
}

std::string format_pass_log(const ExperimentReport& report) {
  std::ostringstream os;
  for (const auto& p : report.passes) {
    os << "pass rep=" << p.replication << " participant=" << p.participant
       << " order=" << p.order << " song=" << to_string(p.song)
       << " method=" << to_string(p.method) << " kind=" << p.kind
       << " phase=" << to_string(p.phase) << " mistakes=" << p.mistakes
       << " notes=" << p.notes << " duration_ms=" << p.duration_ms << '\n';
  }
  return os.str();
}

std::string render_table(std::string_view report_text) {
  struct Totals {
    std::size_t trials = 0;
    std::size_t learned = 0;
    std::size_t forgot = 0;
  };
  std::map<std::string, Totals> totals;
  std::string forget_minutes = "30";
  detail::for_each_line(report_text, [&](std::size_t line_no,
                                         const std::vector<std::string_view>& tok) {
    std::map<std::string_view, std::string_view> kv;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto eq = tok[i].find('=');
      if (eq != std::string_view::npos) kv[tok[i].substr(0, eq)] = tok[i].substr(eq + 1);
    }
    if (tok[0] == "plan" && kv.count("forget_minutes")) {
      const double v = detail::parse_double(kv["forget_minutes"], line_no);
      forget_minutes = detail::format_double(v);
    } else if (tok[0] == "condition") {
      if (!kv.count("method") || !kv.count("learned") || !kv.count("forgot")) {
        throw ParseError(line_no, "malformed condition record");
      }
      auto& t = totals[std::string(kv["method"])];
      t.trials += static_cast<std::size_t>(detail::parse_int(kv["trials"], line_no));
      t.learned += static_cast<std::size_t>(detail::parse_int(kv["learned"], line_no));
      t.forgot += static_cast<std::size_t>(detail::parse_int(kv["forgot"], line_no));
    }
  });
  if (totals.empty()) throw ParseError(1, "report has no condition records");

  const std::string h2 = "Number of Learning Success";
  const std::string h3 = "Number of Forgetting after " + forget_minutes + " minutes";
  std::ostringstream os;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c,
                 const std::string& d) {
    os << a << std::string(20 - std::min<std::size_t>(a.size(), 19), ' ') << b
       << std::string(h2.size() + 2 - std::min(b.size(), h2.size() + 1), ' ') << c
       << std::string(h3.size() + 2 - std::min(c.size(), h3.size() + 1), ' ') << d << '\n';
  };
  row("Learning Strategy", h2, h3, "Forgetting Chance");
  for (const char* method : {"static", "dynamic"}) {
    auto it = totals.find(method);
    if (it == totals.end()) continue;
    const Totals& t = it->second;
    std::string name = method;
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    const std::string chance =
        t.learned ? detail::format_fixed(100.0 * static_cast<double>(t.forgot) /
                                             static_cast<double>(t.learned),
                                         2) +
                        "%"
                  : "na";
    row(name, std::to_string(t.learned), std::to_string(t.forgot), chance);
  }
  return os.str();
}

}  // namespace haptutor
