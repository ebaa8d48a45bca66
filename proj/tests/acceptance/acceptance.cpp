// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "haptutor/device.hpp"
#include "haptutor/random.hpp"
#include "haptutor/reference.hpp"
#include "haptutor/service.hpp"
#include "haptutor/simlab.hpp"
#include "haptutor/strategy.hpp"
#include "haptutor/tutor.hpp"
#include "haptutor/wire.hpp"

using namespace haptutor;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

const FingeringChart& chart() { return default_chart(); }

Verdict range_formula() {
  Verdict v;
  const Millimeters r = free_range(ServoGeometry{Millimeters(40), Millimeters(10)});
  if (r != Millimeters(15)) return {false, "free_range(40,10) != 15"};
  Rng rng(101);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const Millimeters width(rng.uniform_int(1, 1000000), rng.uniform_int(1, 10000));
    const Millimeters track = width + Millimeters(rng.uniform_int(1, 1000000),
                                                  rng.uniform_int(1, 10000));
    if (2 * free_range({track, width}) + width != track) ++bad;
  }
  v.ok = bad == 0;
  v.detail = "free_range(40,10)=15 exactly, identity violations " + std::to_string(bad) + "/1000";
  return v;
}

Verdict oracle_equivalence() {
  const auto s = reference::compare_adaptive(10000, 1, chart(), 200);
  return {s.agreed == s.cases && s.cases == 10000,
          "agreement " + std::to_string(s.agreed) + "/" + std::to_string(s.cases)};
}

// Replays a command log into a servo simulator with no link delay.
ServoSimulator drive(const std::vector<LogEntry>& log) {
  ServoSimulator sim;
  for (const auto& e : log) {
    if (const auto* c = std::get_if<TimedCommand>(&e)) sim.apply(c->cmd, c->at_ms);
  }
  return sim;
}

Verdict mode_invariants() {
  std::size_t mandatory_bad = 0, hinted_bad = 0, adaptive_bad = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto c = reference::random_case(seed + 50000, chart(), 200);
    const Millis tick = 1 + static_cast<Millis>(seed % 20);

    TutorSession mandatory(c.score, chart(), Mode::Mandatory);
    run_to_completion(mandatory, c.trace, tick);
    auto sim = drive(mandatory.log());
    sim.advance_to(mandatory.completion_ms() + 1);
    for (const auto& n : mandatory.timeline()) {
      const FingerPattern& fp = mandatory.pattern(n.index);
      for (std::size_t f = 0; f < kHoleCount; ++f) {
        if (sim.attached_dwell(f, n.onset_ms, n.end_ms) != n.end_ms - n.onset_ms) ++mandatory_bad;
      }
      // the last command at or before the onset must hold the note's fingering
      for (std::size_t f = 0; f < kHoleCount; ++f) {
        std::optional<Clutch> held;
        for (const auto& t : sim.transitions()) {
          if (t.finger == f && t.at_ms <= n.onset_ms) held = t.clutch;
        }
        const Clutch want = fp.closed(f) ? Clutch::AttachedDown : Clutch::AttachedUp;
        if (held != want) ++mandatory_bad;
      }
    }

    TutorSession hinted(c.score, chart(), Mode::Hinted);
    run_to_completion(hinted, c.trace, tick);
    auto hsim = drive(hinted.log());
    hsim.advance_to(hinted.completion_ms() + 1000);
    const Millis pulse = hinted.config().hint_pulse_ms;
    const auto& tl = hinted.timeline();
    for (std::size_t i = 0; i < tl.size(); ++i) {
      const Millis to = i + 1 < tl.size() ? tl[i + 1].onset_ms : hsim.now();
      for (std::size_t f = 0; f < kHoleCount; ++f) {
        if (hsim.attached_dwell(f, tl[i].onset_ms, to) > pulse + tick) ++hinted_bad;
      }
    }

    TutorSession adaptive(c.score, chart(), Mode::Adaptive);
    run_to_completion(adaptive, c.trace, tick);
    bool reported = false;
    for (const auto& e : adaptive.log()) {
      if (std::holds_alternative<MistakeReport>(e)) reported = true;
      if (std::holds_alternative<TimedCommand>(e) && !reported) ++adaptive_bad;
    }
  }
  const std::size_t total = mandatory_bad + hinted_bad + adaptive_bad;
  return {total == 0, "violations mandatory=" + std::to_string(mandatory_bad) +
                          " hinted=" + std::to_string(hinted_bad) +
                          " adaptive=" + std::to_string(adaptive_bad) + " over 1000 sessions"};
}

const std::pair<Score, Score>& songs() {
  static const auto pair =
      generate_matched_pair(service::kBuiltinPairSeed, MatchParams{}, chart());
  return pair;
}

ExperimentReport experiment(ExperimentPlan plan, const SimlabConfig& cfg = {}) {
  return run_protocol(plan, cfg, songs().first, songs().second, chart());
}

Verdict determinism() {
  ExperimentPlan plan;
  plan.participants = 16;
  plan.replications = 20;
  plan.base_seed = 1;
  const std::string first = format_report(experiment(plan));
  const std::string second = format_report(experiment(plan));
  plan.jobs = 4;
  const std::string parallel = format_report(experiment(plan));
  const bool same = first == second;
  const bool par = first == parallel;
  return {same && par, std::string("repeat ") + (same ? "identical" : "differs") +
                           ", parallel(4) " + (par ? "identical" : "differs") + ", " +
                           std::to_string(first.size()) + " bytes"};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Verdict directional() {
  ExperimentPlan plan;
  plan.replications = 20;
  plan.long_term_days = 0;
  const auto base = experiment(plan);
  const std::size_t n = base.replications.size();
  const std::size_t rate = base.rate_dynamic_higher();
  const std::size_t chance = base.chance_dynamic_lower();
  const bool direction = rate * 10 >= n * 9 && chance * 10 >= n * 9;

  SimlabConfig equal;
  equal.learner.gain_active = equal.learner.gain_passive;
  const auto control = experiment(plan, equal);
  const SignTest ct = control.chance_sign_test();
  const SignTest rt = control.rate_sign_test();
  const bool vanished = ct.p_value >= 0.05;

  double sr = 0, dr = 0, sc = 0, dc = 0;
  for (const auto& r : base.replications) {
    sr += r.static_summary.mean_rate.value_or(0);
    dr += r.dynamic_summary.mean_rate.value_or(0);
    sc += r.static_summary.forgetting_chance.value_or(0);
    dc += r.dynamic_summary.forgetting_chance.value_or(0);
  }
  const double k = static_cast<double>(n);
  std::ostringstream os;
  os << "dynamic rate higher " << rate << "/" << n << ", chance lower " << chance << "/" << n
     << "; mean rate static " << fmt(sr / k) << " dynamic " << fmt(dr / k)
     << " %/min, chance static " << fmt(sc / k) << " dynamic " << fmt(dc / k)
     << "; equal gains: chance sign test p=" << fmt(ct.p_value) << " (+" << ct.positive << " -"
     << ct.negative << " =" << ct.ties << "), rate sign test p=" << fmt(rt.p_value)
     << " (informational)";
  return {direction && vanished, os.str()};
}

Verdict wire_protocol() {
  using namespace wire;
  Rng rng(606);
  auto random_frame = [&] {
    Frame f;
    f.kind = static_cast<Kind>(rng.uniform_int(0, 2));
    f.seq = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    f.payload.resize(static_cast<std::size_t>(rng.uniform_int(0, kMaxPayload)));
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return f;
  };

  std::size_t roundtrip_bad = 0;
  Decoder dec;
  for (int i = 0; i < 10000; ++i) {
    const Frame f = random_frame();
    const auto out = dec.feed(encode(f));
    if (out.size() != 1 || out[0] != f) ++roundtrip_bad;
  }
  if (dec.error_count() != 0) ++roundtrip_bad;

  // Flip one bit of the logical frame (header, payload or CRC), re-stuff it,
  // and require the decoder to drop it.
  std::size_t flips_accepted = 0;
  const auto heartbeat = encode(Frame{Kind::Heartbeat, 0, {}});
  for (int i = 0; i < 10000; ++i) {
    const Frame f = random_frame();
    std::vector<std::uint8_t> logical{static_cast<std::uint8_t>(f.kind), f.seq,
                                      static_cast<std::uint8_t>(f.payload.size())};
    for (auto b : f.payload) logical.push_back(b);
    const std::uint16_t crc = crc16_ccitt(logical);
    logical.push_back(static_cast<std::uint8_t>(crc >> 8));
    logical.push_back(static_cast<std::uint8_t>(crc & 0xFF));
    const auto bit = static_cast<std::size_t>(rng.uniform_int(0, logical.size() * 8 - 1));
    logical[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    std::vector<std::uint8_t> bytes{kSync};
    for (auto b : logical) {
      if (b == kSync || b == kEscape) {
        bytes.push_back(kEscape);
        bytes.push_back(b ^ kEscapeXor);
      } else {
        bytes.push_back(b);
      }
    }
    Decoder d;
    auto got = d.feed(bytes);
    const auto tail = d.feed(heartbeat);
    got.insert(got.end(), tail.begin(), tail.end());
    if (got.size() != 1 || got[0].kind != Kind::Heartbeat) ++flips_accepted;
  }

  std::size_t resync_bad = 0;
  for (int run = 0; run < 100; ++run) {
    Decoder d;
    std::vector<std::uint8_t> noise(10 * 1024);
    for (auto& b : noise) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    for (const auto& f : d.feed(noise)) {
      if (f.payload.size() > kMaxPayload) ++resync_bad;
    }
    const Frame f = random_frame();
    const auto out = d.feed(encode(f));
    if (out.empty() || out.back() != f || !d.idle()) ++resync_bad;
  }
  std::ostringstream os;
  os << "round-trip failures " << roundtrip_bad << "/10000, bit flips accepted " << flips_accepted
     << "/10000, resync failures " << resync_bad << "/100 noise runs of 10 KB";
  return {roundtrip_bad == 0 && flips_accepted == 0 && resync_bad == 0, os.str()};
}

Verdict glove() {
  const long double pi = std::numbers::pi_v<long double>;
  const double eq = glove_ab(GloveLinkage{30, 30}, pi / 3);
  Rng rng(707);
  std::size_t violations = 0;
  double min_step = 1e300;
  constexpr int kGrid = 10000;
  for (int k = 0; k < 100; ++k) {
    const GloveLinkage l{rng.uniform(1, 100), rng.uniform(1, 100)};
    double prev = glove_ab(l, pi / (kGrid + 1));
    for (int i = 2; i <= kGrid; ++i) {
      const double ab = glove_ab(l, pi * i / (kGrid + 1));
      if (!(ab > prev) || ab - prev < -1e-12) ++violations;
      min_step = std::min(min_step, ab - prev);
      prev = ab;
    }
  }
  std::ostringstream os;
  os << "AB(pi/3;30,30)=" << fmt(eq) << (eq == 30.0 ? " exactly" : " (inexact)")
     << ", ordering violations " << violations << " over 100x10000 grid, smallest step "
     << fmt(min_step) << " mm";
  return {eq == 30.0 && violations == 0, os.str()};
}

Verdict matched_pairs() {
  std::size_t bad = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto [a, b] = generate_matched_pair(seed, MatchParams{}, chart());
    if (pitch_range(a) != pitch_range(b) || interval_count(a) != interval_count(b) ||
        movement_count(a, chart()) != movement_count(b, chart()) || a.pitches() == b.pitches()) {
      ++bad;
    }
  }
  return {bad == 0, "mismatched pairs " + std::to_string(bad) + "/100"};
}

Verdict exam_grading() {
  const Score& s = songs().first;
  const auto base = s.pitches();
  std::size_t bad = 0, edits = 0;
  if (!grade_exam(s, performance_events(base)).pass) ++bad;
  auto check = [&](const std::vector<Pitch>& played, std::size_t forgotten) {
    ++edits;
    const auto r = grade_exam(s, performance_events(played));
    if (r.pass || r.forgotten_notes != forgotten) ++bad;
  };
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto del = base;
    del.erase(del.begin() + static_cast<long>(i));
    check(del, 1);
    for (int d = 0; d < static_cast<int>(chart().size()); ++d) {
      if (Pitch{d} == base[i]) continue;
      auto sub = base;
      sub[i] = Pitch{d};
      check(sub, 1);
      auto ins = base;
      ins.insert(ins.begin() + static_cast<long>(i), Pitch{d});
      check(ins, 0);
    }
  }
  auto chance = [](std::size_t fails) {
    std::vector<ExamResult> r(16);
    for (std::size_t i = 0; i < 16; ++i) r[i].pass = i >= fails;
    return forgetting_chance(r);
  };
  const double seven = chance(7), one = chance(1);
  const bool table = seven == 0.4375 && one == 0.0625;
  std::ostringstream os;
  os << "grading errors " << bad << " over exact + " << edits
     << " single edits; forgetting_chance 7/16=" << seven << " 1/16=" << one;
  return {bad == 0 && table, os.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {1, "range formula", 1, range_formula},
      {2, "adaptive oracle equivalence", 30, oracle_equivalence},
      {3, "mode invariants", 30, mode_invariants},
      {4, "determinism", 60, determinism},
      {5, "directional replication", 120, directional},
      {6, "wire protocol", 10, wire_protocol},
      {7, "glove kinematics", 10, glove},
      {8, "matched-pair generator", 10, matched_pairs},
      {9, "exam grading", 10, exam_grading},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool ok = v.ok && in_time;
    if (!ok) ++failures;
    std::printf("criterion %d %s: %s (%.2f s, limit %.0f s%s) %s\n", c.id, c.name,
                ok ? "PASS" : "FAIL", secs, c.limit_s, in_time ? "" : ", too slow",
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
