#include "haptutor/service.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "haptutor/error.hpp"
#include "text_util.hpp"

namespace haptutor::service {

using Json = nlohmann::ordered_json;

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Idle:
      return "idle";
    case SessionState::Running:
      return "running";
    case SessionState::Exam:
      return "exam";
    case SessionState::Done:
      return "done";
  }
  return "?";
}

namespace {

Json base_record(std::string_view type, Millis t, const std::string& cause,
                 const std::string& session) {
  return Json{{"v", kSchemaVersion},
              {"type", type},
              {"t", t},
              {"cause", cause},
              {"session", session}};
}

// Invalid UTF-8 from a client must not abort serialisation.
std::string encode(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string cause_of(std::size_t seq) { return "in:" + std::to_string(seq); }

}  // namespace

void ScoreLibrary::add(std::string id, Score score) {
  scores_.insert_or_assign(std::move(id), std::move(score));
}

bool ScoreLibrary::contains(std::string_view id) const { return scores_.contains(id); }

const Score& ScoreLibrary::get(std::string_view id) const {
  auto it = scores_.find(id);
  if (it == scores_.end()) throw SessionError("unknown score '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> ScoreLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : scores_) out.push_back(id);
  return out;
}

ScoreLibrary ScoreLibrary::builtin(const FingeringChart& chart) {
  auto [a, b] = generate_matched_pair(kBuiltinPairSeed, MatchParams{}, chart);
  ScoreLibrary lib;
  lib.add("song_a", std::move(a));
  lib.add("song_b", std::move(b));
  return lib;
}

ScoreLibrary ScoreLibrary::from_directory(const std::string& dir,
                                          const FingeringChart& chart) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw SessionError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".score") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  ScoreLibrary lib;
  for (const auto& f : files) lib.add(f.stem().string(), load_score_file(f.string(), chart));
  return lib;
}

std::unique_ptr<Session> create_session(const ScoreLibrary& library, std::string id,
                                        std::string_view score_id, StrategyKind strategy,
                                        const FingeringChart& chart,
                                        const EngineConfig& cfg) {
  const Score& score = library.get(score_id);
  return std::make_unique<Session>(std::move(id), std::string(score_id), score, chart,
                                   strategy, cfg);
}

Session::Session(std::string id, std::string score_id, Score score,
                 const FingeringChart& chart, StrategyKind strategy, const EngineConfig& cfg)
    : score_(std::move(score)),
      chart_(&chart),
      cfg_(cfg),
      detector_(chart, cfg.sensing),
      device_(cfg.device.geometry, cfg.device.arm_speed_mm_s) {
  cfg_.validate();
  validate(score_, chart);
  if (score_.notes.empty()) throw SessionError("score has no notes");
  schedule(score_, cfg_.tutor);  // rejects tempo scales that merge onsets
  desc_.id = std::move(id);
  desc_.score_id = std::move(score_id);
  desc_.strategy = strategy;
  desc_.tutor = cfg_.tutor;
  desc_.table = phase_table(strategy);
  desc_.phase = desc_.table.front();
  desc_.state = SessionState::Idle;
  commanded_.fill(Clutch::Detached);

  Json header{{"v", kSchemaVersion},
              {"session", desc_.id},
              {"score", desc_.score_id},
              {"strategy", std::string(to_string(strategy))},
              {"config", format_config(cfg_)},
              {"score_text", format_score(score_)}};
  record_lines_.push_back(encode(header));
}


std::string Session::descriptor_record(Millis at, const std::string& cause) const {
  Json j = base_record("session", at, cause, desc_.id);
  j["score"] = desc_.score_id;
  j["strategy"] = to_string(desc_.strategy);
  j["state"] = to_string(desc_.state);
  j["phase"] = to_string(desc_.phase);
  Json table = Json::array();
  for (Phase p : desc_.table) table.push_back(to_string(p));
  j["table"] = table;
  j["notes"] = score_.notes.size();
  j["tutor"] = Json{{"delta_t_ms", desc_.tutor.delta_t_ms},
                    {"hint_pulse_ms", desc_.tutor.hint_pulse_ms},
                    {"tempo_scale", desc_.tutor.tempo_scale},
                    {"hint_scope", desc_.tutor.hint_scope == HintScope::Full ? "full"
                                                                              : "changed"}};
  return encode(j);
}

std::string Session::clutch_record(Millis at, const std::string& cause,
                                   bool measured) const {
  Json j = base_record("clutch", at, cause, desc_.id);
  Json fingers = Json::array();
  if (measured) {
    Json arms = Json::array();
    for (const auto& f : device_.fingers()) {
      fingers.push_back(to_string(f.clutch));
      arms.push_back(f.arm_pos_mm);
    }
    j["source"] = "device";
    j["fingers"] = fingers;
    j["arm_mm"] = arms;
  } else {
    for (Clutch c : commanded_) fingers.push_back(to_string(c));
    j["source"] = "command";
    j["fingers"] = fingers;
  }
  return encode(j);
}

void Session::error(const std::string& message, const std::string& cause,
                    std::vector<std::string>& out) const {
  Json j = base_record("error", now_, cause, desc_.id);
  j["message"] = message;
  out.push_back(encode(j));
}

std::vector<std::string> Session::open() {
  if (opened_) throw SessionError("session " + desc_.id + " already opened");
  opened_ = true;
  return {descriptor_record(0, cause_of(0))};
}

std::vector<std::string> Session::pump(std::span<const std::string> inbound, Millis now) {
  if (now < now_) {
    throw TimeError("session clock regressed from " + std::to_string(now_) + " to " +
                    std::to_string(now));
  }
  opened_ = true;
  now_ = now;
  std::vector<std::string> out;
  advance(now, out);
  for (const auto& text : inbound) handle(text, ++inbound_seq_, out);
  run_device(now);
  if (!inbound.empty()) {
    Json line{{"now", now}, {"in", Json::array()}};
    for (const auto& text : inbound) line["in"].push_back(text);
    record_lines_.push_back(encode(line));
  }
  return out;
}

std::string Session::record() const {
  std::string text;
  for (const auto& line : record_lines_) {
    text += line;
    text += '\n';
  }
  text += encode(Json{{"now", now_}, {"in", Json::array()}});
  text += '\n';
  return text;
}

void Session::advance(Millis now, std::vector<std::string>& out) {
  const std::string cause = "tick";
  while (true) {
    if (practice_) {
      tick_practice(now, {}, cause, out);
      if (!practice_->tutor->finished()) break;
      finish_practice(cause, out);
    } else if (exam_) {
      if (exam_->end_ms > now) break;
      finish_exam(cause, out);
    } else if (next_activity_ms_ && *next_activity_ms_ <= now) {
      begin_activity(*next_activity_ms_, cause, out);
    } else {
      break;
    }
  }
}

void Session::handle(const std::string& text, std::size_t seq,
                     std::vector<std::string>& out) {
  const std::string cause = cause_of(seq);
  Json msg;
  try {
    msg = Json::parse(text);
  } catch (const Json::parse_error&) {
    error("malformed record", cause, out);
    return;
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    error("record has no type", cause, out);
    return;
  }
  if (!msg.contains("v") || msg["v"] != kSchemaVersion) {
    error("unsupported schema version", cause, out);
    return;
  }
  const std::string type = msg["type"].get<std::string>();
  if (desc_.state == SessionState::Done) {
    error("session is done", cause, out);
    return;
  }

  if (type == "frame") {
    const auto it = msg.find("values");
    if (it == msg.end() || !it->is_array() || it->size() != kHoleCount) {
      error("frame needs six values", cause, out);
      return;
    }
    SensorFrame f;
    f.t_ms = now_;
    for (std::size_t i = 0; i < kHoleCount; ++i) {
      const auto& v = (*it)[i];
      if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
        error("frame values must be numbers in [0, 1]", cause, out);
        return;
      }
      f.values[i] = v.get<double>();
    }
    const auto events = detector_.push(f);
    deliver_events(events, now_, cause, out);
  } else if (type == "start") {
    if (desc_.state != SessionState::Idle) {
      error("session already started", cause, out);
      return;
    }
    set_state(SessionState::Running, now_, cause, out);
    begin_activity(now_, cause, out);
  } else if (type == "stop") {
    if (desc_.state == SessionState::Idle) {
      error("session not started", cause, out);
      return;
    }
    practice_.reset();
    exam_.reset();
    next_activity_ms_.reset();
    release_all(now_, cause, out);
    set_state(SessionState::Done, now_, cause, out);
  } else if (type == "phase") {
    const auto it = msg.find("phase");
    if (it == msg.end() || !it->is_string()) {
      error("phase record needs a phase name", cause, out);
      return;
    }
    Phase p;
    try {
      p = phase_from_string(it->get<std::string>());
    } catch (const Error& e) {
      error(e.what(), cause, out);
      return;
    }
    if (std::find(desc_.table.begin(), desc_.table.end(), p) == desc_.table.end()) {
      error("phase not in the " + std::string(to_string(desc_.strategy)) + " table", cause,
            out);
      return;
    }
    if (desc_.state == SessionState::Exam) {
      error("phase cannot change during an exam", cause, out);
      return;
    }
    phase_overridden_ = practice_.has_value();
    set_phase(p, now_, cause, out);
  } else if (type == "exam") {
    if (desc_.state == SessionState::Idle) {
      error("session not started", cause, out);
      return;
    }
    if (desc_.state == SessionState::Exam || exam_requested_) {
      error("exam already requested", cause, out);
      return;
    }
    exam_requested_ = true;
    if (!practice_) begin_activity(now_, cause, out);
  } else if (type == "snapshot") {
    run_device(now_);
    out.push_back(descriptor_record(now_, cause));
    out.push_back(clutch_record(now_, cause, true));
  } else if (type == "create") {
    error("session already exists", cause, out);
  } else {
    error("unknown record type '" + type + "'", cause, out);
  }
}

void Session::deliver_events(std::span<const PitchEvent> events, Millis now,
                             const std::string& cause, std::vector<std::string>& out) {
  if (events.empty()) return;
  sounding_ = events.back();
  if (practice_) {
    tick_practice(now, events, cause, out);
  } else if (exam_) {
    for (const auto& ev : events) {
      if (ev.t_ms >= exam_->start_ms && ev.t_ms <= exam_->end_ms) exam_->events.push_back(ev);
    }
  }
}

void Session::tick_practice(Millis now, std::span<const PitchEvent> events,
                            const std::string& cause, std::vector<std::string>& out) {
  Practice& p = *practice_;
  std::vector<PitchEvent> rel;
  rel.reserve(events.size());
  for (const auto& ev : events) rel.push_back({std::max<Millis>(ev.t_ms - p.start_ms, 0), ev.pitch});
  p.tutor->tick(now - p.start_ms, rel);

  const auto& log = p.tutor->log();
  std::size_t i = p.log_seen;
  while (i < log.size()) {
    if (const auto* cue = std::get_if<AudioCue>(&log[i])) {
      Json j = base_record("onset", p.start_ms + cue->at_ms, cause, desc_.id);
      j["pass"] = p.index;
      j["note"] = cue->note_index;
      j["pitch"] = cue->pitch.degree;
      out.push_back(encode(j));
      ++i;
    } else if (const auto* m = std::get_if<MistakeReport>(&log[i])) {
      Json j = base_record("mistake", p.start_ms + m->detected_at_ms, cause, desc_.id);
      j["pass"] = p.index;
      j["note"] = m->note_index;
      j["score_time"] = p.start_ms + m->score_time_ms;
      out.push_back(encode(j));
      ++i;
    } else {
      // Consecutive commands at one instant become one hint or clutch record.
      const auto& first = std::get<TimedCommand>(log[i]);
      const bool pulse = first.cmd.pulse_ms.has_value();
      Json fingers = Json::array();
      Json targets = Json::array();
      while (i < log.size()) {
        const auto* tc = std::get_if<TimedCommand>(&log[i]);
        if (tc == nullptr || tc->at_ms != first.at_ms || tc->cmd.pulse_ms.has_value() != pulse) {
          break;
        }
        TimedCommand abs = *tc;
        abs.at_ms += p.start_ms;
        send_to_device(abs);
        if (pulse) {
          fingers.push_back(tc->cmd.finger);
          targets.push_back(to_string(tc->cmd.target));
        } else {
          commanded_[tc->cmd.finger] = tc->cmd.target;
        }
        ++i;
      }
      const Millis at = p.start_ms + first.at_ms;
      if (pulse) {
        Json j = base_record("hint", at, cause, desc_.id);
        j["pass"] = p.index;
        j["fingers"] = fingers;
        j["targets"] = targets;
        j["pulse_ms"] = *first.cmd.pulse_ms;
        out.push_back(encode(j));
      } else {
        out.push_back(clutch_record(at, cause, false));
      }
    }
  }
  p.log_seen = i;
}

void Session::begin_activity(Millis at, const std::string& cause,
                             std::vector<std::string>& out) {
  next_activity_ms_.reset();
  if (!first_start_ms_) first_start_ms_ = at;
  const std::size_t index = ++activity_count_;

  if (exam_requested_ || desc_.phase == Phase::Test) {
    ExamRun exam;
    exam.index = index;
    exam.start_ms = at;
    const auto timeline = schedule(score_, cfg_.tutor);
    exam.end_ms = at + timeline.back().end_ms + cfg_.tutor.delta_t_ms;
    if (desc_.phase != Phase::Test) exam.resume = desc_.phase;
    exam_requested_ = false;
    exam_ = std::move(exam);
    if (desc_.phase != Phase::Test) set_phase(Phase::Test, at, cause, out);
    set_state(SessionState::Exam, at, cause, out);
    Json j = base_record("exam", at, cause, desc_.id);
    j["pass"] = index;
    j["ends_at"] = exam_->end_ms;
    out.push_back(encode(j));
    return;
  }

  const Mode mode = *mode_for(desc_.phase);
  Practice p{index, desc_.phase, at,
             std::make_unique<TutorSession>(score_, *chart_, mode, cfg_.tutor), 0};
  practice_ = std::move(p);
  phase_overridden_ = false;
  Json j = base_record("pass", at, cause, desc_.id);
  j["pass"] = index;
  j["phase"] = to_string(desc_.phase);
  j["mode"] = to_string(mode);
  j["ends_at"] = at + practice_->tutor->completion_ms();
  out.push_back(encode(j));
  // The fingering already held when the pass starts counts at its first onset.
  if (sounding_) {
    const PitchEvent held = *sounding_;
    tick_practice(at, std::span(&held, 1), cause, out);
  } else {
    tick_practice(at, {}, cause, out);
  }
}

void Session::finish_practice(const std::string& cause, std::vector<std::string>& out) {
  Practice& p = *practice_;
  const Millis end = p.start_ms + p.tutor->completion_ms();
  PassOutcome outcome{p.phase, p.tutor->mistake_count(), score_.notes.size(),
                      p.tutor->completion_ms()};
  Json j = base_record("metrics", end, cause, desc_.id);
  j["kind"] = "practice";
  j["pass"] = p.index;
  j["phase"] = to_string(p.phase);
  j["mistakes"] = outcome.mistake_count;
  j["notes"] = outcome.note_count;
  j["mistake_fraction"] = outcome.mistake_fraction();
  j["elapsed_ms"] = end - *first_start_ms_;
  j["final"] = false;
  out.push_back(encode(j));

  Phase next = desc_.phase;
  if (!phase_overridden_) {
    next = next_phase(desc_.table, p.phase, outcome, history_, cfg_.strategy);
  }
  history_.push_back(outcome);
  practice_.reset();
  phase_overridden_ = false;
  if (next != desc_.phase) set_phase(next, end, cause, out);
  next_activity_ms_ = end + cfg_.service.pass_gap_ms;
}

void Session::finish_exam(const std::string& cause, std::vector<std::string>& out) {
  ExamRun exam = std::move(*exam_);
  exam_.reset();
  const ExamResult r = grade_exam(score_, exam.events, cfg_.strategy.exam_strictness);
  const Millis elapsed = exam.end_ms - *first_start_ms_;

  Json j = base_record("metrics", exam.end_ms, cause, desc_.id);
  j["kind"] = "exam";
  j["pass"] = r.pass;
  j["index"] = exam.index;
  j["phase"] = to_string(Phase::Test);
  j["forgotten"] = r.forgotten_notes;
  j["played"] = r.played.size();
  j["notes"] = score_.notes.size();
  j["elapsed_ms"] = elapsed;
  if (r.pass && elapsed > 0) j["learning_rate"] = learning_rate(1.0, elapsed / 60000.0);
  j["final"] = r.pass;
  out.push_back(encode(j));

  if (r.pass) {
    set_state(SessionState::Done, exam.end_ms, cause, out);
    return;
  }
  PassOutcome outcome{Phase::Test, std::max<std::size_t>(r.forgotten_notes, 1),
                      score_.notes.size(), exam.end_ms - exam.start_ms};
  const Phase next = exam.resume ? *exam.resume
                                 : next_phase(desc_.table, Phase::Test, outcome, history_,
                                              cfg_.strategy);
  history_.push_back(outcome);
  if (next != desc_.phase) set_phase(next, exam.end_ms, cause, out);
  set_state(SessionState::Running, exam.end_ms, cause, out);
  next_activity_ms_ = exam.end_ms + cfg_.service.pass_gap_ms;
}

void Session::set_state(SessionState s, Millis at, const std::string& cause,
                        std::vector<std::string>& out) {
  if (s == desc_.state) return;
  desc_.state = s;
  out.push_back(descriptor_record(at, cause));
}

void Session::set_phase(Phase p, Millis at, const std::string& cause,
                        std::vector<std::string>& out) {
  desc_.phase = p;
  Json j = base_record("phase", at, cause, desc_.id);
  j["phase"] = to_string(p);
  if (auto m = mode_for(p)) {
    j["mode"] = to_string(*m);
  } else {
    j["mode"] = nullptr;
  }
  out.push_back(encode(j));
}

void Session::release_all(Millis at, const std::string& cause,
                          std::vector<std::string>& out) {
  bool any = false;
  for (std::size_t f = 0; f < kHoleCount; ++f) {
    if (commanded_[f] == Clutch::Detached) continue;
    commanded_[f] = Clutch::Detached;
    send_to_device({at, {f, Clutch::Detached, std::nullopt}});
    any = true;
  }
  if (any) out.push_back(clutch_record(at, cause, false));
}

void Session::send_to_device(const TimedCommand& cmd) {
  auto bytes = link_tx_.encode(wire::Kind::Command, wire::pack(wire::to_payload(cmd.cmd)));
  in_flight_.push_back({cmd.at_ms + cfg_.link.delay_ms, std::move(bytes)});
}

void Session::run_device(Millis now) {
  while (!in_flight_.empty() && in_flight_.front().due_ms <= now) {
    const DeviceCommand dc = std::move(in_flight_.front());
    in_flight_.pop_front();
    for (const auto& frame : link_rx_.feed(dc.bytes)) {
      if (frame.kind != wire::Kind::Command) continue;
      if (auto c = wire::unpack_command(frame.payload)) {
        device_.apply(wire::from_payload(*c), std::max(dc.due_ms, device_.now()));
      }
    }
  }
  if (now > device_.now()) device_.advance_to(now);
}

std::vector<std::string> replay_record(std::string_view record, const FingeringChart& chart) {
  std::istringstream in{std::string(record)};
  std::string line;
  if (!std::getline(in, line)) throw SessionError("empty session record");
  std::unique_ptr<Session> session;
  std::vector<std::string> out;
  try {
    const Json header = Json::parse(line);
    const EngineConfig cfg = parse_config(header.at("config").get<std::string>());
    Score score = load_score(header.at("score_text").get<std::string>(), chart);
    session = std::make_unique<Session>(
        header.at("session").get<std::string>(), header.at("score").get<std::string>(),
        std::move(score), chart,
        strategy_from_string(header.at("strategy").get<std::string>()), cfg);
    out = session->open();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json pump = Json::parse(line);
      std::vector<std::string> inbound;
      for (const auto& m : pump.at("in")) inbound.push_back(m.get<std::string>());
      auto batch = session->pump(inbound, pump.at("now").get<Millis>());
      out.insert(out.end(), batch.begin(), batch.end());
    }
  } catch (const Json::exception& e) {
    throw SessionError(std::string("malformed session record: ") + e.what());
  }
  return out;
}

SessionHub::SessionHub(ScoreLibrary library, FingeringChart chart, EngineConfig cfg)
    : library_(std::move(library)), chart_(std::move(chart)), cfg_(std::move(cfg)) {
  cfg_.validate();
}

Session& SessionHub::create(std::string_view score_id, StrategyKind strategy) {
  std::string id = "s" + std::to_string(next_id_);
  auto session = create_session(library_, id, score_id, strategy, chart_, cfg_);
  ++next_id_;
  Session& ref = *session;
  sessions_.emplace(std::move(id), std::move(session));
  return ref;
}

Session* SessionHub::find(std::string_view id) {
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

void SessionHub::remove(std::string_view id) {
  auto it = sessions_.find(id);
  if (it != sessions_.end()) sessions_.erase(it);
}

}  // namespace haptutor::service
