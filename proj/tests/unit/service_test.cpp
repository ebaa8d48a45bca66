#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "haptutor/error.hpp"
#include "haptutor/service.hpp"

using namespace haptutor;
using namespace haptutor::service;
using Json = nlohmann::json;

namespace {

const FingeringChart& chart() { return default_chart(); }

const ScoreLibrary& library() {
  static const ScoreLibrary lib = [] {
    ScoreLibrary l = ScoreLibrary::builtin(chart());
    l.add("short", load_score("tempo 120\nnote 0 0 500\nnote 3 500 500\nnote 3 1000 500\n",
                              chart()));
    return l;
  }();
  return lib;
}

std::string rec(Json j) {
  j["v"] = kSchemaVersion;
  return j.dump();
}

std::string frame_rec(const FingerPattern& fp) {
  Json values = Json::array();
  for (std::size_t i = 0; i < kHoleCount; ++i) values.push_back(fp.closed(i) ? 1.0 : 0.0);
  return rec({{"type", "frame"}, {"values", values}});
}

const FingerPattern kUnmapped = FingerPattern::parse("OXOXOX");

// Drives a session the way a flawless learner would: it follows the pass and
// exam announcements and fingers each note from its onset, lifting to an
// unmapped fingering before a repeated pitch and between activities.
class PerfectClient {
 public:
  PerfectClient(Session& s, Millis tick = 10) : s_(s), tick_(tick) {
    for (auto& r : s_.open()) take(r);
  }

  void send(std::string r) { pending_.push_back(std::move(r)); }

  void run_until(Millis until, bool play = true) {
    while (now_ < until && !done_) {
      now_ += tick_;
      if (play) pending_.push_back(frame_rec(pattern_at(now_)));
      const auto out = s_.pump(pending_, now_);
      pending_.clear();
      for (const auto& r : out) take(r);
    }
  }

  bool done() const { return done_; }
  const std::vector<Json>& records() const { return records_; }
  const std::vector<std::string>& raw() const { return raw_; }
  std::vector<Json> of_type(const std::string& type) const {
    std::vector<Json> out;
    for (const auto& r : records_) {
      if (r["type"] == type) out.push_back(r);
    }
    return out;
  }

 private:
  void take(const std::string& text) {
    raw_.push_back(text);
    Json j = Json::parse(text);
    if (j["type"] == "pass" || j["type"] == "exam") {
      start_ = j["t"].get<Millis>();
      end_ = j["ends_at"].get<Millis>();
    }
    if (j["type"] == "session" && j["state"] == "done") done_ = true;
    records_.push_back(std::move(j));
  }

  FingerPattern pattern_at(Millis t) const {
    if (!start_ || t < *start_ || t >= *end_) return kUnmapped;
    const auto& notes = s_.score().notes;
    const Millis rel = t - *start_;
    if (rel >= notes.back().end_ms()) return kUnmapped;
    std::size_t k = 0;
    while (k + 1 < notes.size() && notes[k + 1].onset_ms <= rel) ++k;
    if (k + 1 < notes.size() && notes[k + 1].pitch == notes[k].pitch &&
        rel >= notes[k + 1].onset_ms - 60) {
      return kUnmapped;
    }
    return chart().pattern_for(notes[k].pitch);
  }

  Session& s_;
  Millis tick_;
  Millis now_ = 0;
  std::vector<std::string> pending_;
  std::optional<Millis> start_, end_;
  bool done_ = false;
  std::vector<Json> records_;
  std::vector<std::string> raw_;
};

std::unique_ptr<Session> make(std::string_view score, StrategyKind k,
                              const EngineConfig& cfg = {}) {
  return create_session(library(), "t1", score, k, chart(), cfg);
}

std::vector<std::string> states(const std::vector<Json>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (r["type"] == "session" && (out.empty() || out.back() != r["state"])) {
      out.push_back(r["state"]);
    }
  }
  return out;
}

}  // namespace

TEST(Session, DescriptorTables) {
  auto dyn = make("song_a", StrategyKind::Dynamic);
  EXPECT_EQ(dyn->descriptor().table,
            (PhaseTable{Phase::Mandatory, Phase::Hinted, Phase::Adaptive, Phase::Test}));
  const Json open = Json::parse(dyn->open().at(0));
  EXPECT_EQ(open["type"], "session");
  EXPECT_EQ(open["cause"], "in:0");
  EXPECT_EQ(open["t"], 0);
  EXPECT_EQ(open["state"], "idle");
  EXPECT_EQ(open["table"], Json::parse(R"(["mandatory","hinted","adaptive","test"])"));
  EXPECT_THROW(dyn->open(), SessionError);

  auto st = make("song_b", StrategyKind::Static);
  EXPECT_EQ(st->descriptor().table, (PhaseTable{Phase::Mandatory, Phase::Test}));
}

TEST(Session, UnknownScore) {
  EXPECT_THROW(make("nope", StrategyKind::Dynamic), SessionError);
  SessionHub hub(ScoreLibrary::builtin(chart()), chart(), {});
  EXPECT_THROW(hub.create("nope", StrategyKind::Static), SessionError);
  EXPECT_EQ(hub.size(), 0u);
  Session& s = hub.create("song_a", StrategyKind::Static);
  EXPECT_EQ(s.descriptor().id, "s1");
  EXPECT_EQ(hub.create("song_b", StrategyKind::Static).descriptor().id, "s2");
  EXPECT_EQ(hub.find("s1"), &s);
  hub.remove("s1");
  EXPECT_EQ(hub.find("s1"), nullptr);
}

TEST(Session, PerfectDynamicLearnerFinishes) {
  auto s = make("song_a", StrategyKind::Dynamic);
  PerfectClient c(*s);
  c.send(rec({{"type", "start"}}));
  c.run_until(120000);
  ASSERT_TRUE(c.done());

  std::vector<std::string> phases;
  for (const auto& p : c.of_type("pass")) phases.push_back(p["phase"]);
  EXPECT_EQ(phases, (std::vector<std::string>{"mandatory", "hinted", "adaptive"}));
  EXPECT_TRUE(c.of_type("mistake").empty());
  // only the frame that shared the final pump with the end of the exam is refused
  for (const auto& e : c.of_type("error")) {
    EXPECT_EQ(e["message"], "session is done");
    EXPECT_EQ(e["t"], c.records().back()["t"]);
  }

  const auto metrics = c.of_type("metrics");
  ASSERT_EQ(metrics.size(), 4u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(metrics[i]["mistakes"], 0);
  const Json& last = metrics.back();
  EXPECT_EQ(last["kind"], "exam");
  EXPECT_EQ(last["pass"], true);
  EXPECT_EQ(last["final"], true);
  EXPECT_EQ(last["forgotten"], 0);
  EXPECT_GT(last["learning_rate"].get<double>(), 0.0);
  EXPECT_EQ(states(c.records()),
            (std::vector<std::string>{"idle", "running", "exam", "done"}));
}

TEST(Session, PerfectStaticLearnerFinishes) {
  auto s = make("song_b", StrategyKind::Static);
  PerfectClient c(*s);
  c.send(rec({{"type", "start"}}));
  c.run_until(60000);
  ASSERT_TRUE(c.done());
  EXPECT_EQ(c.of_type("pass").size(), 1u);
  EXPECT_EQ(c.of_type("metrics").back()["pass"], true);
}

TEST(Session, SilentLearnerInAdaptivePhase) {
  auto s = make("short", StrategyKind::Dynamic);
  PerfectClient c(*s);
  c.send(rec({{"type", "phase"}, {"phase", "adaptive"}}));
  c.send(rec({{"type", "start"}}));
  c.run_until(1800, false);
  const auto mistakes = c.of_type("mistake");
  ASSERT_EQ(mistakes.size(), 3u);
  EXPECT_EQ(mistakes[0]["t"], 10 + 200);
  EXPECT_EQ(mistakes[2]["score_time"], 10 + 1000);
  // every mistake is followed by a corrective clutch record at the same time
  const auto clutches = c.of_type("clutch");
  ASSERT_GE(clutches.size(), 3u);
  EXPECT_EQ(clutches[0]["t"], mistakes[0]["t"]);
  EXPECT_EQ(clutches[0]["fingers"], Json::parse(R"(["down","down","down","down","down","down"])"));
}

TEST(Session, StartAfterDoneIsRejected) {
  auto s = make("short", StrategyKind::Static);
  s->open();
  s->pump(std::vector<std::string>{rec({{"type", "start"}}), rec({{"type", "stop"}})}, 10);
  EXPECT_EQ(s->descriptor().state, SessionState::Done);
  const auto out = s->pump(std::vector<std::string>{rec({{"type", "start"}})}, 20);
  ASSERT_EQ(out.size(), 1u);
  const Json err = Json::parse(out[0]);
  EXPECT_EQ(err["type"], "error");
  EXPECT_EQ(err["cause"], "in:3");
  EXPECT_EQ(err["message"], "session is done");
}

TEST(Session, StopBeforeStartIsRejected) {
  auto s = make("short", StrategyKind::Static);
  s->open();
  const auto out = s->pump(std::vector<std::string>{rec({{"type", "stop"}})}, 0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(Json::parse(out[0])["type"], "error");
  EXPECT_EQ(s->descriptor().state, SessionState::Idle);
}

TEST(Session, MalformedRecords) {
  auto s = make("short", StrategyKind::Dynamic);
  s->open();
  const std::vector<std::string> in{
      "{not json",
      R"({"v":1})",
      R"({"v":2,"type":"start"})",
      rec({{"type", "frame"}, {"values", {1, 1, 1}}}),
      rec({{"type", "frame"}, {"values", {1, 1, 1, 1, 1, 2}}}),
      rec({{"type", "phase"}, {"phase", "warp"}}),
      rec({{"type", "teleport"}}),
      rec({{"type", "create"}}),
      "{\"v\":1,\"type\":\"\xff\xfe\"}"};
  const auto out = s->pump(in, 5);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Json j = Json::parse(out[i]);
    EXPECT_EQ(j["type"], "error");
    EXPECT_EQ(j["cause"], "in:" + std::to_string(i + 1));
  }
}

TEST(Session, StaticTableRejectsHintedPhase) {
  auto s = make("short", StrategyKind::Static);
  s->open();
  const auto out = s->pump(std::vector<std::string>{rec({{"type", "phase"}, {"phase", "hinted"}})}, 0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(Json::parse(out[0])["type"], "error");
}

TEST(Session, CausesAndClock) {
  auto s = make("song_a", StrategyKind::Dynamic);
  PerfectClient c(*s, 7);
  c.send(rec({{"type", "start"}}));
  c.run_until(4000);
  c.send(rec({{"type", "snapshot"}}));
  c.send(rec({{"type", "exam"}}));
  c.run_until(90000);
  ASSERT_TRUE(c.done());
  Millis last_t = 0;
  for (const auto& r : c.records()) {
    ASSERT_EQ(r["v"], kSchemaVersion);
    ASSERT_TRUE(r.contains("t"));
    const std::string cause = r["cause"];
    ASSERT_TRUE(cause == "tick" || cause.rfind("in:", 0) == 0) << cause;
    if (cause != "tick") {
      EXPECT_LE(std::stoul(cause.substr(3)), s->inbound_count());
    }
    EXPECT_LE(r["t"].get<Millis>(), s->now());
    if (r["type"] == "session") {
      EXPECT_GE(r["t"].get<Millis>(), last_t);
      last_t = r["t"];
    }
  }
  // the snapshot answers its own record
  std::size_t snapshots = 0;
  for (const auto& r : c.of_type("clutch")) {
    if (r["source"] == "device") {
      ++snapshots;
      EXPECT_EQ(r["arm_mm"].size(), kHoleCount);
    }
  }
  EXPECT_EQ(snapshots, 1u);
}

TEST(Session, RequestedExamInterruptsPractice) {
  auto s = make("song_a", StrategyKind::Dynamic);
  PerfectClient c(*s);
  c.send(rec({{"type", "start"}}));
  c.run_until(1000);
  c.send(rec({{"type", "exam"}}));
  c.send(rec({{"type", "exam"}}));
  c.run_until(20000, false);
  EXPECT_EQ(c.of_type("error").size(), 1u);  // second request
  const auto exams = c.of_type("exam");
  ASSERT_EQ(exams.size(), 1u);
  // the exam waits for the mandatory pass to end
  EXPECT_EQ(exams[0]["t"], 10 + 8000 + 1000);
  const auto metrics = c.of_type("metrics");
  ASSERT_EQ(metrics.size(), 2u);
  EXPECT_EQ(metrics[1]["kind"], "exam");
  EXPECT_EQ(metrics[1]["pass"], false);
  // the silent exam fails and the session resumes the interrupted phase
  EXPECT_EQ(c.of_type("phase").back()["phase"], "mandatory");
  EXPECT_EQ(states(c.records()),
            (std::vector<std::string>{"idle", "running", "exam", "running"}));
}

TEST(Session, StateMachineNeverSkips) {
  const std::vector<std::pair<std::string, std::string>> allowed{
      {"idle", "running"}, {"running", "exam"}, {"exam", "running"},
      {"exam", "done"},    {"running", "done"}};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = make("short", seed % 2 ? StrategyKind::Dynamic : StrategyKind::Static);
    PerfectClient c(*s);
    std::mt19937_64 rng(seed);
    const char* kinds[] = {"start", "stop", "exam", "snapshot", "phase"};
    for (int step = 0; step < 40 && !c.done(); ++step) {
      const std::string k = kinds[rng() % 5];
      Json r{{"type", k}};
      if (k == "phase") r["phase"] = rng() % 2 ? "mandatory" : "test";
      if (k != "stop" || rng() % 4 == 0) c.send(rec(r));
      c.run_until(static_cast<Millis>(step + 1) * 700, rng() % 3 != 0);
    }
    const auto st = states(c.records());
    for (std::size_t i = 1; i < st.size(); ++i) {
      EXPECT_NE(std::find(allowed.begin(), allowed.end(), std::pair(st[i - 1], st[i])),
                allowed.end())
          << st[i - 1] << " -> " << st[i] << " seed " << seed;
    }
  }
}

TEST(Session, RecordReplaysBytewise) {
  auto s = make("song_a", StrategyKind::Dynamic);
  PerfectClient c(*s, 9);
  c.send(rec({{"type", "start"}}));
  c.run_until(5000);
  c.send(rec({{"type", "snapshot"}}));
  c.send(rec({{"type", "phase"}, {"phase", "adaptive"}}));
  c.run_until(70000);
  ASSERT_TRUE(c.done());
  EXPECT_EQ(replay_record(s->record(), chart()), c.raw());
  EXPECT_THROW(replay_record("", chart()), SessionError);
  EXPECT_THROW(replay_record("{}\n", chart()), SessionError);
}

TEST(Session, EmptyPumpsDoNotChangeOutput) {
  // same inbound at the same times, pumped every 10 ms or only when needed
  auto dense = make("short", StrategyKind::Dynamic);
  auto sparse = make("short", StrategyKind::Dynamic);
  std::vector<std::string> a = dense->open(), b = sparse->open();
  std::map<Millis, std::vector<std::string>> script;
  script[20] = {rec({{"type", "start"}})};
  script[260] = {frame_rec(chart().pattern_for(Pitch{0}))};
  script[900] = {frame_rec(chart().pattern_for(Pitch{3}))};
  script[4000] = {frame_rec(kUnmapped)};
  script[6000] = {rec({{"type", "stop"}})};
  for (Millis t = 0; t <= 6000; t += 10) {
    auto it = script.find(t);
    const std::vector<std::string> in = it == script.end() ? std::vector<std::string>{} : it->second;
    for (auto& r : dense->pump(in, t)) a.push_back(r);
    if (!in.empty()) {
      for (auto& r : sparse->pump(in, t)) b.push_back(r);
    }
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(replay_record(sparse->record(), chart()), b);
}

TEST(Session, ClockMustNotRegress) {
  auto s = make("short", StrategyKind::Dynamic);
  s->open();
  s->pump({}, 100);
  EXPECT_THROW(s->pump({}, 99), TimeError);
}

TEST(Session, CommandsReachTheDevice) {
  EngineConfig cfg;
  cfg.link.delay_ms = 15;
  auto s = make("short", StrategyKind::Dynamic, cfg);
  s->open();
  s->pump(std::vector<std::string>{rec({{"type", "start"}})}, 0);
  s->pump({}, 14);
  EXPECT_EQ(s->device().finger(0).clutch, Clutch::Detached);
  s->pump({}, 15);
  // mandatory pass holds XXXXXX for note 0
  for (std::size_t f = 0; f < kHoleCount; ++f) {
    EXPECT_EQ(s->device().finger(f).clutch, Clutch::AttachedDown);
  }
  // release at the end of the pass (1500) arrives at 1515
  s->pump({}, 1514);
  EXPECT_EQ(s->device().finger(0).clutch, Clutch::AttachedDown);
  s->pump({}, 1515);
  for (std::size_t f = 0; f < kHoleCount; ++f) {
    EXPECT_EQ(s->device().finger(f).clutch, Clutch::Detached);
  }
  // the silent learner repeats the mandatory pass after the gap
  s->pump({}, 2515);
  for (std::size_t f = 0; f < kHoleCount; ++f) {
    EXPECT_EQ(s->device().finger(f).clutch, Clutch::AttachedDown);
  }
  EXPECT_EQ(s->link_errors(), 0u);
}
