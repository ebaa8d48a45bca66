#pragma once

// Practice sessions driven over a message channel.
//
// Every record is a JSON object carrying the schema version "v". Inbound
// records name a "type": create, frame, start, stop, phase, exam, snapshot.
// Outbound records add the session clock "t" and a "cause", either
// "in:<n>" for the n-th inbound record of the session (create is 0) or
// "tick" for scheduled work. The schema is documented in docs/channel.md.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "haptutor/config.hpp"
#include "haptutor/device.hpp"
#include "haptutor/score.hpp"
#include "haptutor/sensing.hpp"
#include "haptutor/strategy.hpp"
#include "haptutor/tutor.hpp"
#include "haptutor/wire.hpp"

namespace haptutor::service {

inline constexpr int kSchemaVersion = 1;

// Seed of the built-in matched song pair.
inline constexpr std::uint64_t kBuiltinPairSeed = 2024;

enum class SessionState { Idle, Running, Exam, Done };

std::string_view to_string(SessionState s);

class ScoreLibrary {
 public:
  void add(std::string id, Score score);
  bool contains(std::string_view id) const;
  // Throws SessionError for unknown ids.
  const Score& get(std::string_view id) const;
  std::vector<std::string> ids() const;

  // "song_a" and "song_b" from generate_matched_pair(kBuiltinPairSeed).
  static ScoreLibrary builtin(const FingeringChart& chart);
  // Every *.score file in a directory, keyed by file stem.
  static ScoreLibrary from_directory(const std::string& dir, const FingeringChart& chart);

 private:
  std::map<std::string, Score, std::less<>> scores_;
};

struct SessionDescriptor {
  std::string id;
  std::string score_id;
  StrategyKind strategy = StrategyKind::Dynamic;
  TutorConfig tutor;
  PhaseTable table;
  Phase phase = Phase::Mandatory;
  SessionState state = SessionState::Idle;
};

class Session;

// Throws SessionError for an unknown score id.
std::unique_ptr<Session> create_session(const ScoreLibrary& library, std::string id,
                                        std::string_view score_id, StrategyKind strategy,
                                        const FingeringChart& chart,
                                        const EngineConfig& cfg);

// One learner working through a score. Not thread-safe; pumps must be
// serialized and their clock must not run backwards.
class Session {
 public:
  Session(std::string id, std::string score_id, Score score, const FingeringChart& chart,
          StrategyKind strategy, const EngineConfig& cfg);

  const SessionDescriptor& descriptor() const { return desc_; }
  const Score& score() const { return score_; }

  // Session record announcing the descriptor, attributed to the create
  // request. Emitted once, at session time 0.
  std::vector<std::string> open();

  // Runs scheduled work due by now, then handles the inbound records in
  // arrival order. Malformed or rejected records produce "error" records.
  // Throws TimeError if now regresses.
  std::vector<std::string> pump(std::span<const std::string> inbound, Millis now);

  Millis now() const { return now_; }
  std::size_t inbound_count() const { return inbound_seq_; }
  const ServoSimulator& device() const { return device_; }
  std::size_t link_errors() const { return link_rx_.error_count(); }

  // Replayable transcript: a header line with the creation parameters,
  // configuration and score text, then one line per pump that carried inbound records,
  // then the final clock.
  std::string record() const;

 private:
  struct Practice {
    std::size_t index;
    Phase phase;
    Millis start_ms;
    std::unique_ptr<TutorSession> tutor;
    std::size_t log_seen = 0;
  };
  struct ExamRun {
    std::size_t index;
    Millis start_ms;
    Millis end_ms;
    std::vector<PitchEvent> events;
    // Phase to resume after a failed exam requested outside the Test phase.
    std::optional<Phase> resume;
  };
  struct DeviceCommand {
    Millis due_ms;
    std::vector<std::uint8_t> bytes;
  };

  void advance(Millis now, std::vector<std::string>& out);
  void handle(const std::string& text, std::size_t seq, std::vector<std::string>& out);
  void deliver_events(std::span<const PitchEvent> events, Millis now,
                      const std::string& cause, std::vector<std::string>& out);
  void tick_practice(Millis now, std::span<const PitchEvent> events,
                     const std::string& cause, std::vector<std::string>& out);
  void begin_activity(Millis at, const std::string& cause, std::vector<std::string>& out);
  void finish_practice(const std::string& cause, std::vector<std::string>& out);
  void finish_exam(const std::string& cause, std::vector<std::string>& out);
  void set_state(SessionState s, Millis at, const std::string& cause,
                 std::vector<std::string>& out);
  void set_phase(Phase p, Millis at, const std::string& cause,
                 std::vector<std::string>& out);
  void release_all(Millis at, const std::string& cause, std::vector<std::string>& out);
  void error(const std::string& message, const std::string& cause,
             std::vector<std::string>& out) const;
  void send_to_device(const TimedCommand& cmd);
  void run_device(Millis now);

  std::string descriptor_record(Millis at, const std::string& cause) const;
  std::string clutch_record(Millis at, const std::string& cause, bool measured) const;

  SessionDescriptor desc_;
  Score score_;
  const FingeringChart* chart_;
  EngineConfig cfg_;
  PitchDetector detector_;
  std::optional<PitchEvent> sounding_;

  Millis now_ = 0;
  std::size_t inbound_seq_ = 0;
  bool opened_ = false;

  std::optional<Millis> next_activity_ms_;
  bool exam_requested_ = false;
  bool phase_overridden_ = false;
  std::optional<Practice> practice_;
  std::optional<ExamRun> exam_;
  std::size_t activity_count_ = 0;
  std::vector<PassOutcome> history_;
  std::optional<Millis> first_start_ms_;

  std::array<Clutch, kHoleCount> commanded_{};
  wire::Encoder link_tx_;
  wire::Decoder link_rx_;
  std::deque<DeviceCommand> in_flight_;
  ServoSimulator device_;

  std::vector<std::string> record_lines_;
};

// Rebuilds a session from its record and pumps the recorded inbound records
// at their recorded times. Returns every outbound record in order,
// including the opening one. Throws SessionError on a malformed record.
std::vector<std::string> replay_record(std::string_view record, const FingeringChart& chart);

// Sessions keyed by id, for a process serving several learners.
class SessionHub {
 public:
  SessionHub(ScoreLibrary library, FingeringChart chart, EngineConfig cfg);

  // Throws SessionError for an unknown score.
  Session& create(std::string_view score_id, StrategyKind strategy);
  Session* find(std::string_view id);
  void remove(std::string_view id);
  std::size_t size() const { return sessions_.size(); }

  const ScoreLibrary& library() const { return library_; }
  const FingeringChart& chart() const { return chart_; }
  const EngineConfig& config() const { return cfg_; }

 private:
  ScoreLibrary library_;
  FingeringChart chart_;
  EngineConfig cfg_;
  std::uint64_t next_id_ = 1;
  std::map<std::string, std::unique_ptr<Session>, std::less<>> sessions_;
};

// Websocket endpoint. Each connection creates one session with its first
// record ({"v":1,"type":"create","score":...,"strategy":...}); records are
// pumped every tick_ms on a single thread.
class ChannelServer {
 public:
  ChannelServer(SessionHub& hub, unsigned short port, Millis tick_ms);
  ~ChannelServer();
  ChannelServer(const ChannelServer&) = delete;
  ChannelServer& operator=(const ChannelServer&) = delete;

  // Bound port; useful when constructed with port 0.
  unsigned short port() const;
  // Blocks until stop() is called.
  void run();
  // Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace haptutor::service
