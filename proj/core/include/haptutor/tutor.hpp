#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "haptutor/device.hpp"
#include "haptutor/score.hpp"
#include "haptutor/sensing.hpp"

namespace haptutor {

enum class Mode { Mandatory, Hinted, Adaptive };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

// Which fingers a hinted onset pulses.
enum class HintScope { Changed, Full };

struct TutorConfig {
  // Mistake window after each note's score time.
  Millis delta_t_ms = 200;
  Millis hint_pulse_ms = 60;
  // Playback speed relative to the score; 0.5 plays at half speed.
  double tempo_scale = 1.0;
  HintScope hint_scope = HintScope::Changed;

  void validate() const;
};

struct ScheduledNote {
  std::size_t index = 0;
  Pitch pitch;
  Millis onset_ms = 0;
  Millis end_ms = 0;

  friend bool operator==(const ScheduledNote&, const ScheduledNote&) = default;
};

// Note timeline at the configured tempo. Throws ConfigError if the scale
// would merge distinct onsets at millisecond resolution.
std::vector<ScheduledNote> schedule(const Score& score, const TutorConfig& cfg);

struct MistakeReport {
  std::size_t note_index = 0;
  Millis score_time_ms = 0;
  Millis detected_at_ms = 0;

  friend bool operator==(const MistakeReport&, const MistakeReport&) = default;
};

// Playback note-on for the audio channel.
struct AudioCue {
  Millis at_ms = 0;
  std::size_t note_index = 0;
  Pitch pitch;

  friend bool operator==(const AudioCue&, const AudioCue&) = default;
};

struct TimedCommand {
  Millis at_ms = 0;
  ActuatorCommand cmd;

  friend bool operator==(const TimedCommand&, const TimedCommand&) = default;
};

struct TickOutput {
  std::vector<TimedCommand> commands;
  std::vector<MistakeReport> mistakes;
  std::vector<AudioCue> cues;

  bool empty() const { return commands.empty() && mistakes.empty() && cues.empty(); }
};

using LogEntry = std::variant<AudioCue, TimedCommand, MistakeReport>;

Millis log_time(const LogEntry& e);
// One line per entry: "<ms> cue|cmd|mistake key=value...". Stable field order.
std::string format_log(std::span<const LogEntry> log);

enum class NoteStatus { Pending, Satisfied, Missed };

// One playthrough of a score in one guidance mode. Ticks must be serialized;
// all time is supplied by the caller.
//
// A note with score time t is satisfied when the learner's sounding pitch is
// correct at some instant of [t, t + delta_t]: either the fingering held at t
// (latest event at or before t) or an event inside the window. Notes are
// monitored in every mode; only the adaptive mode reports and corrects.
class TutorSession {
 public:
  TutorSession(const Score& score, const FingeringChart& chart, Mode mode,
               TutorConfig cfg = {});

  // Processes everything scheduled up to and including now, interleaved
  // with the new events by timestamp. Events must be ordered, not newer than
  // now, and not older than previously delivered events. Throws TimeError.
  TickOutput tick(Millis now, std::span<const PitchEvent> new_events);

  Mode mode() const { return mode_; }
  const TutorConfig& config() const { return cfg_; }
  const std::vector<ScheduledNote>& timeline() const { return timeline_; }
  const FingerPattern& pattern(std::size_t note) const { return patterns_.at(note); }

  bool finished() const { return next_point_ == points_.size(); }
  // Time of the last scheduled action: past the final note's end and window.
  Millis completion_ms() const;
  std::optional<Millis> next_due_ms() const;

  NoteStatus status(std::size_t note) const { return status_.at(note); }
  std::size_t mistake_count() const;
  const std::vector<LogEntry>& log() const { return log_; }
  std::string log_text() const { return format_log(log_); }

 private:
  enum class PointKind { Deadline = 0, End = 1, Onset = 2 };
  struct Point {
    Millis at_ms;
    PointKind kind;
    std::size_t note;
  };

  void process_event(const PitchEvent& ev, TickOutput& out);
  void process_point(const Point& p, TickOutput& out);
  void emit_command(Millis at, const ActuatorCommand& cmd, TickOutput& out);
  void emit_pattern_hold(Millis at, const FingerPattern& fp, TickOutput& out);
  void emit_release(Millis at, TickOutput& out);

  Mode mode_;
  TutorConfig cfg_;
  std::vector<ScheduledNote> timeline_;
  std::vector<FingerPattern> patterns_;
  std::vector<Point> points_;
  std::size_t next_point_ = 0;
  std::vector<NoteStatus> status_;
  std::vector<std::size_t> open_windows_;
  std::optional<Pitch> held_;
  std::optional<std::size_t> corrective_hold_;
  Millis hold_started_ms_ = 0;
  Millis last_now_ = std::numeric_limits<Millis>::min();
  Millis last_event_ms_ = std::numeric_limits<Millis>::min();
  Millis last_log_ms_ = std::numeric_limits<Millis>::min();
  std::vector<LogEntry> log_;
};

// Drives a fresh session over a recorded event trace until completion.
// tick_ms = 0 ticks only at event and schedule times; a positive value ticks
// on a fixed grid. Both produce the same log.
const std::vector<LogEntry>& run_to_completion(TutorSession& session,
                                               std::span<const PitchEvent> trace,
                                               Millis tick_ms = 0);

}  // namespace haptutor
