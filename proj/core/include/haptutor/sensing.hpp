#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "haptutor/score.hpp"

namespace haptutor {

// One sample of the six capacitive hole sensors, 1.0 = fully covered.
struct SensorFrame {
  Millis t_ms = 0;
  std::array<double, kHoleCount> values{};

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

// Start of a stable fingering; pitch is empty for patterns not in the chart.
struct PitchEvent {
  Millis t_ms = 0;
  std::optional<Pitch> pitch;

  friend bool operator==(const PitchEvent&, const PitchEvent&) = default;
};

struct SensingConfig {
  double threshold = 0.5;
  Millis debounce_ms = 30;
};

// A hole is closed iff its value reaches the threshold.
FingerPattern decode_pattern(const SensorFrame& f, double threshold);

// Streaming debouncer. A fingering is reported once it has been held for at
// least debounce_ms (held until the latest frame, or until the frame that
// replaced it); the event carries the time of its first frame. Output is
// change-compressed.
class PitchDetector {
 public:
  PitchDetector(const FingeringChart& chart, SensingConfig cfg = {});

  // Returns the events this frame completes (at most two: the replaced
  // fingering and, with zero debounce, the new one). Throws TimeError on
  // out-of-order frames.
  std::vector<PitchEvent> push(const SensorFrame& f);

  std::optional<FingerPattern> current_pattern() const { return run_pattern_; }
  const std::optional<PitchEvent>& last_event() const { return last_; }

 private:
  void try_emit(Millis held_until, std::vector<PitchEvent>& out);

  const FingeringChart* chart_;
  SensingConfig cfg_;
  std::optional<Millis> last_t_;
  std::optional<FingerPattern> run_pattern_;
  Millis run_start_ = 0;
  bool run_reported_ = false;
  std::optional<PitchEvent> last_;
};

std::vector<PitchEvent> events_from_frames(std::span<const SensorFrame> frames,
                                           const FingeringChart& chart,
                                           SensingConfig cfg = {});

// Recorded trace: one "t v1 v2 v3 v4 v5 v6" line per frame, '#' comments.
std::vector<SensorFrame> parse_trace(std::string_view text);
std::vector<SensorFrame> load_trace_file(const std::string& path);
std::string format_trace(std::span<const SensorFrame> frames);

SensorFrame frame_for_pattern(Millis t, const FingerPattern& fp);

// Frames every period_ms that finger each note's pattern from its onset until
// the next onset, ending period_ms after the last note.
std::vector<SensorFrame> synthesize_trace(const Score& score, const FingeringChart& chart,
                                          Millis period_ms = 10);

}  // namespace haptutor
