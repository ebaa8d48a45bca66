#pragma once

// Slow, obviously-correct versions of the detection paths, used as oracles
// by the tests and the `haptutor oracle` command.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "haptutor/score.hpp"
#include "haptutor/sensing.hpp"
#include "haptutor/tutor.hpp"

namespace haptutor::reference {

// Mistakes by scanning every millisecond of each note's window and asking
// which pitch is sounding (the latest event at or before that instant).
// Scores are taken at their written tempo.
std::vector<MistakeReport> scan_mistakes(const Score& score,
                                         std::span<const PitchEvent> trace,
                                         Millis delta_t_ms);

// Debounced events by splitting the frame stream into runs of equal
// fingerings and keeping the runs that lasted long enough.
std::vector<PitchEvent> scan_debounce(std::span<const SensorFrame> frames,
                                      const FingeringChart& chart, SensingConfig cfg);

struct OracleCase {
  Score score;
  std::vector<PitchEvent> trace;
  // 0 = event-driven ticking.
  Millis tick_ms = 0;
};

// Random score and event trace with events clustered on window edges.
OracleCase random_case(std::uint64_t seed, const FingeringChart& chart, Millis delta_t_ms);

// Random frame stream with bursts shorter and longer than the debounce.
std::vector<SensorFrame> random_frames(std::uint64_t seed, const FingeringChart& chart,
                                       std::size_t count, Millis debounce_ms);

// Mistake reports from an adaptive-mode engine run of the case.
std::vector<MistakeReport> engine_mistakes(const OracleCase& c, const FingeringChart& chart,
                                           Millis delta_t_ms);

struct OracleSummary {
  std::size_t cases = 0;
  std::size_t agreed = 0;
  std::optional<std::uint64_t> first_disagreement;
};

// Case k uses seed base_seed + k.
OracleSummary compare_adaptive(std::size_t cases, std::uint64_t base_seed,
                               const FingeringChart& chart, Millis delta_t_ms = 200);

}  // namespace haptutor::reference
