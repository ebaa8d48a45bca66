#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "haptutor/score.hpp"
#include "haptutor/sensing.hpp"
#include "haptutor/tutor.hpp"

namespace haptutor {

enum class Phase { Mandatory, Hinted, Adaptive, Test };

std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);
// Guidance mode used while practising in a phase; nullopt for Test.
std::optional<Mode> mode_for(Phase p);

// Ordered phases a learner moves through, always ending in Test.
using PhaseTable = std::vector<Phase>;

enum class StrategyKind { Static, Dynamic };

std::string_view to_string(StrategyKind k);
StrategyKind strategy_from_string(std::string_view s);

// Dynamic: Mandatory, Hinted, Adaptive, Test. Static: Mandatory, Test.
const PhaseTable& phase_table(StrategyKind kind);

enum class ExamStrictness {
  // The played pitch sequence must equal the score's.
  Exact,
  // The score's sequence must appear contiguously; stray notes outside it
  // are tolerated.
  Contiguous,
};

struct StrategyConfig {
  double advance_error_threshold = 0.15;
  double regress_error_threshold = 0.5;
  int min_passes_per_phase = 1;
  ExamStrictness exam_strictness = ExamStrictness::Exact;

  void validate() const;
};

struct PassOutcome {
  Phase phase = Phase::Mandatory;
  std::size_t mistake_count = 0;
  std::size_t note_count = 0;
  Millis duration_ms = 0;

  double mistake_fraction() const;

  friend bool operator==(const PassOutcome&, const PassOutcome&) = default;
};

// Moves at most one step through the table. Advances when the mistake
// fraction is at or below the advance threshold and the phase has been
// practised min_passes_per_phase times in a row (this pass included);
// regresses when it reaches the regress threshold. The first phase never
// regresses. In Test any mistake sends the learner back one phase.
Phase next_phase(const PhaseTable& table, Phase current, const PassOutcome& outcome,
                 std::span<const PassOutcome> history, const StrategyConfig& cfg);
Phase next_phase(Phase current, const PassOutcome& outcome,
                 std::span<const PassOutcome> history, const StrategyConfig& cfg);

struct ExamResult {
  std::vector<Pitch> played;
  bool pass = false;
  // Score length minus the longest common subsequence with the performance.
  std::size_t forgotten_notes = 0;
};

std::size_t lcs_length(std::span<const Pitch> a, std::span<const Pitch> b);

ExamResult grade_exam(const Score& score, std::span<const PitchEvent> events,
                      ExamStrictness strictness = ExamStrictness::Exact);

// Events for playing a pitch sequence one note every ioi_ms from start_ms.
// Repeated pitches are re-articulated through a brief unmapped fingering so
// the stream stays change-compressed.
std::vector<PitchEvent> performance_events(std::span<const Pitch> pitches,
                                           Millis start_ms = 0, Millis ioi_ms = 500);

// Percent of a piece per minute. Throws ValidationError unless minutes > 0.
double learning_rate(double fraction_learned, double minutes);
// Throws ValidationError unless 0 <= forgotten <= total and total > 0.
double forgetting_ratio(std::size_t forgotten, std::size_t total);
// Share of failed exams. Throws ValidationError on an empty list.
double forgetting_chance(std::span<const ExamResult> results);

struct SignTest {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t ties = 0;
  double p_value = 1.0;  // two-sided, exact binomial
};

SignTest sign_test(std::span<const double> differences);

}  // namespace haptutor
