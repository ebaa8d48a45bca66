#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "haptutor/score.hpp"
#include "haptutor/sensing.hpp"
#include "haptutor/strategy.hpp"
#include "haptutor/tutor.hpp"

namespace haptutor {

// Simulated learner. Mastery is the chance of recalling a note; it decays
// toward the consolidation floor between sessions. Consolidation grows only
// through unguided successes: each one closes the share
// (gain_active - gain_passive) / gain_active of the gap to mastery.
struct LearnerParams {
  double gain_passive = 0.15;
  double gain_active = 0.4;
  double decay_per_min = 0.05;
  double motor_noise = 0.05;
  Millis latency_min_ms = 0;
  Millis latency_max_ms = 150;
  // An unguided performance recalls a note iff its mastery reaches this.
  double recall_threshold = 0.7;

  void validate() const;
};

struct LearnerModel {
  LearnerParams params;
  std::vector<double> mastery;
  std::vector<double> consolidation;

  static LearnerModel fresh(std::size_t notes, const LearnerParams& params);
};

struct PassResult {
  std::vector<PitchEvent> trace;
  PassOutcome outcome;
  LearnerModel learner;
};

// One guided playthrough in a practice phase, scored by a TutorSession in
// the phase's mode. Deterministic per seed. Throws ValidationError for Test.
PassResult simulate_pass(const LearnerModel& learner, const Score& score,
                         const FingeringChart& chart, Phase phase,
                         const TutorConfig& tutor, std::uint64_t seed,
                         Millis link_delay_ms = 10);

// Exponential decay toward consolidation. Throws ValidationError if
// elapsed_minutes < 0.
LearnerModel forget(const LearnerModel& learner, double elapsed_minutes);

struct ExamAttempt {
  std::vector<PitchEvent> events;
  ExamResult result;
  Millis duration_ms = 0;
};

// Unguided reproduction: a note is recalled iff its mastery reaches the
// recall threshold; a lapse is either skipped or replaced by a wrong pitch
// (the seed picks which). Exams do not change the learner.
ExamAttempt simulate_exam(const LearnerModel& learner, const Score& score,
                          const FingeringChart& chart, ExamStrictness strictness,
                          std::uint64_t seed);

enum class Song { A, B };

std::string_view to_string(Song s);

struct TrialAssignment {
  Song song;
  StrategyKind method;
};

// Counterbalancing rows: participant p uses row p % 4.
std::array<TrialAssignment, 2> counterbalanced_trials(std::size_t participant);

struct ExperimentPlan {
  std::size_t participants = 16;
  std::size_t replications = 1;
  std::uint64_t base_seed = 1;
  double forget_minutes = 30.0;
  double cutoff_minutes = 60.0;
  // Per-participant multiplicative spread of both gains.
  double population_spread = 0.2;
  std::size_t long_term_days = 5;
  std::size_t jobs = 1;

  void validate() const;
};

struct SimlabConfig {
  LearnerParams learner;
  TutorConfig tutor;
  StrategyConfig strategy;
  Millis link_delay_ms = 10;
};

struct PassRecord {
  std::size_t replication = 0;
  std::size_t participant = 0;
  int order = 1;
  Song song = Song::A;
  StrategyKind method = StrategyKind::Static;
  // "pass", "exam" or "reexam".
  std::string kind;
  Phase phase = Phase::Mandatory;
  std::size_t mistakes = 0;
  std::size_t notes = 0;
  Millis duration_ms = 0;
};

struct TrialRecord {
  std::size_t replication = 0;
  std::size_t participant = 0;
  int order = 1;
  Song song = Song::A;
  StrategyKind method = StrategyKind::Static;
  bool learned = false;
  Millis learning_ms = 0;
  std::optional<double> rate;  // percent per minute, learners only
  std::size_t passes = 0;
  std::size_t exams = 0;
  std::optional<ExamResult> reexam;
};

struct ConditionSummary {
  StrategyKind method = StrategyKind::Static;
  std::size_t trials = 0;
  std::size_t learned = 0;
  std::size_t forgot = 0;
  std::optional<double> mean_rate;
  std::optional<double> forgetting_chance;
};

struct ReplicationReport {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::vector<TrialRecord> trials;
  ConditionSummary static_summary;
  ConditionSummary dynamic_summary;

  bool dynamic_rate_higher() const;
  bool dynamic_chance_lower() const;
};

struct CurvePoint {
  std::size_t day = 0;
  double static_ratio = 0;
  double dynamic_ratio = 0;
  double static_relearn_minutes = 0;
  double dynamic_relearn_minutes = 0;
};

struct ExperimentReport {
  ExperimentPlan plan;
  SimlabConfig config;
  std::vector<ReplicationReport> replications;
  std::vector<PassRecord> passes;
  // Single-subject multi-day follow-up, static on song A, dynamic on song B.
  std::vector<CurvePoint> long_term;
  double long_term_static_minutes = 0;
  double long_term_dynamic_minutes = 0;

  SignTest rate_sign_test() const;
  SignTest chance_sign_test() const;
  std::size_t rate_dynamic_higher() const;
  std::size_t chance_dynamic_lower() const;
};

ConditionSummary summarize(std::span<const TrialRecord> trials, StrategyKind method);

// Runs the counterbalanced two-song protocol (learn until the exam passes,
// forget, re-exam) for every participant and replication. Results are
// identical for any jobs count.
ExperimentReport run_protocol(const ExperimentPlan& plan, const SimlabConfig& cfg,
                              const Score& song_a, const Score& song_b,
                              const FingeringChart& chart);

std::string format_report(const ExperimentReport& report);
std::string format_pass_log(const ExperimentReport& report);
// Forgetting-chance table from a formatted report, summed over replications.
std::string render_table(std::string_view report_text);

}  // namespace haptutor
