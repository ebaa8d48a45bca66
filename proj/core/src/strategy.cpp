#include "haptutor/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "haptutor/error.hpp"

namespace haptutor {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Mandatory:
      return "mandatory";
    case Phase::Hinted:
      return "hinted";
    case Phase::Adaptive:
      return "adaptive";
    case Phase::Test:
      return "test";
  }
  return "?";
}

Phase phase_from_string(std::string_view s) {
  if (s == "mandatory") return Phase::Mandatory;
  if (s == "hinted") return Phase::Hinted;
  if (s == "adaptive") return Phase::Adaptive;
  if (s == "test") return Phase::Test;
  throw ConfigError("unknown phase '" + std::string(s) + "'");
}

std::optional<Mode> mode_for(Phase p) {
  switch (p) {
    case Phase::Mandatory:
      return Mode::Mandatory;
    case Phase::Hinted:
      return Mode::Hinted;
    case Phase::Adaptive:
      return Mode::Adaptive;
    case Phase::Test:
      break;
  }
  return std::nullopt;
}

std::string_view to_string(StrategyKind k) {
  return k == StrategyKind::Static ? "static" : "dynamic";
}

StrategyKind strategy_from_string(std::string_view s) {
  if (s == "static") return StrategyKind::Static;
  if (s == "dynamic") return StrategyKind::Dynamic;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

const PhaseTable& phase_table(StrategyKind kind) {
  static const PhaseTable dynamic{Phase::Mandatory, Phase::Hinted, Phase::Adaptive,
                                  Phase::Test};
  static const PhaseTable static_table{Phase::Mandatory, Phase::Test};
  return kind == StrategyKind::Dynamic ? dynamic : static_table;
}

void StrategyConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(advance_error_threshold) || !unit(regress_error_threshold)) {
    throw ConfigError("strategy thresholds must lie in [0, 1]");
  }
  if (!(regress_error_threshold > advance_error_threshold)) {
    throw ConfigError("regress threshold must exceed advance threshold");
  }
  if (min_passes_per_phase < 1) throw ConfigError("min_passes_per_phase must be >= 1");
}

double PassOutcome::mistake_fraction() const {
  if (note_count == 0) return 0.0;
  return static_cast<double>(mistake_count) / static_cast<double>(note_count);
}

Phase next_phase(const PhaseTable& table, Phase current, const PassOutcome& outcome,
                 std::span<const PassOutcome> history, const StrategyConfig& cfg) {
  if (outcome.phase != current) {
    throw ValidationError("pass outcome belongs to phase " +
                          std::string(to_string(outcome.phase)) + ", not " +
                          std::string(to_string(current)));
  }
  if (outcome.mistake_count > outcome.note_count) {
    throw ValidationError("more mistakes than notes");
  }
  auto it = std::find(table.begin(), table.end(), current);
  if (it == table.end()) {
    throw ValidationError("phase " + std::string(to_string(current)) +
                          " is not in the phase table");
  }
  const auto idx = static_cast<std::size_t>(it - table.begin());

  if (current == Phase::Test) {
    if (outcome.mistake_count == 0 || idx == 0) return current;
    return table[idx - 1];
  }

  const double fraction = outcome.mistake_fraction();
  if (idx > 0 && fraction >= cfg.regress_error_threshold) return table[idx - 1];

  int streak = 1;
  for (auto h = history.rbegin(); h != history.rend() && h->phase == current; ++h) {
    ++streak;
  }
  if (fraction <= cfg.advance_error_threshold && streak >= cfg.min_passes_per_phase &&
      idx + 1 < table.size()) {
    return table[idx + 1];
  }
  return current;
}

Phase next_phase(Phase current, const PassOutcome& outcome,
                 std::span<const PassOutcome> history, const StrategyConfig& cfg) {
  return next_phase(phase_table(StrategyKind::Dynamic), current, outcome, history, cfg);
}

std::size_t lcs_length(std::span<const Pitch> a, std::span<const Pitch> b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

ExamResult grade_exam(const Score& score, std::span<const PitchEvent> events,
                      ExamStrictness strictness) {
  ExamResult r;
  for (const auto& ev : events) {
    if (ev.pitch) r.played.push_back(*ev.pitch);
  }
  const std::vector<Pitch> expected = score.pitches();
  r.forgotten_notes = expected.size() - lcs_length(expected, r.played);
  if (strictness == ExamStrictness::Exact) {
    r.pass = r.played == expected;
  } else {
    r.pass = std::search(r.played.begin(), r.played.end(), expected.begin(),
                         expected.end()) != r.played.end();
  }
  return r;
}

std::vector<PitchEvent> performance_events(std::span<const Pitch> pitches,
                                           Millis start_ms, Millis ioi_ms) {
  std::vector<PitchEvent> out;
  for (std::size_t k = 0; k < pitches.size(); ++k) {
    const Millis t = start_ms + static_cast<Millis>(k) * ioi_ms;
    if (!out.empty() && out.back().pitch == pitches[k]) {
      out.push_back({out.back().t_ms + ioi_ms / 2, std::nullopt});
    }
    out.push_back({t, pitches[k]});
  }
  return out;
}

double learning_rate(double fraction_learned, double minutes) {
  if (!(minutes > 0.0)) throw ValidationError("learning time must be positive");
  if (!(fraction_learned >= 0.0 && fraction_learned <= 1.0)) {
    throw ValidationError("learned fraction must lie in [0, 1]");
  }
  return 100.0 * fraction_learned / minutes;
}

double forgetting_ratio(std::size_t forgotten, std::size_t total) {
  if (total == 0) throw ValidationError("forgetting ratio needs at least one note");
  if (forgotten > total) throw ValidationError("more forgotten notes than notes");
  return static_cast<double>(forgotten) / static_cast<double>(total);
}

double forgetting_chance(std::span<const ExamResult> results) {
  if (results.empty()) throw ValidationError("forgetting chance of no exams");
  const auto failed = std::count_if(results.begin(), results.end(),
                                    [](const ExamResult& r) { return !r.pass; });
  return static_cast<double>(failed) / static_cast<double>(results.size());
}

SignTest sign_test(std::span<const double> differences) {
  SignTest t;
  for (double d : differences) {
    if (d > 0) {
      ++t.positive;
    } else if (d < 0) {
      ++t.negative;
    } else {
      ++t.ties;
    }
  }
  const std::size_t n = t.positive + t.negative;
  if (n == 0) return t;
  const std::size_t k = std::min(t.positive, t.negative);
  // P(X <= k) for X ~ Binomial(n, 1/2).
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    tail += std::exp(std::lgamma(static_cast<double>(n) + 1) -
                     std::lgamma(static_cast<double>(i) + 1) -
                     std::lgamma(static_cast<double>(n - i) + 1) -
                     static_cast<double>(n) * std::log(2.0));
  }
  t.p_value = std::min(1.0, 2.0 * tail);
  return t;
}

}  // namespace haptutor
