#include <gtest/gtest.h>

#include <functional>

#include "haptutor/error.hpp"
#include "haptutor/random.hpp"
#include "haptutor/strategy.hpp"

using namespace haptutor;

namespace {

PassOutcome pass(Phase p, std::size_t mistakes, std::size_t notes = 16) {
  return PassOutcome{p, mistakes, notes, 8000};
}

Score melody(std::vector<int> degrees) {
  Score s;
  Millis t = 0;
  for (int d : degrees) {
    s.notes.push_back({Pitch{d}, t, 400});
    t += 500;
  }
  return s;
}

std::vector<Pitch> pitches(std::vector<int> degrees) {
  std::vector<Pitch> out;
  for (int d : degrees) out.push_back(Pitch{d});
  return out;
}

// Exponential-time LCS straight from the recursive definition.
std::size_t naive_lcs(std::span<const Pitch> a, std::span<const Pitch> b) {
  if (a.empty() || b.empty()) return 0;
  if (a.back() == b.back()) return 1 + naive_lcs(a.first(a.size() - 1), b.first(b.size() - 1));
  return std::max(naive_lcs(a.first(a.size() - 1), b), naive_lcs(a, b.first(b.size() - 1)));
}

}  // namespace

TEST(PhaseTables, ByStrategy) {
  EXPECT_EQ(phase_table(StrategyKind::Dynamic),
            (PhaseTable{Phase::Mandatory, Phase::Hinted, Phase::Adaptive, Phase::Test}));
  EXPECT_EQ(phase_table(StrategyKind::Static), (PhaseTable{Phase::Mandatory, Phase::Test}));
  EXPECT_EQ(mode_for(Phase::Hinted), Mode::Hinted);
  EXPECT_FALSE(mode_for(Phase::Test));
  EXPECT_EQ(phase_from_string("adaptive"), Phase::Adaptive);
  EXPECT_THROW(phase_from_string("bogus"), ConfigError);
  EXPECT_THROW(strategy_from_string("bogus"), ConfigError);
}

TEST(NextPhase, Examples) {
  const StrategyConfig cfg;
  EXPECT_EQ(next_phase(Phase::Mandatory, pass(Phase::Mandatory, 0), {}, cfg), Phase::Hinted);
  EXPECT_EQ(next_phase(Phase::Hinted, pass(Phase::Hinted, 16), {}, cfg), Phase::Mandatory);
  // 4/16 = 0.25 sits between 0.15 and 0.5
  EXPECT_EQ(next_phase(Phase::Adaptive, pass(Phase::Adaptive, 4), {}, cfg), Phase::Adaptive);
}

TEST(NextPhase, Boundaries) {
  const StrategyConfig cfg;
  // 0.125 <= 0.15 advances; 8/16 = 0.5 regresses
  EXPECT_EQ(next_phase(Phase::Adaptive, pass(Phase::Adaptive, 2), {}, cfg), Phase::Test);
  EXPECT_EQ(next_phase(Phase::Adaptive, pass(Phase::Adaptive, 8), {}, cfg), Phase::Hinted);
  // the first phase never regresses
  EXPECT_EQ(next_phase(Phase::Mandatory, pass(Phase::Mandatory, 16), {}, cfg),
            Phase::Mandatory);
}

TEST(NextPhase, TestPhase) {
  const StrategyConfig cfg;
  EXPECT_EQ(next_phase(Phase::Test, pass(Phase::Test, 0), {}, cfg), Phase::Test);
  EXPECT_EQ(next_phase(Phase::Test, pass(Phase::Test, 1), {}, cfg), Phase::Adaptive);
  EXPECT_EQ(next_phase(phase_table(StrategyKind::Static), Phase::Test, pass(Phase::Test, 1), {},
                       cfg),
            Phase::Mandatory);
}

TEST(NextPhase, MinimumPasses) {
  StrategyConfig cfg;
  cfg.min_passes_per_phase = 3;
  const std::vector<PassOutcome> none;
  const std::vector<PassOutcome> one{pass(Phase::Hinted, 0)};
  const std::vector<PassOutcome> two{pass(Phase::Mandatory, 0), pass(Phase::Hinted, 3),
                                     pass(Phase::Hinted, 1)};
  EXPECT_EQ(next_phase(Phase::Hinted, pass(Phase::Hinted, 0), none, cfg), Phase::Hinted);
  EXPECT_EQ(next_phase(Phase::Hinted, pass(Phase::Hinted, 0), one, cfg), Phase::Hinted);
  EXPECT_EQ(next_phase(Phase::Hinted, pass(Phase::Hinted, 0), two, cfg), Phase::Adaptive);
}

TEST(NextPhase, MovesAtMostOneStep) {
  const StrategyConfig cfg;
  const auto& table = phase_table(StrategyKind::Dynamic);
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Phase cur = table[rng.uniform_int(0, 3)];
    const std::size_t notes = rng.uniform_int(1, 20);
    const auto o = pass(cur, rng.uniform_int(0, static_cast<std::int64_t>(notes)), notes);
    const Phase next = next_phase(cur, o, {}, cfg);
    const auto pos = [&](Phase p) { return std::find(table.begin(), table.end(), p) - table.begin(); };
    EXPECT_LE(std::abs(pos(next) - pos(cur)), 1);
  }
}

TEST(NextPhase, RejectsInconsistentInput) {
  const StrategyConfig cfg;
  EXPECT_THROW(next_phase(Phase::Hinted, pass(Phase::Mandatory, 0), {}, cfg), ValidationError);
  EXPECT_THROW(next_phase(Phase::Hinted, pass(Phase::Hinted, 17), {}, cfg), ValidationError);
  EXPECT_THROW(next_phase(phase_table(StrategyKind::Static), Phase::Hinted,
                          pass(Phase::Hinted, 0), {}, cfg),
               ValidationError);
}

TEST(GradeExam, Examples) {
  const Score s = melody({3, 5, 1, 3, 4});
  const auto exact = grade_exam(s, performance_events(s.pitches()));
  EXPECT_TRUE(exact.pass);
  EXPECT_EQ(exact.forgotten_notes, 0u);

  const auto missing = grade_exam(s, performance_events(pitches({3, 5, 3, 4})));
  EXPECT_FALSE(missing.pass);
  EXPECT_EQ(missing.forgotten_notes, 1u);

  const auto empty = grade_exam(s, {});
  EXPECT_FALSE(empty.pass);
  EXPECT_EQ(empty.forgotten_notes, 5u);
}

TEST(GradeExam, SingleEdits) {
  const std::vector<int> base{0, 2, 2, 5, 1, 4, 4, 3};
  const Score s = melody(base);
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto del = base;
    del.erase(del.begin() + static_cast<long>(i));
    const auto d = grade_exam(s, performance_events(pitches(del)));
    EXPECT_FALSE(d.pass);
    EXPECT_EQ(d.forgotten_notes, 1u);

    auto sub = base;
    sub[i] = 9;
    const auto r = grade_exam(s, performance_events(pitches(sub)));
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.forgotten_notes, 1u);

    auto ins = base;
    ins.insert(ins.begin() + static_cast<long>(i), 9);
    const auto n = grade_exam(s, performance_events(pitches(ins)));
    EXPECT_FALSE(n.pass);
    EXPECT_EQ(n.forgotten_notes, 0u);
  }
}

TEST(GradeExam, RepeatedNotesNeedReArticulation) {
  const Score s = melody({2, 2, 2});
  const auto events = performance_events(s.pitches());
  EXPECT_EQ(events.size(), 5u);
  EXPECT_TRUE(grade_exam(s, events).pass);
}

TEST(GradeExam, ContiguousTolerance) {
  const Score s = melody({1, 2, 3});
  const auto padded = performance_events(pitches({7, 1, 2, 3, 8}));
  EXPECT_FALSE(grade_exam(s, padded, ExamStrictness::Exact).pass);
  EXPECT_TRUE(grade_exam(s, padded, ExamStrictness::Contiguous).pass);
  const auto broken = performance_events(pitches({1, 2, 7, 3}));
  EXPECT_FALSE(grade_exam(s, broken, ExamStrictness::Contiguous).pass);
}

TEST(GradeExam, PassMeansNothingForgotten) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    std::vector<int> notes, played;
    for (int k = 0; k < 8; ++k) notes.push_back(static_cast<int>(rng.uniform_int(0, 3)));
    played = notes;
    if (rng.chance(0.5)) played[rng.uniform_int(0, 7)] = static_cast<int>(rng.uniform_int(0, 3));
    if (rng.chance(0.3)) played.erase(played.begin() + rng.uniform_int(0, 7));
    const auto r = grade_exam(melody(notes), performance_events(pitches(played)));
    if (r.pass) {
      EXPECT_EQ(forgetting_ratio(r.forgotten_notes, notes.size()), 0.0);
    }
  }
}

TEST(Lcs, MatchesRecursiveDefinition) {
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    std::vector<Pitch> a(rng.uniform_int(0, 9)), b(rng.uniform_int(0, 9));
    for (auto& p : a) p.degree = static_cast<int>(rng.uniform_int(0, 3));
    for (auto& p : b) p.degree = static_cast<int>(rng.uniform_int(0, 3));
    ASSERT_EQ(lcs_length(a, b), naive_lcs(a, b));
  }
}

TEST(Metrics, LearningRate) {
  EXPECT_DOUBLE_EQ(learning_rate(1.0, 10.0), 10.0);
  EXPECT_NEAR(learning_rate(1.0, 15.0), 6.67, 0.005);
  EXPECT_NEAR(learning_rate(1.0, 9.0), 11.1, 0.05);
  EXPECT_DOUBLE_EQ(learning_rate(0.5, 5.0), 10.0);
  EXPECT_THROW(learning_rate(1.0, 0.0), ValidationError);
  EXPECT_THROW(learning_rate(1.5, 1.0), ValidationError);
}

TEST(Metrics, ForgettingRatio) {
  EXPECT_EQ(forgetting_ratio(0, 16), 0.0);
  EXPECT_EQ(forgetting_ratio(16, 16), 1.0);
  EXPECT_EQ(forgetting_ratio(4, 16), 0.25);
  EXPECT_THROW(forgetting_ratio(1, 0), ValidationError);
  EXPECT_THROW(forgetting_ratio(17, 16), ValidationError);
}

TEST(Metrics, ForgettingChance) {
  auto results = [](std::size_t fails, std::size_t n) {
    std::vector<ExamResult> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i].pass = i >= fails;
    return r;
  };
  EXPECT_EQ(forgetting_chance(results(7, 16)), 0.4375);
  EXPECT_EQ(forgetting_chance(results(1, 16)), 0.0625);
  EXPECT_EQ(forgetting_chance(results(0, 3)), 0.0);
  EXPECT_EQ(forgetting_chance(results(0, 16)), 0.0);
  EXPECT_THROW(forgetting_chance(std::vector<ExamResult>{}), ValidationError);
}

TEST(SignTest, ExactBinomial) {
  // p-values from scipy.stats.binomtest
  const std::vector<double> all_up(20, 1.0);
  EXPECT_NEAR(sign_test(all_up).p_value, 1.9073486328125e-06, 1e-15);
  std::vector<double> mixed{1, 1, 1, 1, 1, 1, 1, 1, -1, -1, 0, 0};
  const auto t = sign_test(mixed);
  EXPECT_EQ(t.positive, 8u);
  EXPECT_EQ(t.negative, 2u);
  EXPECT_EQ(t.ties, 2u);
  EXPECT_NEAR(t.p_value, 0.109375, 1e-12);
  std::vector<double> seven(16, 1.0);
  std::fill(seven.begin(), seven.begin() + 7, -1.0);
  EXPECT_NEAR(sign_test(seven).p_value, 0.803619384765625, 1e-12);
  EXPECT_EQ(sign_test(std::vector<double>(5, 0.0)).p_value, 1.0);
}
