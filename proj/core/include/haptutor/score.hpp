#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace haptutor {

// Milliseconds on a score or session timeline. All engine time is integral.
using Millis = std::int64_t;

inline constexpr std::size_t kHoleCount = 6;

// Index into the fingering chart's pitch list, ascending by pitch height.
struct Pitch {
  int degree = 0;

  friend constexpr auto operator<=>(const Pitch&, const Pitch&) = default;
};

enum class Hole : std::uint8_t { Closed, Open };

// Six hole states, index 0 is the hole nearest the embouchure.
struct FingerPattern {
  std::array<Hole, kHoleCount> holes{};

  static FingerPattern all(Hole h);
  // Parses six characters of X (closed) / O (open).
  static FingerPattern parse(std::string_view text);

  bool closed(std::size_t hole) const { return holes[hole] == Hole::Closed; }
  std::string str() const;

  friend constexpr auto operator<=>(const FingerPattern&,
                                    const FingerPattern&) = default;
};

// Number of holes whose state differs.
int hamming(const FingerPattern& a, const FingerPattern& b);

// Static pitch <-> pattern mapping. Degrees are exactly 0..size()-1 and
// patterns are unique, so both lookups are functions.
class FingeringChart {
 public:
  FingeringChart() = default;
  explicit FingeringChart(std::vector<std::pair<Pitch, FingerPattern>> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(Pitch p) const;

  // Throws UnknownPitchError.
  const FingerPattern& pattern_for(Pitch p) const;
  std::optional<Pitch> pitch_for(const FingerPattern& fp) const;

  // Entries sorted by degree.
  const std::vector<std::pair<Pitch, FingerPattern>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<Pitch, FingerPattern>> entries_;
  // Sorted by pattern for lookup.
  std::vector<std::pair<FingerPattern, Pitch>> by_pattern_;
};

FingerPattern pattern_for_pitch(const FingeringChart& chart, Pitch p);
std::optional<Pitch> pitch_for_pattern(const FingeringChart& chart,
                                       const FingerPattern& fp);

FingeringChart parse_chart(std::string_view text);
FingeringChart load_chart_file(const std::string& path);
// The bundled twelve-entry six-hole chart.
const FingeringChart& default_chart();

struct Note {
  Pitch pitch;
  Millis onset_ms = 0;
  Millis duration_ms = 1;

  Millis end_ms() const { return onset_ms + duration_ms; }

  friend bool operator==(const Note&, const Note&) = default;
};

struct Score {
  std::vector<Note> notes;
  double tempo_bpm = 120.0;

  bool empty() const { return notes.empty(); }
  std::size_t size() const { return notes.size(); }
  Millis end_ms() const { return notes.empty() ? 0 : notes.back().end_ms(); }
  std::vector<Pitch> pitches() const;

  friend bool operator==(const Score&, const Score&) = default;
};

// Throws ValidationError naming the violated invariant.
void validate(const Score& score, const FingeringChart& chart);

// Throws ParseError (with line) or ValidationError.
Score load_score(std::string_view text, const FingeringChart& chart);
Score load_score_file(const std::string& path, const FingeringChart& chart);
std::string format_score(const Score& score);

int movement_count(const Score& score, const FingeringChart& chart);
// Consecutive note pairs with a nonzero pitch difference.
int interval_count(const Score& score);

struct PitchRange {
  Pitch low;
  Pitch high;

  friend bool operator==(const PitchRange&, const PitchRange&) = default;
};

// Lowest and highest degree used; nullopt for an empty score.
std::optional<PitchRange> pitch_range(const Score& score);

struct MatchParams {
  std::size_t length = 16;
  PitchRange range{Pitch{0}, Pitch{5}};
  // Nonzero-step count for both songs. Unset: drawn from the first song.
  std::optional<std::size_t> intervals;
  int max_leap = 4;
  Millis note_ms = 500;
  std::size_t max_retries = 200000;
};

// Two distinct scores with equal pitch range, interval count and movement
// count. Deterministic per seed. Throws InfeasibleError.
std::pair<Score, Score> generate_matched_pair(std::uint64_t seed,
                                              const MatchParams& params,
                                              const FingeringChart& chart);

}  // namespace haptutor
