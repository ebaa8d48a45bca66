#include "haptutor/score.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "haptutor/error.hpp"
#include "haptutor/random.hpp"
#include "text_util.hpp"

namespace haptutor {

FingerPattern FingerPattern::all(Hole h) {
  FingerPattern fp;
  fp.holes.fill(h);
  return fp;
}

FingerPattern FingerPattern::parse(std::string_view text) {
  if (text.size() != kHoleCount) {
    throw ValidationError("finger pattern must have 6 holes: '" +
                          std::string(text) + "'");
  }
  FingerPattern fp;
  for (std::size_t i = 0; i < kHoleCount; ++i) {
    switch (text[i]) {
      case 'X':
        fp.holes[i] = Hole::Closed;
        break;
      case 'O':
        fp.holes[i] = Hole::Open;
        break;
      default:
        throw ValidationError("finger pattern uses X/O only: '" +
                              std::string(text) + "'");
    }
  }
  return fp;
}

std::string FingerPattern::str() const {
  std::string s(kHoleCount, 'O');
  for (std::size_t i = 0; i < kHoleCount; ++i) {
    if (holes[i] == Hole::Closed) s[i] = 'X';
  }
  return s;
}

int hamming(const FingerPattern& a, const FingerPattern& b) {
  int d = 0;
  for (std::size_t i = 0; i < kHoleCount; ++i) d += a.holes[i] != b.holes[i];
  return d;
}

FingeringChart::FingeringChart(
    std::vector<std::pair<Pitch, FingerPattern>> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const int degree = entries_[i].first.degree;
    if (i > 0 && degree == entries_[i - 1].first.degree) {
      throw ValidationError("duplicate pitch " + std::to_string(degree) +
                            " in chart");
    }
    if (degree != static_cast<int>(i)) {
      throw ValidationError("chart degrees must be contiguous from 0; got " +
                            std::to_string(degree) + " at position " +
                            std::to_string(i));
    }
  }
  by_pattern_.reserve(entries_.size());
  for (const auto& [p, fp] : entries_) by_pattern_.emplace_back(fp, p);
  std::sort(by_pattern_.begin(), by_pattern_.end());
  for (std::size_t i = 1; i < by_pattern_.size(); ++i) {
    if (by_pattern_[i].first == by_pattern_[i - 1].first) {
      throw ValidationError("duplicate pattern " + by_pattern_[i].first.str() +
                            " in chart");
    }
  }
}

bool FingeringChart::contains(Pitch p) const {
  return p.degree >= 0 && static_cast<std::size_t>(p.degree) < entries_.size();
}

const FingerPattern& FingeringChart::pattern_for(Pitch p) const {
  if (!contains(p)) {
    throw UnknownPitchError("unknown pitch degree " + std::to_string(p.degree));
  }
  return entries_[static_cast<std::size_t>(p.degree)].second;
}

std::optional<Pitch> FingeringChart::pitch_for(const FingerPattern& fp) const {
  auto it = std::lower_bound(
      by_pattern_.begin(), by_pattern_.end(), fp,
      [](const auto& entry, const FingerPattern& key) { return entry.first < key; });
  if (it == by_pattern_.end() || it->first != fp) return std::nullopt;
  return it->second;
}

FingerPattern pattern_for_pitch(const FingeringChart& chart, Pitch p) {
  return chart.pattern_for(p);
}

std::optional<Pitch> pitch_for_pattern(const FingeringChart& chart,
                                       const FingerPattern& fp) {
  return chart.pitch_for(fp);
}

FingeringChart parse_chart(std::string_view text) {
  std::vector<std::pair<Pitch, FingerPattern>> entries;
  detail::for_each_line(text, [&](std::size_t line_no,
                                   const std::vector<std::string_view>& tok) {
    if (tok[0] != "pitch" || tok.size() != 3) {
      throw ParseError(line_no, "expected 'pitch <degree> <XXXXXX>'");
    }
    const auto degree = detail::parse_int(tok[1], line_no);
    try {
      entries.emplace_back(Pitch{static_cast<int>(degree)},
                           FingerPattern::parse(tok[2]));
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  });
  return FingeringChart(std::move(entries));
}

FingeringChart load_chart_file(const std::string& path) {
  return parse_chart(detail::read_file(path));
}

namespace {

// Fife-style chart: sequential uncovering from the foot for the first seven
// steps, cross-fingerings for the upper register, all holes open on top.
constexpr std::string_view kDefaultChart = R"(# six-hole fingering chart, degree 0 = lowest
pitch 0 XXXXXX
pitch 1 XXXXXO
pitch 2 XXXXOO
pitch 3 XXXOOO
pitch 4 XXOOOO
pitch 5 XOOOOO
pitch 6 OXXOOO
pitch 7 OXOOOO
pitch 8 XOXXXO
pitch 9 XOXXOO
pitch 10 XXOXXO
pitch 11 OOOOOO
)";

}  // namespace

const FingeringChart& default_chart() {
  static const FingeringChart chart = parse_chart(kDefaultChart);
  return chart;
}

std::vector<Pitch> Score::pitches() const {
  std::vector<Pitch> out;
  out.reserve(notes.size());
  for (const auto& n : notes) out.push_back(n.pitch);
  return out;
}

void validate(const Score& score, const FingeringChart& chart) {
  if (!(score.tempo_bpm > 0.0)) throw ValidationError("tempo must be positive");
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const Note& n = score.notes[i];
    const std::string where = " (note " + std::to_string(i) + ")";
    if (!chart.contains(n.pitch)) {
      throw ValidationError("pitch out of chart range" + where);
    }
    if (n.onset_ms < 0) throw ValidationError("negative onset" + where);
    if (n.duration_ms < 1) throw ValidationError("non-positive duration" + where);
    if (i == 0) continue;
    const Note& prev = score.notes[i - 1];
    if (n.onset_ms < prev.onset_ms) throw ValidationError("unsorted onsets" + where);
    if (n.onset_ms < prev.end_ms()) throw ValidationError("overlapping notes" + where);
  }
}

Score load_score(std::string_view text, const FingeringChart& chart) {
  Score score;
  bool have_tempo = false;
  detail::for_each_line(text, [&](std::size_t line_no,
                                  const std::vector<std::string_view>& tok) {
    if (tok[0] == "tempo") {
      if (tok.size() != 2) throw ParseError(line_no, "expected 'tempo <bpm>'");
      if (have_tempo) throw ParseError(line_no, "duplicate tempo line");
      if (!score.notes.empty()) throw ParseError(line_no, "tempo must precede notes");
      score.tempo_bpm = detail::parse_double(tok[1], line_no);
      if (!(score.tempo_bpm > 0.0)) throw ParseError(line_no, "tempo must be positive");
      have_tempo = true;
    } else if (tok[0] == "note") {
      if (tok.size() != 4) {
        throw ParseError(line_no, "expected 'note <degree> <onset_ms> <duration_ms>'");
      }
      if (!have_tempo) throw ParseError(line_no, "missing tempo header");
      Note n;
      n.pitch.degree = static_cast<int>(detail::parse_int(tok[1], line_no));
      n.onset_ms = detail::parse_int(tok[2], line_no);
      n.duration_ms = detail::parse_int(tok[3], line_no);
      score.notes.push_back(n);
    } else {
      throw ParseError(line_no, "unknown directive '" + std::string(tok[0]) + "'");
    }
  });
  if (!have_tempo) throw ParseError(1, "missing tempo header");
  validate(score, chart);
  return score;
}

Score load_score_file(const std::string& path, const FingeringChart& chart) {
  return load_score(detail::read_file(path), chart);
}

std::string format_score(const Score& score) {
  std::ostringstream os;
  os << "tempo " << detail::format_double(score.tempo_bpm) << '\n';
  for (const auto& n : score.notes) {
    os << "note " << n.pitch.degree << ' ' << n.onset_ms << ' ' << n.duration_ms
       << '\n';
  }
  return os.str();
}

int movement_count(const Score& score, const FingeringChart& chart) {
  int total = 0;
  for (std::size_t i = 1; i < score.notes.size(); ++i) {
    total += hamming(chart.pattern_for(score.notes[i - 1].pitch),
                     chart.pattern_for(score.notes[i].pitch));
  }
  return total;
}

int interval_count(const Score& score) {
  int total = 0;
  for (std::size_t i = 1; i < score.notes.size(); ++i) {
    total += score.notes[i].pitch != score.notes[i - 1].pitch;
  }
  return total;
}

std::optional<PitchRange> pitch_range(const Score& score) {
  if (score.notes.empty()) return std::nullopt;
  auto [lo, hi] = std::minmax_element(
      score.notes.begin(), score.notes.end(),
      [](const Note& a, const Note& b) { return a.pitch < b.pitch; });
  return PitchRange{lo->pitch, hi->pitch};
}

namespace {

std::vector<int> draw_melody(Rng& rng, std::size_t length, int low, int high,
                             std::size_t moves, int max_leap) {
  // Choose which of the length-1 steps move by a partial shuffle.
  std::vector<bool> step_moves(length - 1, false);
  std::vector<std::size_t> slots(length - 1);
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  for (std::size_t i = 0; i < moves; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i),
                        static_cast<std::int64_t>(slots.size() - 1)));
    std::swap(slots[i], slots[j]);
    step_moves[slots[i]] = true;
  }

  std::vector<int> melody;
  melody.reserve(length);
  melody.push_back(static_cast<int>(rng.uniform_int(low, high)));
  std::vector<int> options;
  for (std::size_t i = 0; i + 1 < length; ++i) {
    const int cur = melody.back();
    if (!step_moves[i]) {
      melody.push_back(cur);
      continue;
    }
    options.clear();
    for (int d = std::max(low, cur - max_leap); d <= std::min(high, cur + max_leap); ++d) {
      if (d != cur) options.push_back(d);
    }
    melody.push_back(options[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))]);
  }
  return melody;
}

Score melody_to_score(const std::vector<int>& melody, Millis note_ms) {
  Score s;
  s.tempo_bpm = 60000.0 / static_cast<double>(note_ms);
  for (std::size_t i = 0; i < melody.size(); ++i) {
    s.notes.push_back(Note{Pitch{melody[i]}, static_cast<Millis>(i) * note_ms, note_ms});
  }
  return s;
}

bool spans(const std::vector<int>& melody, int low, int high) {
  auto [mn, mx] = std::minmax_element(melody.begin(), melody.end());
  return *mn == low && *mx == high;
}

}  // namespace

std::pair<Score, Score> generate_matched_pair(std::uint64_t seed,
                                              const MatchParams& params,
                                              const FingeringChart& chart) {
  const int low = params.range.low.degree;
  const int high = params.range.high.degree;
  if (low < 0 || low > high || !chart.contains(params.range.high)) {
    throw InfeasibleError("pitch range " + std::to_string(low) + ".." +
                              std::to_string(high) + " exceeds chart of size " +
                              std::to_string(chart.size()),
                          0);
  }
  if (params.length < 2) throw InfeasibleError("need at least two notes", 0);
  if (params.note_ms < 1) throw InfeasibleError("note length must be positive", 0);
  if (params.max_leap < 1) throw InfeasibleError("max leap must be positive", 0);
  const std::size_t steps = params.length - 1;
  if (params.intervals && *params.intervals > steps) {
    throw InfeasibleError("more intervals than note transitions", 0);
  }
  if (low == high) {
    throw InfeasibleError("a single-pitch range admits only one melody", 0);
  }
  if (params.intervals && *params.intervals == 0) {
    throw InfeasibleError("zero intervals cannot span a pitch range", 0);
  }

  Rng rng(seed);
  std::size_t retries = 0;
  auto exhausted = [&] { return retries >= params.max_retries; };

  std::vector<int> first;
  std::size_t moves = 0;
  while (true) {
    if (exhausted()) throw InfeasibleError("no melody spans the range", retries);
    moves = params.intervals
                ? *params.intervals
                : static_cast<std::size_t>(rng.uniform_int(
                      static_cast<std::int64_t>((2 * steps + 2) / 3),
                      static_cast<std::int64_t>(steps)));
    first = draw_melody(rng, params.length, low, high, moves, params.max_leap);
    if (spans(first, low, high)) break;
    ++retries;
  }
  const Score a = melody_to_score(first, params.note_ms);
  const int target_moves = movement_count(a, chart);

  while (true) {
    if (exhausted()) throw InfeasibleError("no matching second melody", retries);
    auto second = draw_melody(rng, params.length, low, high, moves, params.max_leap);
    if (second != first && spans(second, low, high)) {
      Score b = melody_to_score(second, params.note_ms);
      if (movement_count(b, chart) == target_moves) return {a, std::move(b)};
    }
    ++retries;
  }
}

}  // namespace haptutor
