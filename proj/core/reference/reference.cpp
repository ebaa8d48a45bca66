#include "haptutor/reference.hpp"

#include <algorithm>
#include <set>

#include "haptutor/random.hpp"

namespace haptutor::reference {

namespace {

std::optional<Pitch> sounding_at(std::span<const PitchEvent> trace, Millis t) {
  std::optional<Pitch> p;
  for (const auto& ev : trace) {
    if (ev.t_ms > t) break;
    p = ev.pitch;
  }
  return p;
}

}  // namespace

std::vector<MistakeReport> scan_mistakes(const Score& score,
                                         std::span<const PitchEvent> trace,
                                         Millis delta_t_ms) {
  std::vector<MistakeReport> out;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const Note& n = score.notes[i];
    bool ok = false;
    for (Millis t = n.onset_ms; t <= n.onset_ms + delta_t_ms && !ok; ++t) {
      ok = sounding_at(trace, t) == n.pitch;
    }
    if (!ok) out.push_back({i, n.onset_ms, n.onset_ms + delta_t_ms});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.detected_at_ms < b.detected_at_ms;
  });
  return out;
}

std::vector<PitchEvent> scan_debounce(std::span<const SensorFrame> frames,
                                      const FingeringChart& chart, SensingConfig cfg) {
  struct Run {
    FingerPattern pattern;
    Millis start;
    Millis until;
  };
  std::vector<Run> runs;
  for (const auto& f : frames) {
    const FingerPattern fp = decode_pattern(f, cfg.threshold);
    if (!runs.empty()) runs.back().until = f.t_ms;
    if (runs.empty() || !(runs.back().pattern == fp)) runs.push_back({fp, f.t_ms, f.t_ms});
  }
  std::vector<PitchEvent> out;
  for (const auto& r : runs) {
    if (r.until - r.start < cfg.debounce_ms) continue;
    const auto pitch = chart.pitch_for(r.pattern);
    if (!out.empty() && out.back().pitch == pitch) continue;
    out.push_back({r.start, pitch});
  }
  return out;
}

OracleCase random_case(std::uint64_t seed, const FingeringChart& chart, Millis delta_t_ms) {
  Rng rng(seed);
  const auto& entries = chart.entries();
  auto random_pitch = [&] {
    return entries[static_cast<std::size_t>(
                       rng.uniform_int(0, static_cast<std::int64_t>(entries.size()) - 1))]
        .first;
  };

  OracleCase c;
  c.score.tempo_bpm = 120;
  const auto notes = rng.uniform_int(1, 10);
  Millis t = rng.uniform_int(0, 300);
  for (std::int64_t i = 0; i < notes; ++i) {
    const Millis dur = rng.uniform_int(20, 600);
    Pitch p = random_pitch();
    if (i > 0 && rng.chance(0.25)) p = c.score.notes.back().pitch;
    c.score.notes.push_back({p, t, dur});
    t += dur + (rng.chance(0.4) ? 0 : rng.uniform_int(1, 300));
  }

  std::set<Millis> times;
  const auto k = rng.uniform_int(0, 25);
  for (std::int64_t i = 0; i < k; ++i) {
    if (rng.chance(0.5)) {
      const Note& n = c.score.notes[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(c.score.notes.size()) - 1))];
      const Millis edges[] = {n.onset_ms - 1, n.onset_ms, n.onset_ms + 1,
                              n.onset_ms + delta_t_ms - 1, n.onset_ms + delta_t_ms,
                              n.onset_ms + delta_t_ms + 1};
      times.insert(edges[rng.uniform_int(0, 5)]);
    } else {
      times.insert(rng.uniform_int(-300, c.score.end_ms() + 300));
    }
  }
  for (Millis at : times) {
    std::optional<Pitch> p;
    const double r = rng.uniform();
    if (r < 0.45) {
      // The note due around this time.
      p = c.score.notes.front().pitch;
      for (const auto& n : c.score.notes) {
        if (n.onset_ms <= at + delta_t_ms) p = n.pitch;
      }
    } else if (r < 0.85) {
      p = random_pitch();
    }
    c.trace.push_back({at, p});
  }
  c.tick_ms = rng.chance(0.5) ? 0 : rng.uniform_int(1, 50);
  return c;
}

std::vector<SensorFrame> random_frames(std::uint64_t seed, const FingeringChart& chart,
                                       std::size_t count, Millis debounce_ms) {
  Rng rng(seed);
  const auto& entries = chart.entries();
  std::vector<SensorFrame> frames;
  Millis t = rng.uniform_int(0, 20);
  FingerPattern fp = entries.front().second;
  while (frames.size() < count) {
    if (rng.chance(0.3)) {
      if (rng.chance(0.8)) {
        fp = entries[static_cast<std::size_t>(
                         rng.uniform_int(0, static_cast<std::int64_t>(entries.size()) - 1))]
                 .second;
      } else {
        for (auto& h : fp.holes) h = rng.chance(0.5) ? Hole::Closed : Hole::Open;
      }
    }
    SensorFrame f;
    f.t_ms = t;
    for (std::size_t i = 0; i < kHoleCount; ++i) {
      // Values straddle the threshold without crossing it.
      f.values[i] = fp.closed(i) ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.49);
    }
    frames.push_back(f);
    const Millis step = rng.chance(0.5) ? rng.uniform_int(0, debounce_ms + 1)
                                        : rng.uniform_int(1, 3 * debounce_ms + 10);
    t += step;
  }
  return frames;
}

std::vector<MistakeReport> engine_mistakes(const OracleCase& c, const FingeringChart& chart,
                                           Millis delta_t_ms) {
  TutorConfig cfg;
  cfg.delta_t_ms = delta_t_ms;
  TutorSession session(c.score, chart, Mode::Adaptive, cfg);
  std::vector<MistakeReport> out;
  for (const auto& e : run_to_completion(session, c.trace, c.tick_ms)) {
    if (const auto* m = std::get_if<MistakeReport>(&e)) out.push_back(*m);
  }
  return out;
}

OracleSummary compare_adaptive(std::size_t cases, std::uint64_t base_seed,
                               const FingeringChart& chart, Millis delta_t_ms) {
  OracleSummary s;
  for (std::size_t k = 0; k < cases; ++k) {
    const auto c = random_case(base_seed + k, chart, delta_t_ms);
    ++s.cases;
    if (engine_mistakes(c, chart, delta_t_ms) == scan_mistakes(c.score, c.trace, delta_t_ms)) {
      ++s.agreed;
    } else if (!s.first_disagreement) {
      s.first_disagreement = base_seed + k;
    }
  }
  return s;
}

}  // namespace haptutor::reference
