#include "haptutor/sensing.hpp"

#include <sstream>

#include "haptutor/error.hpp"
#include "text_util.hpp"

namespace haptutor {

FingerPattern decode_pattern(const SensorFrame& f, double threshold) {
  FingerPattern fp;
  for (std::size_t i = 0; i < kHoleCount; ++i) {
    fp.holes[i] = f.values[i] >= threshold ? Hole::Closed : Hole::Open;
  }
  return fp;
}

PitchDetector::PitchDetector(const FingeringChart& chart, SensingConfig cfg)
    : chart_(&chart), cfg_(cfg) {
  if (!(cfg_.threshold > 0.0 && cfg_.threshold < 1.0)) {
    throw ConfigError("sensing threshold must lie in (0, 1)");
  }
  if (cfg_.debounce_ms < 0) throw ConfigError("debounce must be non-negative");
}

void PitchDetector::try_emit(Millis held_until, std::vector<PitchEvent>& out) {
  if (run_reported_ || held_until - run_start_ < cfg_.debounce_ms) return;
  run_reported_ = true;
  PitchEvent ev{run_start_, chart_->pitch_for(*run_pattern_)};
  if (last_ && last_->pitch == ev.pitch) return;
  last_ = ev;
  out.push_back(ev);
}

std::vector<PitchEvent> PitchDetector::push(const SensorFrame& f) {
  if (last_t_ && f.t_ms < *last_t_) {
    throw TimeError("sensor frame at " + std::to_string(f.t_ms) + " ms precedes " +
                    std::to_string(*last_t_) + " ms");
  }
  last_t_ = f.t_ms;
  std::vector<PitchEvent> out;
  const FingerPattern fp = decode_pattern(f, cfg_.threshold);
  if (run_pattern_ && *run_pattern_ == fp) {
    try_emit(f.t_ms, out);
    return out;
  }
  if (run_pattern_) try_emit(f.t_ms, out);
  run_pattern_ = fp;
  run_start_ = f.t_ms;
  run_reported_ = false;
  try_emit(f.t_ms, out);
  return out;
}

std::vector<PitchEvent> events_from_frames(std::span<const SensorFrame> frames,
                                           const FingeringChart& chart,
                                           SensingConfig cfg) {
  PitchDetector det(chart, cfg);
  std::vector<PitchEvent> out;
  for (const auto& f : frames) {
    auto evs = det.push(f);
    out.insert(out.end(), evs.begin(), evs.end());
  }
  return out;
}

std::vector<SensorFrame> parse_trace(std::string_view text) {
  std::vector<SensorFrame> frames;
  detail::for_each_line(text, [&](std::size_t line_no,
                                  const std::vector<std::string_view>& tok) {
    if (tok.size() != 1 + kHoleCount) {
      throw ParseError(line_no, "expected 't v1 v2 v3 v4 v5 v6'");
    }
    SensorFrame f;
    f.t_ms = detail::parse_int(tok[0], line_no);
    for (std::size_t i = 0; i < kHoleCount; ++i) {
      f.values[i] = detail::parse_double(tok[i + 1], line_no);
      if (!(f.values[i] >= 0.0 && f.values[i] <= 1.0)) {
        throw ParseError(line_no, "sensor value outside [0, 1]");
      }
    }
    if (!frames.empty() && f.t_ms < frames.back().t_ms) {
      throw ParseError(line_no, "frame timestamps must not decrease");
    }
    frames.push_back(f);
  });
  return frames;
}

std::vector<SensorFrame> load_trace_file(const std::string& path) {
  return parse_trace(detail::read_file(path));
}

std::string format_trace(std::span<const SensorFrame> frames) {
  std::ostringstream os;
  for (const auto& f : frames) {
    os << f.t_ms;
    for (double v : f.values) os << ' ' << detail::format_double(v);
    os << '\n';
  }
  return os.str();
}

SensorFrame frame_for_pattern(Millis t, const FingerPattern& fp) {
  SensorFrame f;
  f.t_ms = t;
  for (std::size_t i = 0; i < kHoleCount; ++i) f.values[i] = fp.closed(i) ? 1.0 : 0.0;
  return f;
}

std::vector<SensorFrame> synthesize_trace(const Score& score, const FingeringChart& chart,
                                          Millis period_ms) {
  if (period_ms < 1) throw ConfigError("frame period must be positive");
  std::vector<SensorFrame> frames;
  if (score.empty()) return frames;
  const Millis stop = score.end_ms() + period_ms;
  std::size_t note = 0;
  // Frames land on every onset as well as on the period grid.
  Millis t = score.notes.front().onset_ms;
  while (t <= stop) {
    while (note + 1 < score.size() && score.notes[note + 1].onset_ms <= t) ++note;
    frames.push_back(frame_for_pattern(t, chart.pattern_for(score.notes[note].pitch)));
    Millis next = t + period_ms;
    if (note + 1 < score.size() && score.notes[note + 1].onset_ms < next) {
      next = score.notes[note + 1].onset_ms;
    }
    t = next;
  }
  return frames;
}

}  // namespace haptutor
