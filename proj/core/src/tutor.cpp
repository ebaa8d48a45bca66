#include "haptutor/tutor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "haptutor/error.hpp"

namespace haptutor {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Mandatory:
      return "mandatory";
    case Mode::Hinted:
      return "hinted";
    case Mode::Adaptive:
      return "adaptive";
  }
  return "?";
}

Mode mode_from_string(std::string_view s) {
  if (s == "mandatory") return Mode::Mandatory;
  if (s == "hinted") return Mode::Hinted;
  if (s == "adaptive") return Mode::Adaptive;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

void TutorConfig::validate() const {
  if (delta_t_ms < 1) throw ConfigError("delta_t_ms must be at least 1");
  if (hint_pulse_ms < 1) throw ConfigError("hint_pulse_ms must be at least 1");
  if (!(tempo_scale > 0.0) || !std::isfinite(tempo_scale)) {
    throw ConfigError("tempo_scale must be positive");
  }
}

std::vector<ScheduledNote> schedule(const Score& score, const TutorConfig& cfg) {
  cfg.validate();
  std::vector<ScheduledNote> out;
  out.reserve(score.size());
  auto scaled = [&](Millis t) {
    return static_cast<Millis>(std::llround(static_cast<double>(t) / cfg.tempo_scale));
  };
  for (std::size_t i = 0; i < score.size(); ++i) {
    const Note& n = score.notes[i];
    ScheduledNote s{i, n.pitch, scaled(n.onset_ms), scaled(n.end_ms())};
    if (s.end_ms <= s.onset_ms || (!out.empty() && s.onset_ms < out.back().end_ms) ||
        (!out.empty() && s.onset_ms <= out.back().onset_ms)) {
      throw ConfigError("tempo_scale " + std::to_string(cfg.tempo_scale) +
                        " collapses note " + std::to_string(i) +
                        " at millisecond resolution");
    }
    out.push_back(s);
  }
  return out;
}

Millis log_time(const LogEntry& e) {
  return std::visit(
      [](const auto& v) -> Millis {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MistakeReport>) {
          return v.detected_at_ms;
        } else {
          return v.at_ms;
        }
      },
      e);
}

std::string format_log(std::span<const LogEntry> log) {
  std::ostringstream os;
  for (const auto& e : log) {
    os << log_time(e) << ' ';
    if (const auto* cue = std::get_if<AudioCue>(&e)) {
      os << "cue note=" << cue->note_index << " pitch=" << cue->pitch.degree;
    } else if (const auto* cmd = std::get_if<TimedCommand>(&e)) {
      os << "cmd finger=" << cmd->cmd.finger << " clutch=" << to_string(cmd->cmd.target)
         << " pulse=" << cmd->cmd.pulse_ms.value_or(0);
    } else if (const auto* m = std::get_if<MistakeReport>(&e)) {
      os << "mistake note=" << m->note_index << " score_time=" << m->score_time_ms;
    }
    os << '\n';
  }
  return os.str();
}

TutorSession::TutorSession(const Score& score, const FingeringChart& chart, Mode mode,
                           TutorConfig cfg)
    : mode_(mode), cfg_(cfg), timeline_(schedule(score, cfg)) {
  validate(score, chart);
  patterns_.reserve(timeline_.size());
  for (const auto& n : timeline_) patterns_.push_back(chart.pattern_for(n.pitch));
  status_.assign(timeline_.size(), NoteStatus::Pending);
  points_.reserve(timeline_.size() * 3);
  for (const auto& n : timeline_) {
    points_.push_back({n.onset_ms, PointKind::Onset, n.index});
    points_.push_back({n.onset_ms + cfg_.delta_t_ms, PointKind::Deadline, n.index});
    points_.push_back({n.end_ms, PointKind::End, n.index});
  }
  std::sort(points_.begin(), points_.end(), [](const Point& a, const Point& b) {
    if (a.at_ms != b.at_ms) return a.at_ms < b.at_ms;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.note < b.note;
  });
}

Millis TutorSession::completion_ms() const {
  return points_.empty() ? 0 : points_.back().at_ms;
}

std::optional<Millis> TutorSession::next_due_ms() const {
  if (finished()) return std::nullopt;
  return points_[next_point_].at_ms;
}

std::size_t TutorSession::mistake_count() const {
  return static_cast<std::size_t>(
      std::count(status_.begin(), status_.end(), NoteStatus::Missed));
}

void TutorSession::emit_command(Millis at, const ActuatorCommand& cmd, TickOutput& out) {
  TimedCommand tc{at, cmd};
  out.commands.push_back(tc);
  log_.emplace_back(tc);
  last_log_ms_ = std::max(last_log_ms_, at);
}

void TutorSession::emit_pattern_hold(Millis at, const FingerPattern& fp, TickOutput& out) {
  for (std::size_t f = 0; f < kHoleCount; ++f) {
    emit_command(at, {f, fp.closed(f) ? Clutch::AttachedDown : Clutch::AttachedUp, {}},
                 out);
  }
}

void TutorSession::emit_release(Millis at, TickOutput& out) {
  for (std::size_t f = 0; f < kHoleCount; ++f) {
    emit_command(at, {f, Clutch::Detached, {}}, out);
  }
}

void TutorSession::process_event(const PitchEvent& ev, TickOutput& out) {
  held_ = ev.pitch;
  if (!ev.pitch) return;
  std::erase_if(open_windows_, [&](std::size_t i) {
    const auto& n = timeline_[i];
    if (n.pitch == *ev.pitch && ev.t_ms >= n.onset_ms &&
        ev.t_ms <= n.onset_ms + cfg_.delta_t_ms) {
      status_[i] = NoteStatus::Satisfied;
      return true;
    }
    return false;
  });
  if (corrective_hold_ && timeline_[*corrective_hold_].pitch == *ev.pitch) {
    emit_release(std::max({ev.t_ms, hold_started_ms_, last_log_ms_}), out);
    corrective_hold_.reset();
  }
}

void TutorSession::process_point(const Point& p, TickOutput& out) {
  const ScheduledNote& n = timeline_[p.note];
  switch (p.kind) {
    case PointKind::Onset: {
      AudioCue cue{p.at_ms, n.index, n.pitch};
      out.cues.push_back(cue);
      log_.emplace_back(cue);
      last_log_ms_ = std::max(last_log_ms_, p.at_ms);
      if (held_ && *held_ == n.pitch) {
        status_[p.note] = NoteStatus::Satisfied;
      } else {
        open_windows_.push_back(p.note);
      }
      if (mode_ == Mode::Mandatory) {
        emit_pattern_hold(p.at_ms, patterns_[p.note], out);
      } else if (mode_ == Mode::Hinted) {
        const FingerPattern& fp = patterns_[p.note];
        const FingerPattern* prev = p.note > 0 ? &patterns_[p.note - 1] : nullptr;
        for (std::size_t f = 0; f < kHoleCount; ++f) {
          const bool changed = prev == nullptr || prev->holes[f] != fp.holes[f];
          if (cfg_.hint_scope == HintScope::Full || changed) {
            emit_command(p.at_ms,
                         {f, fp.closed(f) ? Clutch::AttachedDown : Clutch::AttachedUp,
                          cfg_.hint_pulse_ms},
                         out);
          }
        }
      }
      break;
    }
    case PointKind::Deadline: {
      if (status_[p.note] != NoteStatus::Pending) break;
      status_[p.note] = NoteStatus::Missed;
      std::erase(open_windows_, p.note);
      if (mode_ != Mode::Adaptive) break;
      MistakeReport m{n.index, n.onset_ms, p.at_ms};
      out.mistakes.push_back(m);
      log_.emplace_back(m);
      last_log_ms_ = std::max(last_log_ms_, p.at_ms);
      if (n.end_ms > p.at_ms) {
        emit_pattern_hold(p.at_ms, patterns_[p.note], out);
        corrective_hold_ = p.note;
        hold_started_ms_ = p.at_ms;
      }
      break;
    }
    case PointKind::End: {
      if (corrective_hold_ == p.note) {
        emit_release(p.at_ms, out);
        corrective_hold_.reset();
      }
      if (mode_ == Mode::Mandatory && p.note + 1 == timeline_.size()) {
        emit_release(p.at_ms, out);
      }
      break;
    }
  }
}

TickOutput TutorSession::tick(Millis now, std::span<const PitchEvent> new_events) {
  if (now < last_now_) {
    throw TimeError("tick time regressed from " + std::to_string(last_now_) + " to " +
                    std::to_string(now));
  }
  Millis prev = last_event_ms_;
  for (const auto& ev : new_events) {
    if (ev.t_ms > now) {
      throw TimeError("event at " + std::to_string(ev.t_ms) + " ms is newer than tick " +
                      std::to_string(now));
    }
    if (ev.t_ms < prev) throw TimeError("pitch events out of order");
    prev = ev.t_ms;
  }
  last_now_ = now;
  last_event_ms_ = prev;

  TickOutput out;
  auto ev = new_events.begin();
  while (next_point_ < points_.size() && points_[next_point_].at_ms <= now) {
    const Point& p = points_[next_point_];
    while (ev != new_events.end() && ev->t_ms <= p.at_ms) process_event(*ev++, out);
    process_point(p, out);
    ++next_point_;
  }
  while (ev != new_events.end()) process_event(*ev++, out);
  return out;
}

const std::vector<LogEntry>& run_to_completion(TutorSession& session,
                                               std::span<const PitchEvent> trace,
                                               Millis tick_ms) {
  if (tick_ms < 0) throw ConfigError("tick_ms must be non-negative");
  std::size_t delivered = 0;
  auto deliver_until = [&](Millis now) {
    std::size_t end = delivered;
    while (end < trace.size() && trace[end].t_ms <= now) ++end;
    auto batch = trace.subspan(delivered, end - delivered);
    delivered = end;
    return batch;
  };

  if (tick_ms == 0) {
    while (!session.finished() || delivered < trace.size()) {
      Millis now = std::numeric_limits<Millis>::max();
      if (auto due = session.next_due_ms()) now = *due;
      if (delivered < trace.size()) now = std::min(now, trace[delivered].t_ms);
      session.tick(now, deliver_until(now));
    }
    return session.log();
  }

  Millis now = 0;
  if (!trace.empty()) now = std::min(now, trace.front().t_ms);
  while (true) {
    session.tick(now, deliver_until(now));
    if (session.finished() && delivered == trace.size()) break;
    now += tick_ms;
  }
  return session.log();
}

}  // namespace haptutor
