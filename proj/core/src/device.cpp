#include "haptutor/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "haptutor/error.hpp"

namespace haptutor {

Millimeters parse_mm(std::string_view text) {
  auto fail = [&] { return GeometryError("not a decimal length: '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    ++i;
  }
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.' && !seen_point) {
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') throw fail();
    seen_digit = true;
    if (num > (std::numeric_limits<std::int64_t>::max() - 9) / 10) throw fail();
    num = num * 10 + (c - '0');
    if (seen_point) {
      if (den > std::numeric_limits<std::int64_t>::max() / 10) throw fail();
      den *= 10;
    }
  }
  if (!seen_digit) throw fail();
  return Millimeters(negative ? -num : num, den);
}

double to_double(const Millimeters& mm) { return boost::rational_cast<double>(mm); }

void ServoGeometry::validate() const {
  if (track_len_mm <= 0) throw GeometryError("servo track length must be positive");
  if (arm_width_mm <= 0) throw GeometryError("servo arm width must be positive");
  if (arm_width_mm >= track_len_mm) {
    throw GeometryError("servo arm must be narrower than its track");
  }
}

Millimeters free_range(const ServoGeometry& g) {
  g.validate();
  const Millimeters range = g.track_len_mm / 2 - g.arm_width_mm / 2;
  if (range <= 0) throw GeometryError("servo leaves no free range");
  return range;
}

std::string_view to_string(Clutch c) {
  switch (c) {
    case Clutch::Detached:
      return "detached";
    case Clutch::AttachedUp:
      return "up";
    case Clutch::AttachedDown:
      return "down";
  }
  return "?";
}

Clutch clutch_from_string(std::string_view s) {
  if (s == "detached") return Clutch::Detached;
  if (s == "up") return Clutch::AttachedUp;
  if (s == "down") return Clutch::AttachedDown;
  throw ValidationError("unknown clutch state '" + std::string(s) + "'");
}

double setpoint_for(Clutch c, const ServoGeometry& g) {
  switch (c) {
    case Clutch::AttachedUp:
      return to_double(g.top());
    case Clutch::AttachedDown:
      return to_double(g.bottom());
    case Clutch::Detached:
      break;
  }
  return to_double(g.middle());
}

ClutchState resting_state(const ServoGeometry& g) {
  const double mid = setpoint_for(Clutch::Detached, g);
  return ClutchState{Clutch::Detached, mid, mid};
}

StepResult step(const ClutchState& state, const ActuatorCommand& cmd, Millis clock,
                const ServoGeometry& g) {
  if (cmd.finger >= kHoleCount) {
    throw ValidationError("finger index " + std::to_string(cmd.finger) + " out of range");
  }
  StepResult out{state, std::nullopt};
  out.state.clutch = cmd.target;
  out.state.setpoint_mm = setpoint_for(cmd.target, g);
  if (cmd.pulse_ms && cmd.target != Clutch::Detached) {
    if (*cmd.pulse_ms < 1) throw ValidationError("pulse must be at least 1 ms");
    out.detach_at_ms = clock + *cmd.pulse_ms;
  }
  return out;
}

Interval finger_free_interval(const ClutchState& state, const ServoGeometry& g) {
  if (state.clutch != Clutch::Detached) return {state.setpoint_mm, state.setpoint_mm};
  const double half = to_double(free_range(g)) / 2;
  return {state.arm_pos_mm - half, state.arm_pos_mm + half};
}

ServoSimulator::ServoSimulator(ServoGeometry g, double arm_speed_mm_s)
    : geometry_(g), speed_mm_per_ms_(arm_speed_mm_s / 1000.0) {
  geometry_.validate();
  if (!(arm_speed_mm_s > 0)) throw GeometryError("arm speed must be positive");
  fingers_.fill(resting_state(geometry_));
}

void ServoSimulator::move_arms(Millis dt) {
  if (dt <= 0) return;
  const double travel = speed_mm_per_ms_ * static_cast<double>(dt);
  for (auto& f : fingers_) {
    const double gap = f.setpoint_mm - f.arm_pos_mm;
    if (std::abs(gap) <= travel) {
      f.arm_pos_mm = f.setpoint_mm;
    } else {
      f.arm_pos_mm += gap > 0 ? travel : -travel;
    }
  }
}

void ServoSimulator::advance_to(Millis now) {
  if (now < now_) {
    throw TimeError("servo clock moved backwards: " + std::to_string(now) + " < " +
                    std::to_string(now_));
  }
  while (true) {
    std::optional<std::size_t> due;
    for (std::size_t i = 0; i < kHoleCount; ++i) {
      if (detach_at_[i] && *detach_at_[i] <= now &&
          (!due || *detach_at_[i] < *detach_at_[*due])) {
        due = i;
      }
    }
    if (!due) break;
    const Millis at = *detach_at_[*due];
    move_arms(at - now_);
    now_ = at;
    auto& f = fingers_[*due];
    f.clutch = Clutch::Detached;
    f.setpoint_mm = setpoint_for(Clutch::Detached, geometry_);
    detach_at_[*due].reset();
    transitions_.push_back({at, *due, Clutch::Detached, true});
  }
  move_arms(now - now_);
  now_ = now;
}

void ServoSimulator::apply(const ActuatorCommand& cmd, Millis now) {
  advance_to(now);
  const StepResult r = step(fingers_.at(cmd.finger), cmd, now, geometry_);
  fingers_[cmd.finger] = r.state;
  detach_at_[cmd.finger] = r.detach_at_ms;
  transitions_.push_back({now, cmd.finger, cmd.target, false});
}

Millis ServoSimulator::attached_dwell(std::size_t finger, Millis from, Millis to) const {
  Millis total = 0;
  bool attached = false;
  Millis since = 0;
  auto accumulate = [&](Millis until) {
    if (!attached) return;
    const Millis lo = std::max(since, from);
    const Millis hi = std::min(until, to);
    if (hi > lo) total += hi - lo;
  };
  for (const auto& t : transitions_) {
    if (t.finger != finger) continue;
    accumulate(t.at_ms);
    attached = t.clutch != Clutch::Detached;
    since = t.at_ms;
  }
  accumulate(to);
  return total;
}

double glove_ab(const GloveLinkage& l, long double angle_acb_rad) {
  if (!(l.ac_mm > 0) || !(l.bc_mm > 0)) {
    throw GeometryError("glove link lengths must be positive");
  }
  if (!(angle_acb_rad > 0.0L) || !(angle_acb_rad < std::numbers::pi_v<long double>)) {
    throw GeometryError("hinge angle must lie in (0, pi)");
  }
  // Law of cosines in the half-angle form, c^2 = (a-b)^2 + 4ab sin^2(C/2),
  // which stays accurate for small angles.
  const long double a = l.ac_mm;
  const long double b = l.bc_mm;
  const long double s = std::sin(angle_acb_rad / 2);
  const long double d = a - b;
  return static_cast<double>(std::sqrt(d * d + 4.0L * a * b * s * s));
}

}  // namespace haptutor
