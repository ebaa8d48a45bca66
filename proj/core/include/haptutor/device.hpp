#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "haptutor/score.hpp"

namespace haptutor {

// Exact length in millimetres. Geometry arithmetic never rounds.
using Millimeters = boost::rational<std::int64_t>;

// Parses a decimal literal such as "40", "12.5" or "0.0001" exactly.
Millimeters parse_mm(std::string_view text);
double to_double(const Millimeters& mm);

// One linear servo with its sliding rail. Positions are measured along the
// rail from the finger hole (0) upwards.
struct ServoGeometry {
  Millimeters track_len_mm{40};
  Millimeters arm_width_mm{10};

  // Throws GeometryError unless 0 < arm_width < track_len.
  void validate() const;

  Millimeters bottom() const { return arm_width_mm / 2; }
  Millimeters middle() const { return track_len_mm / 2; }
  Millimeters top() const { return track_len_mm - arm_width_mm / 2; }
};

// Range of finger travel while detached: track/2 - width/2.
// Throws GeometryError when the range would not be strictly positive.
Millimeters free_range(const ServoGeometry& g);

enum class Clutch : std::uint8_t { Detached = 0, AttachedUp = 1, AttachedDown = 2 };

std::string_view to_string(Clutch c);
Clutch clutch_from_string(std::string_view s);

// Per-finger actuator state. The commanded setpoint follows the clutch state
// exactly; arm_pos_mm trails it while the arm is moving.
struct ClutchState {
  Clutch clutch = Clutch::Detached;
  double arm_pos_mm = 20.0;
  double setpoint_mm = 20.0;

  friend bool operator==(const ClutchState&, const ClutchState&) = default;
};

ClutchState resting_state(const ServoGeometry& g);
double setpoint_for(Clutch c, const ServoGeometry& g);

struct ActuatorCommand {
  std::size_t finger = 0;
  Clutch target = Clutch::Detached;
  // Auto-detach after this many ms; ignored for a Detached target.
  std::optional<Millis> pulse_ms;

  friend bool operator==(const ActuatorCommand&, const ActuatorCommand&) = default;
};

struct StepResult {
  ClutchState state;
  std::optional<Millis> detach_at_ms;
};

// Applies a command to one finger. Arm motion is not simulated here; see
// ServoSimulator::advance_to.
StepResult step(const ClutchState& state, const ActuatorCommand& cmd, Millis clock,
                const ServoGeometry& g);

struct Interval {
  double lo = 0;
  double hi = 0;

  double width() const { return hi - lo; }
  double center() const { return (lo + hi) / 2; }
};

// Positions the finger may occupy: a free range around the arm while
// detached, a single point at the setpoint while attached.
Interval finger_free_interval(const ClutchState& state, const ServoGeometry& g);

struct ClutchTransition {
  Millis at_ms = 0;
  std::size_t finger = 0;
  Clutch clutch = Clutch::Detached;
  bool automatic = false;  // auto-detach at the end of a pulse
};

// Six servos advanced by an injected clock in 1 ms resolution. Single owner.
class ServoSimulator {
 public:
  explicit ServoSimulator(ServoGeometry g = {}, double arm_speed_mm_s = 200.0);

  // Advances to `now` (processing due auto-detaches) and applies cmd.
  void apply(const ActuatorCommand& cmd, Millis now);
  void advance_to(Millis now);

  Millis now() const { return now_; }
  const ClutchState& finger(std::size_t i) const { return fingers_.at(i); }
  const std::array<ClutchState, kHoleCount>& fingers() const { return fingers_; }
  std::optional<Millis> pending_detach(std::size_t i) const { return detach_at_.at(i); }
  const std::vector<ClutchTransition>& transitions() const { return transitions_; }
  const ServoGeometry& geometry() const { return geometry_; }

  // Milliseconds finger i spent attached within [from, to).
  Millis attached_dwell(std::size_t finger, Millis from, Millis to) const;

 private:
  void move_arms(Millis dt);

  ServoGeometry geometry_;
  double speed_mm_per_ms_;
  Millis now_ = 0;
  std::array<ClutchState, kHoleCount> fingers_{};
  std::array<std::optional<Millis>, kHoleCount> detach_at_{};
  std::vector<ClutchTransition> transitions_;
};

// Magic-glove finger linkage: two rigid links A-C and B-C hinged at C.
struct GloveLinkage {
  double ac_mm = 30.0;
  double bc_mm = 30.0;
};

// Distance AB for a hinge angle ACB in (0, pi); strictly increasing in the
// angle. Evaluated in extended precision. Throws GeometryError.
double glove_ab(const GloveLinkage& l, long double angle_acb_rad);

}  // namespace haptutor
