#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "haptutor/device.hpp"
#include "haptutor/error.hpp"
#include "haptutor/random.hpp"

using namespace haptutor;

namespace {

ServoGeometry geom(std::string_view track, std::string_view width) {
  return ServoGeometry{parse_mm(track), parse_mm(width)};
}

}  // namespace

TEST(FreeRange, Examples) {
  EXPECT_EQ(free_range(geom("40", "10")), Millimeters(15));
  EXPECT_THROW(free_range(geom("20", "20")), GeometryError);
  EXPECT_EQ(free_range(geom("30", "0.0001")), Millimeters(1499995, 100000));
  EXPECT_NEAR(to_double(free_range(geom("30", "0.0001"))), 14.99995, 1e-12);
}

TEST(FreeRange, DegenerateGeometry) {
  EXPECT_THROW(free_range(geom("10", "12")), GeometryError);
  EXPECT_THROW(free_range(geom("0", "0")), GeometryError);
  EXPECT_THROW(free_range(ServoGeometry{Millimeters(10), Millimeters(-1)}), GeometryError);
}

TEST(FreeRange, TwiceRangePlusWidthIsTrack) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    // widths and tracks with up to four decimals
    const Millimeters width(rng.uniform_int(1, 500000), 10000);
    const Millimeters track = width + Millimeters(rng.uniform_int(1, 1000000), 10000);
    const ServoGeometry g{track, width};
    const Millimeters r = free_range(g);
    EXPECT_EQ(2 * r + width, track);
    EXPECT_GT(r, 0);
  }
}

TEST(ParseMm, Decimals) {
  EXPECT_EQ(parse_mm("12.5"), Millimeters(25, 2));
  EXPECT_EQ(parse_mm("0.0001"), Millimeters(1, 10000));
  EXPECT_EQ(parse_mm("-3"), Millimeters(-3));
  EXPECT_THROW(parse_mm(""), GeometryError);
  EXPECT_THROW(parse_mm("1.2.3"), GeometryError);
  EXPECT_THROW(parse_mm("4mm"), GeometryError);
}

TEST(Step, AttachWithoutPulse) {
  const ServoGeometry g;
  const auto r = step(resting_state(g), {0, Clutch::AttachedDown, std::nullopt}, 0, g);
  EXPECT_EQ(r.state.clutch, Clutch::AttachedDown);
  EXPECT_EQ(r.state.setpoint_mm, 5.0);
  EXPECT_FALSE(r.detach_at_ms);
}

TEST(Step, PulseSchedulesDetach) {
  const ServoGeometry g;
  const auto r = step(resting_state(g), {2, Clutch::AttachedDown, 60}, 1000, g);
  EXPECT_EQ(r.state.clutch, Clutch::AttachedDown);
  EXPECT_EQ(r.detach_at_ms, 1060);
}

TEST(Step, DetachReturnsToMiddle) {
  const ServoGeometry g;
  ClutchState up{Clutch::AttachedUp, 35.0, 35.0};
  const auto r = step(up, {1, Clutch::Detached, std::nullopt}, 0, g);
  EXPECT_EQ(r.state.clutch, Clutch::Detached);
  EXPECT_EQ(r.state.setpoint_mm, 20.0);
  EXPECT_THROW(step(up, {6, Clutch::Detached, std::nullopt}, 0, g), ValidationError);
  EXPECT_THROW(step(up, {0, Clutch::AttachedUp, 0}, 0, g), ValidationError);
}

TEST(FreeInterval, Examples) {
  const ServoGeometry g;
  const auto mid = finger_free_interval(resting_state(g), g);
  EXPECT_DOUBLE_EQ(mid.width(), 15.0);
  EXPECT_DOUBLE_EQ(mid.center(), 20.0);
  const auto down = finger_free_interval({Clutch::AttachedDown, 5.0, 5.0}, g);
  EXPECT_EQ(down.lo, 5.0);
  EXPECT_EQ(down.width(), 0.0);
  const auto up = finger_free_interval({Clutch::AttachedUp, 35.0, 35.0}, g);
  EXPECT_EQ(up.lo, 35.0);
  EXPECT_EQ(up.hi, 35.0);
}

TEST(FreeInterval, StaysOnTheTrack) {
  const ServoGeometry g;
  const auto i = finger_free_interval(resting_state(g), g);
  EXPECT_GE(i.lo, 0.0);
  EXPECT_LE(i.hi, to_double(g.track_len_mm));
}

TEST(Simulator, PulseAutoDetaches) {
  ServoSimulator sim;
  sim.apply({3, Clutch::AttachedDown, 60}, 1000);
  EXPECT_EQ(sim.pending_detach(3), 1060);
  sim.advance_to(1059);
  EXPECT_EQ(sim.finger(3).clutch, Clutch::AttachedDown);
  sim.advance_to(1060);
  EXPECT_EQ(sim.finger(3).clutch, Clutch::Detached);
  EXPECT_FALSE(sim.pending_detach(3));
  ASSERT_EQ(sim.transitions().size(), 2u);
  EXPECT_TRUE(sim.transitions()[1].automatic);
  EXPECT_EQ(sim.attached_dwell(3, 0, 5000), 60);
}

TEST(Simulator, ArmTravelsAtSpeed) {
  ServoSimulator sim(ServoGeometry{}, 200.0);  // 0.2 mm per ms
  sim.apply({0, Clutch::AttachedDown, std::nullopt}, 0);
  sim.advance_to(50);
  EXPECT_NEAR(sim.finger(0).arm_pos_mm, 10.0, 1e-9);
  sim.advance_to(1000);
  EXPECT_EQ(sim.finger(0).arm_pos_mm, 5.0);
  EXPECT_THROW(sim.advance_to(999), TimeError);
}

TEST(Simulator, RepulseExtendsHold) {
  ServoSimulator sim;
  sim.apply({0, Clutch::AttachedUp, 60}, 0);
  sim.apply({0, Clutch::AttachedUp, 60}, 40);
  sim.advance_to(90);
  EXPECT_EQ(sim.finger(0).clutch, Clutch::AttachedUp);
  sim.advance_to(100);
  EXPECT_EQ(sim.finger(0).clutch, Clutch::Detached);
  EXPECT_EQ(sim.attached_dwell(0, 0, 200), 100);
}

TEST(Glove, Examples) {
  const GloveLinkage l{30, 30};
  EXPECT_EQ(glove_ab(l, std::numbers::pi_v<long double> / 3), 30.0);
  EXPECT_NEAR(glove_ab(l, std::numbers::pi_v<long double> / 2), 30.0 * std::sqrt(2.0), 1e-12);
  const GloveLinkage m{25, 35};
  EXPECT_LT(glove_ab(m, 1.0L), glove_ab(m, 1.1L));
  EXPECT_THROW(glove_ab(l, 0.0L), GeometryError);
  EXPECT_THROW(glove_ab(l, std::numbers::pi_v<long double>), GeometryError);
  EXPECT_THROW(glove_ab(GloveLinkage{0, 3}, 1.0L), GeometryError);
}

TEST(Glove, StrictlyIncreasingOnDenseGrid) {
  Rng rng(11);
  constexpr int kGrid = 10000;
  const long double pi = std::numbers::pi_v<long double>;
  for (int k = 0; k < 20; ++k) {
    const GloveLinkage l{rng.uniform(5, 60), rng.uniform(5, 60)};
    double prev = glove_ab(l, pi / (kGrid + 1));
    for (int i = 2; i <= kGrid; ++i) {
      const double ab = glove_ab(l, pi * i / (kGrid + 1));
      ASSERT_GT(ab, prev) << "linkage " << k << " step " << i;
      prev = ab;
    }
    // bounded by |ac - bc| and ac + bc
    EXPECT_GT(prev, std::abs(l.ac_mm - l.bc_mm));
    EXPECT_LT(prev, l.ac_mm + l.bc_mm);
  }
}
