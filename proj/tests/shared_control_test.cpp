#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "interocept/shared_control.hpp"

using namespace interocept;

namespace {

const CommandLimits kLimits{2.0, 2.0, 0.5, 1.0};

}  // namespace

TEST(Fuse, NoIncrementsIsIdentity) {
  const AutonomousCommand a{1.0, -0.3, 7};
  const FusedCommand f = fuse(a, {}, kLimits);
  EXPECT_EQ(f, (FusedCommand{1.0, -0.3, 7}));
}

TEST(Fuse, AveragesWithHumanChannel) {
  const std::vector<HumanIncrement> inc{{0.4, 0.0, 3, InputSource::Keyboard}};
  EXPECT_DOUBLE_EQ(fuse({1.0, 0.0, 3}, inc, kLimits).v, 1.2);
}

TEST(Fuse, HumanChannelClampsBeforeAveraging) {
  const std::vector<HumanIncrement> inc{{-1.0, 0.0, 0, InputSource::Gamepad}};
  EXPECT_DOUBLE_EQ(fuse({0.2, 0.0, 0}, inc, kLimits).v, 0.1);
}

TEST(Fuse, IncrementsSum) {
  const std::vector<HumanIncrement> inc{{0.2, 0.5, 1}, {0.1, -0.1, 1}};
  const FusedCommand f = fuse({0.5, 0.0, 1}, inc, kLimits);
  EXPECT_DOUBLE_EQ(f.v, 0.65);
  EXPECT_DOUBLE_EQ(f.w, 0.2);
}

TEST(Fuse, TickMismatch) {
  const std::vector<HumanIncrement> inc{{0.1, 0.0, 4}};
  try {
    fuse({0.5, 0.0, 5}, inc, kLimits);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TickMismatch);
  }
}

TEST(ClampIncrement, ReportsClamping) {
  HumanIncrement h{0.9, -3.0, 0};
  EXPECT_TRUE(clamp_increment(h, kLimits));
  EXPECT_EQ(h.dv, 0.5);
  EXPECT_EQ(h.dw, -1.0);
  HumanIncrement ok{0.1, 0.1, 0};
  EXPECT_FALSE(clamp_increment(ok, kLimits));
}

TEST(Dissonance, Examples) {
  const AutonomousCommand a{1.0, 0.0, 0};
  const DissonanceRecord none = record_dissonance(a, fuse(a, {}, kLimits), {}, 0.0, kLimits);
  EXPECT_EQ(none.intensity, 0.0);
  EXPECT_EQ(none.dissonance, 0.0);

  const std::vector<HumanIncrement> inc{{0.4, 0.0, 0}};
  const DissonanceRecord r = record_dissonance(a, {1.2, 0.0, 0}, inc, 3.5, kLimits);
  EXPECT_NEAR(r.dissonance, 0.1, 1e-15);
  EXPECT_NEAR(r.intensity, 0.4, 1e-15);
  EXPECT_EQ(r.station_m, 3.5);

  const DissonanceRecord capped = record_dissonance({0.0, 0.0, 0}, {2.0, 2.0, 0}, inc, 0.0, kLimits);
  EXPECT_EQ(capped.dissonance, 1.0);

  EXPECT_THROW(record_dissonance(a, {1.0, 0.0, 0}, {}, 0.0, CommandLimits{0.0, 1.0, 0.5, 1.0}), Error);
}

TEST(Dissonance, AngularScaledByRatio) {
  const CommandLimits lim{1.0, 2.0, 0.5, 1.0};
  const std::vector<HumanIncrement> inc{{0.0, 0.8, 0}};
  const AutonomousCommand a{0.5, 0.0, 0};
  const FusedCommand f = fuse(a, inc, lim);
  EXPECT_DOUBLE_EQ(f.w, 0.4);
  const DissonanceRecord r = record_dissonance(a, f, inc, 0.0, lim);
  EXPECT_DOUBLE_EQ(r.dissonance, 0.5 * 0.4);
  EXPECT_DOUBLE_EQ(r.intensity, 0.8 * 0.5);
}

TEST(DissonanceField, Examples) {
  const DissonanceField empty = dissonance_field({}, 3, 4);
  EXPECT_EQ(empty.values.size(), 12u);
  for (double v : empty.values) EXPECT_EQ(v, 0.0);

  const std::vector<DissonanceRecord> one{{0, 0.0, 0.5, 0.0}};
  const DissonanceField f1 = dissonance_field(one, 2, 2, FieldRange{10, 1.0});
  EXPECT_EQ(f1.at(0, 0), 0.5);
  EXPECT_EQ(f1.at(1, 1), 0.0);

  const std::vector<DissonanceRecord> two{{1, 0.0, 0.2, 0.1}, {2, 0.0, 0.4, 0.2}};
  const DissonanceField f2 = dissonance_field(two, 2, 2, FieldRange{100, 10.0});
  EXPECT_DOUBLE_EQ(f2.at(0, 0), 0.3);

  EXPECT_THROW(dissonance_field({}, 0, 1), Error);
}

TEST(SharedControlProperty, IdentityMidpointAndZeroDissonance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(0.0, 2.0);
  std::uniform_real_distribution<double> w(-2.0, 2.0);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const AutonomousCommand a{v(rng), w(rng), i};
    const FusedCommand id = fuse(a, {}, kLimits);
    ASSERT_EQ(id.v, a.v);
    ASSERT_EQ(id.w, a.w);
    EXPECT_EQ(record_dissonance(a, id, {}, 0.0, kLimits).dissonance, 0.0);

    const std::vector<HumanIncrement> inc{{d(rng), d(rng), i}, {d(rng), d(rng), i}};
    const double sv = inc[0].dv + inc[1].dv;
    const double sw = inc[0].dw + inc[1].dw;
    const FusedCommand f = fuse(a, inc, kLimits);
    const bool v_free = a.v + sv >= 0.0 && a.v + sv <= kLimits.v_max;
    const bool w_free = std::abs(a.w + sw) <= kLimits.w_max;
    if (v_free) EXPECT_NEAR(std::abs(f.v - a.v), std::abs(sv) / 2.0, 1e-12);
    if (w_free) EXPECT_NEAR(std::abs(f.w - a.w), std::abs(sw) / 2.0, 1e-12);
  }
}

TEST(SharedControlProperty, LargerPushNeverLowersDissonance) {
  const AutonomousCommand a{0.8, 0.1, 0};
  double previous = 0.0;
  for (double dv = 0.0; dv <= 3.0; dv += 0.05) {
    const std::vector<HumanIncrement> inc{{dv, 0.0, 0}};
    const double dis = record_dissonance(a, fuse(a, inc, kLimits), inc, 0.0, kLimits).dissonance;
    EXPECT_GE(dis, previous - 1e-15);
    previous = dis;
  }
}
