#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace stackelberg;

namespace {

LQModel simple(std::size_t steps = 100) {
  LQModel m = fixtures::benchmark(steps);
  m.A = 0.0;
  m.C = 0.0;
  m.h = 0.0;
  return m;
}

bool has(const std::vector<Violation>& vs, const std::string& hyp, ErrorKind kind) {
  for (const auto& v : vs)
    if (v.hypothesis == hyp && v.kind == kind) return true;
  return false;
}

}  // namespace

TEST(TimeGrid, NodesAndHalfNodes) {
  const TimeGrid g(2.0, 4);
  EXPECT_EQ(g.nodes(), 5u);
  EXPECT_EQ(g.half_nodes(), 9u);
  EXPECT_DOUBLE_EQ(g.dt(), 0.5);
  EXPECT_EQ(g.time(4), 2.0);
  EXPECT_EQ(g.half_time(8), 2.0);
  EXPECT_DOUBLE_EQ(g.half_time(3), 0.75);
  EXPECT_EQ(g.time(2), g.half_time(4));
}

TEST(TimeGrid, RejectsBadHorizon) {
  EXPECT_THROW(TimeGrid(0.0, 10), Error);
  EXPECT_THROW(TimeGrid(-1.0, 10), Error);
  EXPECT_THROW(TimeGrid(1.0, 0), Error);
}

TEST(Coefficient, ConstantEverywhere) {
  const TimeGrid g(1.0, 10);
  EXPECT_EQ(sample_at(CoefficientFn(3.0), 0.37, g), 3.0);
}

TEST(Coefficient, LinearBetweenNodes) {
  EXPECT_DOUBLE_EQ(sample_at(CoefficientFn(std::vector<double>{0.0, 1.0}), 0.5, TimeGrid(1.0, 1)),
                   0.5);
}

TEST(Coefficient, ExactAtNodes) {
  EXPECT_EQ(sample_at(CoefficientFn(std::vector<double>{2.0, 2.0, 2.0}), 1.0, TimeGrid(1.0, 2)), 2.0);
  const CoefficientFn f(std::vector<double>{1.0, 4.0, -2.0});
  const TimeGrid g(1.0, 2);
  EXPECT_EQ(sample_at(f, 0.5, g), 4.0);
  EXPECT_EQ(f.at_half(2), 4.0);
  EXPECT_EQ(f.at_half(3), 1.0);
}

TEST(Coefficient, OutOfRangeAndMismatch) {
  const TimeGrid g(1.0, 2);
  EXPECT_THROW(sample_at(CoefficientFn(1.0), 1.5, g), Error);
  EXPECT_THROW(sample_at(CoefficientFn(1.0), -0.1, g), Error);
  try {
    sample_at(CoefficientFn(std::vector<double>{1.0, 2.0}), 0.5, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(Validate, SimpleModelAccepted) {
  const LQModel m = simple();
  EXPECT_TRUE(check_model(m).empty());
  EXPECT_NO_THROW(validate_model(m));
}

TEST(Validate, ZeroR1IsNonPositiveWeight) {
  LQModel m = simple();
  m.R1 = 0.0;
  const auto vs = check_model(m);
  EXPECT_TRUE(has(vs, "H2", ErrorKind::NonPositiveWeight));
  try {
    validate_model(m);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveWeight);
    EXPECT_NE(std::string(e.what()).find("H2"), std::string::npos);
  }
}

TEST(Validate, ShortArrayIsLengthMismatch) {
  LQModel m = simple(100);
  m.Q1 = std::vector<double>(100, 1.0);
  EXPECT_TRUE(has(check_model(m), "H2", ErrorKind::LengthMismatch));
}

TEST(Validate, LeaderWeights) {
  LQModel m = simple();
  m.R2 = [] {
    std::vector<double> r(101, 1.0);
    r[50] = -0.5;
    return r;
  }();
  m.G2 = -1.0;
  const auto vs = check_model(m);
  EXPECT_TRUE(has(vs, "H4", ErrorKind::NonPositiveWeight));
  EXPECT_TRUE(has(vs, "H4", ErrorKind::NegativeWeight));
}

TEST(Validate, NonFiniteCoefficient) {
  LQModel m = simple();
  m.B2 = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(has(check_model(m), "H1", ErrorKind::NonFinite));
  m = simple();
  m.x0 = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(has(check_model(m), "H1", ErrorKind::NonFinite));
}

TEST(Validate, NeedsTwoSteps) {
  LQModel m = simple();
  m.grid = TimeGrid(1.0, 1);
  EXPECT_FALSE(check_model(m).empty());
}

TEST(Validate, Idempotent) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const LQModel m = fixtures::random_model(rng, 50);
    const LQModel& once = validate_model(m);
    EXPECT_EQ(&once, &m);
    EXPECT_TRUE(check_model(validate_model(once)).empty());
  }
}

TEST(Validate, DiffusionControlFree) {
  LQModel m = simple();
  EXPECT_TRUE(m.diffusion_control_free());
  m.D2 = std::vector<double>(101, 0.0);
  EXPECT_TRUE(m.diffusion_control_free());
  m.D1 = 0.1;
  EXPECT_FALSE(m.diffusion_control_free());
}
