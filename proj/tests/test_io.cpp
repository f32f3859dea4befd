#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace stackelberg;

namespace {

const char* kBenchmark = R"({
  "A": 0.1, "B1": 1.0, "B2": 1.0, "C": 0.2, "D1": 0.0, "D2": 0.0, "h": 1.0,
  "Q1": 1.0, "R1": 1.0, "Q2": 1.0, "R2": 1.0,
  "G1": 1.0, "G2": 1.0, "x0": 1.0, "T": 1.0, "steps": 200
})";

std::string models_dir() { return STACKELBERG_MODELS; }

ErrorKind parse_kind(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << text;
  return ErrorKind::NonFinite;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST(ParseModel, Benchmark) {
  const LQModel m = parse_model(kBenchmark);
  const LQModel ref = fixtures::benchmark(200);
  EXPECT_EQ(m.grid.steps(), 200u);
  EXPECT_EQ(m.grid.horizon(), 1.0);
  EXPECT_EQ(m.A.constant(), ref.A.constant());
  EXPECT_EQ(m.C.constant(), ref.C.constant());
  EXPECT_EQ(m.G1, 1.0);
  EXPECT_EQ(m.x0, 1.0);
  EXPECT_TRUE(check_model(m).empty());
}

TEST(ParseModel, StepOverride) {
  EXPECT_EQ(parse_model(kBenchmark, 37).grid.steps(), 37u);
}

TEST(ParseModel, Errors) {
  EXPECT_EQ(parse_kind("{\"A\": 1"), ErrorKind::Parse);
  EXPECT_EQ(parse_kind("[1, 2]"), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"x0\": 1.0,", "")), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"C\": 0.2", "\"C\": \"big\"")), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"steps\": 200", "\"steps\": 0")), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"steps\": 200", "\"steps\": 2.5")), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"T\": 1.0", "\"T\": -1.0")), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"A\": 0.1", "\"A\": [0.1]")), ErrorKind::Parse);
  EXPECT_EQ(parse_kind(replace(kBenchmark, "\"A\": 0.1", "\"A\": [0.1, null]")), ErrorKind::Parse);
}

TEST(ParseModel, ArraysResampledOntoGrid) {
  const LQModel m = load_model(models_dir() + "/time_varying.json");
  ASSERT_FALSE(m.B2.is_constant());
  EXPECT_EQ(m.B2.samples().size(), 201u);
  EXPECT_EQ(m.B2.at_node(0), 1.0);
  EXPECT_EQ(m.B2.at_node(50), 1.2);
  EXPECT_EQ(m.B2.at_node(100), 1.4);
  EXPECT_DOUBLE_EQ(m.B2.at_node(25), 1.1);
  EXPECT_TRUE(check_model(m).empty());
}

TEST(ParseModel, FullLengthArrayKeptAsIs) {
  std::string arr = "[";
  for (int k = 0; k <= 4; ++k) arr += (k ? "," : "") + std::to_string(0.25 * k);
  arr += "]";
  const LQModel m = parse_model(replace(replace(kBenchmark, "\"A\": 0.1", "\"A\": " + arr),
                                        "\"steps\": 200", "\"steps\": 4"));
  EXPECT_EQ(m.A.samples(), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
}

TEST(ParseModel, FixtureFiles) {
  EXPECT_NO_THROW(validate_model(load_model(models_dir() + "/benchmark.json")));
  EXPECT_NO_THROW(validate_model(load_model(models_dir() + "/zero_weight.json")));
  EXPECT_THROW(validate_model(load_model(models_dir() + "/r1_zero.json")), ValidationError);
  EXPECT_THROW(load_model(models_dir() + "/malformed.json"), Error);
  EXPECT_THROW(load_model(models_dir() + "/does_not_exist.json"), Error);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(fmt(v)), v);
  EXPECT_EQ(fmt(0.5), "0.5");
}

TEST(Csv, SolveOutputs) {
  const Equilibrium eq = solve_equilibrium(fixtures::benchmark(10));
  std::ostringstream r, g, x;
  write_riccati_csv(r, eq);
  write_gains_csv(g, eq);
  write_xhat_csv(x, eq);
  const auto rl = lines(r.str()), gl = lines(g.str()), xl = lines(x.str());
  ASSERT_EQ(rl.size(), 12u);
  EXPECT_EQ(rl[0], "t,P,Pi1_00,Pi1_01,Pi1_10,Pi1_11,Pi2_00,Pi2_01,Pi2_10,Pi2_11");
  EXPECT_EQ(rl[11], "1,1,1,0,0,0,0,0,0,0");
  EXPECT_EQ(gl.size(), 12u);
  EXPECT_EQ(gl[0], "t,LX_1,LX_2,LXhat_1,LXhat_2,F_1,F_2,Lhat_1,Lhat_2");
  EXPECT_EQ(xl.size(), 12u);
  EXPECT_EQ(xl[0], "t,xhat,thetahat,X1,X2");
  EXPECT_EQ(xl[1].substr(0, 4), "0,1,");
}

TEST(Csv, TrajectoriesAndCosts) {
  const Equilibrium eq = solve_equilibrium(fixtures::benchmark(4));
  const auto ens = simulate_closed_loop(eq, generate_noise(1, 10, eq.grid()));
  std::ostringstream t, c;
  write_trajectories_csv(t, ens, 5);
  const auto tl = lines(t.str());
  ASSERT_EQ(tl.size(), 1u + 2u * 5u);
  EXPECT_EQ(tl[0], "path_id,t,X1,X2,u1,u2");
  EXPECT_EQ(tl[6].substr(0, 4), "5,0,");
  write_costs_csv(c, estimate_J1(eq.model, ens), estimate_J2(eq.model, ens));
  const auto cl = lines(c.str());
  ASSERT_EQ(cl.size(), 3u);
  EXPECT_EQ(cl[0], "cost,mean,stderr,paths");
  EXPECT_EQ(cl[1].substr(0, 3), "J1,");
  EXPECT_EQ(cl[2].substr(cl[2].size() - 3), ",10");
}

TEST(Csv, VerifyReport) {
  std::ostringstream os;
  write_verify_csv(os, {{"a", 1.0, 0.5, 2.0, true, "note"}, {"b", 3.0, 3.0, 1.0, false, ""}});
  EXPECT_EQ(os.str(), "check,max_abs,rms,tolerance,pass,note\na,1,0.5,2,pass,note\nb,3,3,1,fail,\n");
}

TEST(Verify, ZeroWeightModelAllZero) {
  const Equilibrium eq = solve_equilibrium(load_model(models_dir() + "/zero_weight.json", 50));
  VerifyConfig cfg;
  cfg.paths = 200;
  cfg.grid_points = 5;
  const auto out = run_verification(eq, cfg);
  for (const auto& c : out.checks) {
    EXPECT_TRUE(c.passed) << c.name << " " << c.max_abs << " " << c.tolerance;
    // Monte-Carlo checks keep their sampling error.
    const bool statistical = c.name.rfind("tower", 0) == 0 || c.name == "girsanov" ||
                             c.name == "brute_force_grid";
    if (!statistical)
      EXPECT_EQ(c.max_abs, 0.0) << c.name;
  }
  EXPECT_TRUE(out.passed());
}

TEST(Verify, BenchmarkPassesAtModerateSize) {
  const Equilibrium eq = solve_equilibrium(fixtures::benchmark(200));
  VerifyConfig cfg;
  cfg.paths = 2000;
  cfg.grid_points = 7;
  const auto out = run_verification(eq, cfg);
  for (const auto& c : out.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.max_abs;
  EXPECT_EQ(out.follower.size(), 3u);
  EXPECT_EQ(out.leader.size(), 3u);
  EXPECT_EQ(out.grid.table.size(), 49u);
}

TEST(Verify, ThreadCountDoesNotChangeReport) {
  std::mt19937_64 rng(19);
  const Equilibrium eq = solve_equilibrium(fixtures::random_model(rng, 60));
  VerifyConfig cfg;
  cfg.paths = 300;
  cfg.grid_points = 3;
  auto render = [&](std::size_t threads) {
    cfg.threads = threads;
    const auto out = run_verification(eq, cfg);
    std::ostringstream os;
    write_verify_csv(os, out.checks);
    write_perturbation_csv(os, out.follower);
    write_perturbation_csv(os, out.leader);
    write_grid_csv(os, out.grid);
    return os.str();
  };
  EXPECT_EQ(render(1), render(6));
}
