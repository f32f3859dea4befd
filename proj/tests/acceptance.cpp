// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "fixtures.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

using namespace stackelberg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
  Verdict v;
  const auto start = Clock::now();
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("%-4s criterion %2d %-28s %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.c_str(), seconds_since(start));
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

LQModel follower_only(double Q1, double G1, std::size_t steps) {
  LQModel m = fixtures::benchmark(steps);
  m.A = 0.0;
  m.C = 0.0;
  m.Q1 = Q1;
  m.G1 = G1;
  return m;
}

const std::vector<double> kEps{-0.2, -0.1, -0.05, 0.05, 0.1, 0.2};
constexpr std::size_t kPaths = 100000;

Verdict optimality(bool leader) {
  const Equilibrium eq = solve_equilibrium(fixtures::benchmark(4000));
  const auto noise = generate_noise(42, kPaths, eq.grid());
  const auto dirs = standard_perturbations(1.0);
  const auto reps = leader ? verify_leader_optimality(eq, dirs, kEps, noise, hardware_threads())
                           : verify_follower_optimality(eq, dirs, kEps, noise, hardware_threads());
  Verdict v{true, ""};
  for (const auto& r : reps) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& p : r.points) worst = std::min(worst, p.delta.mean / p.delta.std_error);
    v.pass = v.pass && r.passed();
    v.detail += r.description + " slope " + num(r.slope.mean / r.slope.std_error) +
                "se curv " + num(r.curvature.mean) + " min dJ " + num(worst) + "se; ";
  }
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STACKELBERG_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  criterion(1, "follower Riccati", [] {
    const auto start = Clock::now();
    const double rational = solve_follower_P(follower_only(0.0, 1.0, 1000)).at(0);
    const double tanh_case = solve_follower_P(follower_only(1.0, 0.0, 1000)).at(0);
    const double secs = seconds_since(start);
    const double e1 = std::abs(rational - 0.5);
    const double e2 = std::abs(tanh_case - 0.76159415595576488812);
    return Verdict{e1 <= 1e-8 && e2 <= 1e-8 && secs < 1.0,
                   "|P(0)-1/2| " + num(e1) + ", |P(0)-tanh 1| " + num(e2) + ", " + num(secs) + "s"};
  });

  criterion(2, "integrator order", [] {
    auto pi1 = [](std::size_t n) {
      const LQModel m = fixtures::benchmark(n);
      return solve_leader_riccati(m, assemble_leader_blocks(m, solve_follower_P(m))).Pi1.node(0);
    };
    const Mat2 ref = pi1(100000);
    const double ratio = max_abs(Mat2(pi1(200) - ref)) / max_abs(Mat2(pi1(400) - ref));
    return Verdict{ratio >= 12.0 && ratio <= 20.0, "error ratio " + num(ratio)};
  });

  criterion(3, "terminal data", [] {
    const Equilibrium eq = solve_equilibrium(fixtures::benchmark(200));
    const bool ok = eq.pi.Pi1.node(200) == leader_terminal(eq.model) &&
                    eq.pi.Pi2.node(200) == Mat2(Mat2::Zero()) && eq.P.at(200) == eq.model.G1 &&
                    eq.follower_filter.theta_hat.node(200) == 0.0 &&
                    eq.Xhat(0) == Vec2(eq.model.x0, 0.0);
    return Verdict{ok, ok ? "bit-exact" : "mismatch"};
  });

  criterion(4, "drift residuals", [] {
    const auto r4 = drift_residuals(solve_equilibrium(fixtures::benchmark(400)));
    const auto r8 = drift_residuals(solve_equilibrium(fixtures::benchmark(800)));
    const double f = r4.follower_max / r8.follower_max, l = r4.leader_max / r8.leader_max;
    const double dt2 = std::pow(1.0 / 400.0, 2);
    return Verdict{f >= 3.5 && f <= 4.5 && l >= 3.5 && l <= 4.5,
                   "ratios " + num(f) + " / " + num(l) + ", C = " + num(r4.follower_max / dt2) +
                       " / " + num(r4.leader_max / dt2)};
  });

  criterion(5, "tower property", [] {
    const auto start = Clock::now();
    const Equilibrium eq = solve_equilibrium(fixtures::benchmark(200));
    std::vector<std::size_t> nodes;
    for (std::size_t c = 1; c <= 10; ++c) nodes.push_back(20 * c);
    const auto cps =
        tower_check(eq, generate_noise(42, kPaths, eq.grid()), nodes, hardware_threads());
    const double secs = seconds_since(start);
    double worst = 0.0;
    for (const auto& c : cps)
      for (int d = 0; d < 2; ++d)
        worst = std::max(worst, std::abs(c.mean(d) - c.xhat(d)) / c.std_error(d));
    return Verdict{worst <= 3.0 && secs < 60.0,
                   "worst " + num(worst) + " stderr, " + num(secs) + "s"};
  });

  criterion(6, "Girsanov martingale", [] {
    const LQModel m = fixtures::benchmark(200);
    const auto s =
        mean_stderr(density_terminal(m, generate_noise(42, kPaths, m.grid), hardware_threads()));
    const double z = std::abs(s.mean - 1.0) / s.std_error;
    return Verdict{z <= 3.0, "|mean Z(T) - 1| = " + num(z) + " stderr"};
  });

  criterion(7, "gain consistency", [] {
    double worst = gain_consistency(solve_equilibrium(fixtures::benchmark(200)));
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 10; ++i)
      worst = std::max(worst, gain_consistency(solve_equilibrium(fixtures::random_model(rng))));
    return Verdict{worst <= 1e-10, "max relative gap " + num(worst)};
  });

  criterion(8, "follower optimality", [] { return optimality(false); });
  criterion(9, "leader optimality", [] { return optimality(true); });

  criterion(10, "brute-force dominance", [] {
    const Equilibrium eq = solve_equilibrium(fixtures::benchmark(200));
    std::vector<double> axis;
    for (int i = 0; i <= 20; ++i) axis.push_back(-3.0 + 0.3 * i);
    const auto res =
        gain_grid_search(eq, axis, axis, generate_noise(42, 10000, eq.grid()), hardware_threads());
    const auto& best = res.table[res.best];
    return Verdict{res.equilibrium.mean <= best.cost.mean + 2.0 * best.cost.std_error,
                   "J1 " + num(res.equilibrium.mean) + " vs grid min " + num(best.cost.mean) +
                       " +- " + num(best.cost.std_error) + " at (" + num(best.alpha) + ", " +
                       num(best.beta) + ")"};
  });

  criterion(11, "BSDE residual order", [] {
    auto rms = [](std::size_t n) {
      const Equilibrium eq = solve_equilibrium(fixtures::benchmark(n));
      return bsde_residual_streaming(eq, generate_noise(42, 10000, eq.grid()), hardware_threads())
          .rms;
    };
    const double ratio = rms(400) / rms(800);
    return Verdict{ratio >= 1.6 && ratio <= 2.6, "RMS ratio " + num(ratio)};
  });

  criterion(12, "reproducibility", [] {
    const fs::path root = fs::temp_directory_path() / "stackelberg_acceptance";
    fs::remove_all(root);
    const std::string base = std::string("verify --model ") + STACKELBERG_MODELS +
                             "/benchmark.json --seed 42 --paths 2000 --out ";
    const int a = run_cli(base + (root / "a").string() + " --threads 1");
    const int b = run_cli(base + (root / "b").string() + " --threads 1");
    const int c = run_cli(base + (root / "c").string() + " --threads 8");
    bool same = true;
    for (const char* f : {"verify_report.csv", "follower_perturbation.csv",
                          "leader_perturbation.csv", "grid_search.csv"}) {
      const std::string ref = slurp(root / "a" / f);
      same = same && !ref.empty() && ref == slurp(root / "b" / f) && ref == slurp(root / "c" / f);
    }
    fs::remove_all(root);
    return Verdict{same, "4 CSVs, exit codes " + std::to_string(a) + "/" + std::to_string(b) +
                             "/" + std::to_string(c) + (same ? ", identical" : ", differ")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
