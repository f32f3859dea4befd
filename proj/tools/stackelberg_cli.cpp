// Command-line driver: validate | solve | simulate | verify.
//
// Exit codes: 0 ok, 1 model fails a standing hypothesis, 2 unreadable input or
// bad arguments, 3 solver failure (blow-up, singular block, non-finite path),
// 4 a verification check failed (the report is still written).

#include <stackelberg.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sb = stackelberg;

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kParse = 2, kSolver = 3, kVerification = 4 };

struct Options {
  std::string model;
  std::string out = ".";
  std::uint64_t seed = 42;
  std::size_t paths = 10000;
  std::size_t steps = 0;  // 0 keeps the file's value
  std::string eps = "-0.2,-0.1,-0.05,0.05,0.1,0.2";
  std::size_t threads = sb::hardware_threads();
  std::size_t write_paths = 20;
};

std::vector<double> parse_eps(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw sb::Error(sb::ErrorKind::Parse, "bad --eps entry \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

std::ofstream open_out(const Options& o, const std::string& name) {
  std::filesystem::create_directories(o.out);
  std::ofstream f(std::filesystem::path(o.out) / name);
  if (!f) throw sb::Error(sb::ErrorKind::Parse, "cannot write " + name + " in " + o.out);
  return f;
}

sb::LQModel load(const Options& o) {
  return sb::load_model(o.model, o.steps ? std::optional<std::size_t>(o.steps) : std::nullopt);
}

int exit_for(const sb::Error& e) {
  switch (e.kind()) {
    case sb::ErrorKind::Parse:
    case sb::ErrorKind::OutOfRange:
      return kParse;
    case sb::ErrorKind::RiccatiBlowUp:
    case sb::ErrorKind::H3Violated:
    case sb::ErrorKind::M1NotInvertible:
    case sb::ErrorKind::M2NotInvertible:
    case sb::ErrorKind::NonFiniteState:
      return kSolver;
    default:
      return kValidation;
  }
}

int cmd_validate(const Options& o) {
  const sb::LQModel m = load(o);
  const auto violations = sb::check_model(m);
  bool ok = true;
  auto report = [&](const std::string& hyp) {
    std::string msg;
    for (const auto& v : violations)
      if (v.hypothesis == hyp) msg += (msg.empty() ? "" : "; ") + v.message;
    std::cout << hyp << ' ' << (msg.empty() ? "PASS" : "FAIL: " + msg) << '\n';
    ok = ok && msg.empty();
    return msg.empty();
  };
  report("grid");
  const bool h1 = report("H1");
  const bool h2 = report("H2");
  if (h1 && h2 && ok) {
    try {
      sb::solve_follower_P(m);
      std::cout << "H3 PASS\n";
    } catch (const sb::Error& e) {
      std::cout << "H3 FAIL: " << e.what() << '\n';
      ok = false;
    }
  } else {
    std::cout << "H3 SKIP: needs H1 and H2\n";
  }
  report("H4");
  return ok ? kOk : kValidation;
}

int cmd_solve(const Options& o) {
  const sb::Equilibrium eq = sb::solve_equilibrium(load(o));
  auto r = open_out(o, "riccati.csv");
  sb::write_riccati_csv(r, eq);
  auto g = open_out(o, "gains.csv");
  sb::write_gains_csv(g, eq);
  auto x = open_out(o, "xhat.csv");
  sb::write_xhat_csv(x, eq);
  std::cout << "P(0) = " << sb::fmt(eq.P.at(0)) << '\n';
  return kOk;
}

int cmd_simulate(const Options& o) {
  const sb::Equilibrium eq = sb::solve_equilibrium(load(o));
  const auto noise = sb::generate_noise(o.seed, o.paths, eq.grid());
  const auto ens = sb::simulate_closed_loop(eq, noise, o.threads);
  const auto j1 = sb::estimate_J1(eq.model, ens);
  const auto j2 = sb::estimate_J2(eq.model, ens);
  auto t = open_out(o, "trajectories.csv");
  const std::size_t stride = o.write_paths == 0 ? ens.paths.size() + 1
                                                : std::max<std::size_t>(1, o.paths / o.write_paths);
  sb::write_trajectories_csv(t, ens, stride);
  auto c = open_out(o, "costs.csv");
  sb::write_costs_csv(c, j1, j2);
  std::cout << "J1 = " << sb::fmt(j1.mean) << " +- " << sb::fmt(j1.std_error) << '\n'
            << "J2 = " << sb::fmt(j2.mean) << " +- " << sb::fmt(j2.std_error) << '\n';
  return kOk;
}

int cmd_verify(const Options& o) {
  const sb::Equilibrium eq = sb::solve_equilibrium(load(o));
  sb::VerifyConfig cfg;
  cfg.seed = o.seed;
  cfg.paths = o.paths;
  cfg.eps = parse_eps(o.eps);
  cfg.threads = o.threads;
  const auto outcome = sb::run_verification(eq, cfg);
  auto v = open_out(o, "verify_report.csv");
  sb::write_verify_csv(v, outcome.checks);
  auto f = open_out(o, "follower_perturbation.csv");
  sb::write_perturbation_csv(f, outcome.follower);
  auto l = open_out(o, "leader_perturbation.csv");
  sb::write_perturbation_csv(l, outcome.leader);
  auto g = open_out(o, "grid_search.csv");
  sb::write_grid_csv(g, outcome.grid);
  for (const auto& c : outcome.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << '\n';
  return outcome.passed() ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-loop Stackelberg equilibrium of a scalar LQ leader-follower game"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--model", o.model, "JSON model file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--steps", o.steps, "override the file's step count");
    if (stochastic) {
      sub->add_option("--seed", o.seed, "master seed");
      sub->add_option("--paths", o.paths, "Monte-Carlo paths")->check(CLI::PositiveNumber);
      sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    }
  };
  auto* validate = app.add_subcommand("validate", "check the standing hypotheses");
  common(validate, false);
  auto* solve = app.add_subcommand("solve", "Riccati equations, gains and filtered state");
  common(solve, false);
  auto* simulate = app.add_subcommand("simulate", "closed-loop paths and costs");
  common(simulate, true);
  simulate->add_option("--write-paths", o.write_paths, "paths written to trajectories.csv");
  auto* verify = app.add_subcommand("verify", "identity and optimality checks");
  common(verify, true);
  verify->add_option("--eps", o.eps, "comma-separated perturbation sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*solve) return cmd_solve(o);
    if (*simulate) return cmd_simulate(o);
    return cmd_verify(o);
  } catch (const sb::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const sb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  }
}
