#pragma once

#include "costs.hpp"
#include "equilibrium.hpp"
#include "io.hpp"
#include "noise.hpp"
#include "simulate.hpp"
#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace stackelberg {

struct VerifyConfig {
  std::uint64_t seed = 42;
  std::size_t paths = 10000;
  std::vector<double> eps{-0.2, -0.1, -0.05, 0.05, 0.1, 0.2};
  std::size_t threads = 1;
  // Paths for the brute-force grid; 0 means min(paths, 10000).
  std::size_t grid_paths = 0;
  std::size_t grid_points = 21;
  double grid_range = 3.0;
  // Slope allowance in units of dt.
  double slope_allowance_dt = 1.0;
};

struct VerifyOutcome {
  std::vector<CheckResult> checks;
  std::vector<PerturbationReport> follower;
  std::vector<PerturbationReport> leader;
  GridSearchResult grid;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

namespace detail {

inline double solution_scale(const Equilibrium& eq) {
  double s = 1.0;
  for (std::size_t k = 0; k < eq.grid().nodes(); ++k)
    s = std::max({s, std::abs(eq.P.at(k)), max_abs(eq.pi.Pi1.node(k)), max_abs(eq.pi.Pi2.node(k))});
  return s;
}

inline bool has_sampled_coefficients(const LQModel& m) {
  for (const CoefficientFn* f : {&m.A, &m.B1, &m.B2, &m.C, &m.D1, &m.D2, &m.h, &m.Q1, &m.R1, &m.Q2, &m.R2})
    if (!f->is_constant()) return true;
  return false;
}

inline CheckResult bound_check(std::string name, double value, double tolerance,
                               std::string note = {}) {
  return {std::move(name), value, value, tolerance, value <= tolerance, std::move(note)};
}

}  // namespace detail

/// Runs every identity and optimality check on a solved equilibrium.
inline VerifyOutcome run_verification(const Equilibrium& eq, const VerifyConfig& cfg) {
  const LQModel& m = eq.model;
  const TimeGrid& g = m.grid;
  const std::size_t n = g.steps();
  const double dt = g.dt();
  const double scale = detail::solution_scale(eq);
  VerifyOutcome out;
  auto& checks = out.checks;

  {
    double gap = std::abs(eq.P.at(n) - m.G1);
    gap = std::max(gap, max_abs(Mat2(eq.pi.Pi1.node(n) - eq.blocks.Gbar)));
    gap = std::max(gap, max_abs(eq.pi.Pi2.node(n)));
    gap = std::max(gap, std::abs(eq.follower_filter.theta_hat.node(n)));
    gap = std::max(gap, max_abs(Vec2(eq.Xhat(0) - Vec2(m.x0, 0.0))));
    checks.push_back({"terminal_data", gap, gap, 0.0, gap == 0.0, "bit-exact"});
  }
  {
    const double c = gain_consistency(eq);
    checks.push_back(detail::bound_check("gain_consistency", c, 1e-10, "relative"));
  }
  {
    // Sampled coefficients are piecewise linear, so central differences across
    // their kinks are only first order.
    const auto d = drift_residuals(eq);
    const bool smooth = !detail::has_sampled_coefficients(m);
    const double tol = smooth ? 100.0 * dt * dt * scale : 10.0 * dt * scale;
    const char* note = smooth ? "100 dt^2 scale" : "sampled coefficients; 10 dt scale";
    checks.push_back(detail::bound_check("drift_follower", d.follower_max, tol, note));
    checks.push_back(detail::bound_check("drift_leader", d.leader_max, tol, note));
  }

  const NoiseBundle noise = generate_noise(cfg.seed, cfg.paths, g);
  const TrajectoryEnsemble ens = simulate_closed_loop(eq, noise, cfg.threads);
  {
    std::vector<std::size_t> nodes;
    for (std::size_t c = 1; c <= 10; ++c) nodes.push_back((c * n) / 10);
    double worst_x = 0.0, worst_q = 0.0;
    for (std::size_t c = 0; c < nodes.size(); ++c) {
      const auto& p = ens.paths;
      std::vector<double> xs(p.size()), qs(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        xs[i] = p[i].x[nodes[c]];
        qs[i] = p[i].q[nodes[c]];
      }
      const auto sx = mean_stderr(xs), sq = mean_stderr(qs);
      const Vec2& Xh = eq.Xhat(nodes[c]);
      // in units of stderr; an exact match with zero spread counts as 0
      auto sigmas = [](double gap, double se) { return gap == 0.0 ? 0.0 : gap / se; };
      worst_x = std::max(worst_x, sigmas(std::abs(sx.mean - Xh(0)), sx.std_error));
      worst_q = std::max(worst_q, sigmas(std::abs(sq.mean - Xh(1)), sq.std_error));
    }
    checks.push_back(detail::bound_check("tower_x", worst_x, 3.0, "stderr units"));
    checks.push_back(detail::bound_check("tower_q", worst_q, 3.0, "stderr units"));
  }
  {
    const auto z = mean_stderr(density_terminal(m, noise, cfg.threads));
    checks.push_back(detail::bound_check("girsanov", std::abs(z.mean - 1.0), 3.0 * z.std_error,
                                         "3 stderr"));
  }

  std::vector<std::vector<double>> thetas(ens.paths.size());
  parallel_for(ens.paths.size(), cfg.threads,
               [&](std::size_t i) { thetas[i] = backfill_theta(eq, ens.paths[i]); });
  {
    const auto r = follower_stationarity_residual(eq, ens, thetas);
    bool ok = true;
    double bound_at_max = 0.0, seen = -1.0;
    for (std::size_t k = 0; k < r.residual.size(); ++k) {
      const double bound = 3.0 * r.std_error[k] + dt * scale;
      ok = ok && std::abs(r.residual[k]) <= bound;
      if (std::abs(r.residual[k]) > seen) {
        seen = std::abs(r.residual[k]);
        bound_at_max = bound;
      }
    }
    checks.push_back({"stationarity_follower", r.max_abs, r.rms, bound_at_max, ok,
                      "|r1| <= 3 stderr + dt scale per node"});
    const auto l = leader_stationarity_residual(eq, ens);
    checks.push_back({"stationarity_leader", l.max_abs, l.rms, 1e-8 * scale,
                      l.max_abs <= 1e-8 * scale, "algebraic"});
  }
  {
    double zero = 0.0, terminal = 0.0;
    for (std::size_t i = 0; i < ens.paths.size(); ++i) {
      const auto adj = reconstruct_adjoints(eq, ens.paths[i], thetas[i]);
      for (const auto& a : adj) zero = std::max(zero, std::abs(a.Z(1)));
      const Vec2 XT(ens.paths[i].x[n], ens.paths[i].q[n]);
      const Vec2 expect = eq.blocks.Gbar * XT;
      terminal = std::max(terminal, max_abs(Vec2(adj[n].Y - expect)) / (1.0 + max_abs(expect)));
    }
    checks.push_back(detail::bound_check("adjoint_structural_zero", zero, 1e-9 * scale));
    checks.push_back(detail::bound_check("adjoint_terminal", terminal, 1e-12, "relative"));
  }
  {
    const auto b = bsde_residual(eq, ens, thetas, noise);
    checks.push_back(detail::bound_check("bsde_residual", b.rms,
                                         10.0 * dt * scale * (1.0 + std::abs(m.x0)),
                                         "rms; 10 dt scale (1+|x0|)"));
  }

  const auto dirs = standard_perturbations(g.horizon());
  out.follower = verify_follower_optimality(eq, dirs, cfg.eps, noise, cfg.threads);
  out.leader = verify_leader_optimality(eq, dirs, cfg.eps, noise, cfg.threads);
  for (auto* reps : {&out.follower, &out.leader}) {
    for (auto& r : *reps) {
      r.slope_allowance = cfg.slope_allowance_dt * dt;
      std::string note = r.in_proven_scope ? "" : "outside proven scope (D1, D2 nonzero)";
      checks.push_back({r.description, std::abs(r.slope.mean), r.slope.std_error,
                        3.0 * r.slope.std_error + r.slope_allowance, r.passed(), note});
    }
  }

  {
    std::vector<double> axis(cfg.grid_points);
    for (std::size_t i = 0; i < axis.size(); ++i)
      axis[i] = -cfg.grid_range +
                2.0 * cfg.grid_range * static_cast<double>(i) / static_cast<double>(axis.size() - 1);
    const std::size_t gp = cfg.grid_paths ? cfg.grid_paths : std::min<std::size_t>(cfg.paths, 10000);
    out.grid = gain_grid_search(eq, axis, axis, generate_noise(cfg.seed, gp, g), cfg.threads);
    const auto& best = out.grid.table[out.grid.best].cost;
    const double gap = out.grid.equilibrium.mean - best.mean;
    checks.push_back({"brute_force_grid", gap, out.grid.equilibrium.std_error,
                      2.0 * best.std_error, gap <= 2.0 * best.std_error,
                      "J1(eq) - min grid J1 <= 2 stderr"});
  }
  return out;
}

}  // namespace stackelberg
