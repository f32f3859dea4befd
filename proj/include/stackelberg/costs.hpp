#pragma once

#include "filter.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "simulate.hpp"
#include "solver.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace stackelberg {

enum class CostKind { J1, J2 };

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  CostKind which = CostKind::J1;
};

/// 1/2 [ int (Q x^2 + R u^2) dt + G x(T)^2 ] with the trapezoidal rule on the nodes.
inline double path_cost(const CoefficientFn& Q, const CoefficientFn& R, double G,
                        std::span<const double> x, std::span<const double> u, double dt) {
  const std::size_t n = x.size() - 1;
  auto running = [&](std::size_t k) { return Q.at_node(k) * x[k] * x[k] + R.at_node(k) * u[k] * u[k]; };
  double integral = 0.5 * (running(0) + running(n));
  for (std::size_t k = 1; k < n; ++k) integral += running(k);
  return 0.5 * (integral * dt + G * x[n] * x[n]);
}

namespace detail {

inline CostEstimate estimate_cost(const LQModel& m, const TrajectoryEnsemble& ens, CostKind which) {
  std::vector<double> v;
  v.reserve(ens.paths.size());
  for (const auto& p : ens.paths) {
    v.push_back(which == CostKind::J1 ? path_cost(m.Q1, m.R1, m.G1, p.x, p.u1, m.grid.dt())
                                      : path_cost(m.Q2, m.R2, m.G2, p.x, p.u2, m.grid.dt()));
  }
  const auto s = mean_stderr(v);
  return {s.mean, s.std_error, v.size(), which};
}

}  // namespace detail

inline CostEstimate estimate_J1(const LQModel& m, const TrajectoryEnsemble& ens) {
  return detail::estimate_cost(m, ens, CostKind::J1);
}

inline CostEstimate estimate_J2(const LQModel& m, const TrajectoryEnsemble& ens) {
  return detail::estimate_cost(m, ens, CostKind::J2);
}

// ---------------------------------------------------------------------------
// Perturbation checks

struct Perturbation {
  std::string name;
  std::function<double(double)> direction;  // deterministic function of time
};

inline std::vector<Perturbation> standard_perturbations(double horizon) {
  return {{"one", [](double) { return 1.0; }},
          {"t", [](double t) { return t; }},
          {"sin", [horizon](double t) { return std::sin(2.0 * std::numbers::pi * t / horizon); }}};
}

struct PerturbationPoint {
  double eps = 0.0;
  MeanStderr delta;      // J(eps) - J(0), common random numbers
  MeanStderr cost;       // J(eps) itself
  double fit_gap = 0.0;  // mean delta minus the fitted quadratic at eps
};

struct PerturbationReport {
  std::string description;
  CostKind which = CostKind::J1;
  bool in_proven_scope = true;
  std::vector<PerturbationPoint> points;
  MeanStderr slope;      // central difference at the smallest |eps|
  MeanStderr linear;     // least-squares c1 in delta = c1 eps + c2 eps^2
  MeanStderr curvature;  // least-squares c2
  double sigma_factor = 3.0;
  // Added to the slope bound; covers the O(dt) weak bias of Euler paths.
  double slope_allowance = 0.0;

  bool nonnegative() const {
    for (const auto& p : points)
      if (p.delta.mean < -sigma_factor * p.delta.std_error) return false;
    return true;
  }
  bool flat_at_zero() const {
    return std::abs(slope.mean) <= sigma_factor * slope.std_error + slope_allowance;
  }
  bool convex() const { return curvature.mean >= 0.0; }
  bool quadratic() const {
    for (const auto& p : points)
      if (std::abs(p.fit_gap) > sigma_factor * p.delta.std_error) return false;
    return true;
  }
  bool passed() const { return nonnegative() && flat_at_zero() && convex(); }
};

namespace detail {

inline void check_eps(const std::vector<double>& eps) {
  if (eps.empty()) throw Error(ErrorKind::OutOfRange, "empty eps list");
  for (double e : eps) {
    if (e == 0.0 || !std::isfinite(e)) throw Error(ErrorKind::OutOfRange, "eps must be nonzero");
    bool mirrored = false;
    for (double f : eps) mirrored = mirrored || f == -e;
    if (!mirrored) throw Error(ErrorKind::OutOfRange, "eps list must be symmetric around 0");
  }
}

// deltas[e * M + i] = J_i(eps_e) - J_i(0), costs likewise.
inline PerturbationReport summarize_perturbation(std::string description, CostKind which,
                                                 const std::vector<double>& eps,
                                                 std::span<const double> deltas,
                                                 std::span<const double> costs, std::size_t M) {
  PerturbationReport rep;
  rep.description = std::move(description);
  rep.which = which;
  const std::size_t E = eps.size();

  // Least-squares weights for c1, c2 from the 2x2 normal equations.
  double s2 = 0, s3 = 0, s4 = 0;
  for (double e : eps) {
    s2 += e * e;
    s3 += e * e * e;
    s4 += e * e * e * e;
  }
  const double det = s2 * s4 - s3 * s3;
  std::vector<double> w1(E), w2(E);
  for (std::size_t e = 0; e < E; ++e) {
    w1[e] = (s4 * eps[e] - s3 * eps[e] * eps[e]) / det;
    w2[e] = (s2 * eps[e] * eps[e] - s3 * eps[e]) / det;
  }

  std::size_t plus = 0;
  for (std::size_t e = 0; e < E; ++e)
    if (eps[e] > 0 && (eps[plus] <= 0 || eps[e] < eps[plus])) plus = e;
  std::size_t minus = 0;
  for (std::size_t e = 0; e < E; ++e)
    if (eps[e] == -eps[plus]) minus = e;

  std::vector<double> c1(M), c2(M), slope(M);
  for (std::size_t i = 0; i < M; ++i) {
    double a = 0, b = 0;
    for (std::size_t e = 0; e < E; ++e) {
      a += w1[e] * deltas[e * M + i];
      b += w2[e] * deltas[e * M + i];
    }
    c1[i] = a;
    c2[i] = b;
    slope[i] = (deltas[plus * M + i] - deltas[minus * M + i]) / (2.0 * eps[plus]);
  }
  rep.linear = mean_stderr(c1);
  rep.curvature = mean_stderr(c2);
  rep.slope = mean_stderr(slope);
  for (std::size_t e = 0; e < E; ++e) {
    PerturbationPoint pt;
    pt.eps = eps[e];
    pt.delta = mean_stderr(deltas.subspan(e * M, M));
    pt.cost = mean_stderr(costs.subspan(e * M, M));
    pt.fit_gap = pt.delta.mean - (rep.linear.mean * eps[e] + rep.curvature.mean * eps[e] * eps[e]);
    rep.points.push_back(pt);
  }
  return rep;
}

inline std::vector<double> direction_nodes(const TimeGrid& g, const Perturbation& p) {
  std::vector<double> v(g.nodes());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = p.direction(g.time(k));
  return v;
}

}  // namespace detail

/// Follower check: with the leader's equilibrium control frozen path by path,
/// u1 = u1bar + eps v1 must not lower J1.
///
/// Frozen controls come from plain Euler closed-loop paths, which the
/// open-loop recursion reproduces exactly at eps = 0.
inline std::vector<PerturbationReport> verify_follower_optimality(
    const Equilibrium& eq, const std::vector<Perturbation>& perturbations,
    const std::vector<double>& eps, const NoiseBundle& noise, std::size_t threads = 1) {
  detail::check_eps(eps);
  const LQModel& m = eq.model;
  const TimeGrid& g = m.grid;
  const std::size_t M = noise.paths(), E = eps.size(), V = perturbations.size();
  const NodeCoefficients coeffs(m);
  const std::vector<double> u1bar = eq.u1bar.node_values();

  std::vector<std::vector<double>> u1_cases;  // index v * E + e
  for (const auto& p : perturbations) {
    const auto dir = detail::direction_nodes(g, p);
    for (double e : eps) {
      std::vector<double> u = u1bar;
      for (std::size_t k = 0; k < u.size(); ++k) u[k] += e * dir[k];
      u1_cases.push_back(std::move(u));
    }
  }

  std::vector<double> deltas(V * E * M), costs(V * E * M);
  parallel_for(M, threads, [&](std::size_t i) {
    const auto dW = noise.state_increments(i);
    const PathRecord eqpath = simulate_closed_loop_path(eq, dW, i, Scheme::EulerMaruyama);
    std::vector<double> x(g.nodes());
    open_loop_state(coeffs, m.x0, g.dt(), u1bar, eqpath.u2, dW, x, i);
    const double base = path_cost(m.Q1, m.R1, m.G1, x, u1bar, g.dt());
    for (std::size_t c = 0; c < u1_cases.size(); ++c) {
      open_loop_state(coeffs, m.x0, g.dt(), u1_cases[c], eqpath.u2, dW, x, i);
      const double J = path_cost(m.Q1, m.R1, m.G1, x, u1_cases[c], g.dt());
      costs[c * M + i] = J;
      deltas[c * M + i] = J - base;
    }
  });

  std::vector<PerturbationReport> out;
  for (std::size_t v = 0; v < V; ++v) {
    out.push_back(detail::summarize_perturbation(
        "follower:" + perturbations[v].name, CostKind::J1, eps,
        std::span<const double>(deltas).subspan(v * E * M, E * M),
        std::span<const double>(costs).subspan(v * E * M, E * M), M));
  }
  return out;
}

/// The follower's best response, as node samples, to a deterministic
/// estimate uhat2 of the leader's control.
inline std::vector<double> follower_response(const Equilibrium& eq,
                                             const HalfGridSeries<double>& u2hat) {
  const FilterPath f = solve_follower_filter(eq.model, eq.P, u2hat, eq.options);
  return follower_control_series(eq.model, eq.P, f, u2hat, eq.options).node_values();
}

/// Leader check: u2 = u2bar (frozen path by path) + eps v2, the follower
/// re-optimises against uhat2 + eps v2, and J2 must not decrease.
inline std::vector<PerturbationReport> verify_leader_optimality(
    const Equilibrium& eq, const std::vector<Perturbation>& perturbations,
    const std::vector<double>& eps, const NoiseBundle& noise, std::size_t threads = 1) {
  detail::check_eps(eps);
  const LQModel& m = eq.model;
  const TimeGrid& g = m.grid;
  const std::size_t M = noise.paths(), E = eps.size(), V = perturbations.size();
  const NodeCoefficients coeffs(m);

  const std::vector<double> u1_base = follower_response(eq, eq.u2hat);
  std::vector<std::vector<double>> u1_cases, shift_cases;
  for (const auto& p : perturbations) {
    const auto dir = detail::direction_nodes(g, p);
    for (double e : eps) {
      auto shifted = HalfGridSeries<double>::generate(g.steps(), [&](std::size_t j) {
        return eq.u2hat.half(j) + e * p.direction(g.half_time(j));
      });
      u1_cases.push_back(follower_response(eq, shifted));
      std::vector<double> shift(g.nodes());
      for (std::size_t k = 0; k < shift.size(); ++k) shift[k] = e * dir[k];
      shift_cases.push_back(std::move(shift));
    }
  }

  std::vector<double> deltas(V * E * M), costs(V * E * M);
  parallel_for(M, threads, [&](std::size_t i) {
    const auto dW = noise.state_increments(i);
    const PathRecord eqpath = simulate_closed_loop_path(eq, dW, i, Scheme::EulerMaruyama);
    std::vector<double> x(g.nodes()), u2(g.nodes());
    open_loop_state(coeffs, m.x0, g.dt(), u1_base, eqpath.u2, dW, x, i);
    const double base = path_cost(m.Q2, m.R2, m.G2, x, eqpath.u2, g.dt());
    for (std::size_t c = 0; c < u1_cases.size(); ++c) {
      for (std::size_t k = 0; k < u2.size(); ++k) u2[k] = eqpath.u2[k] + shift_cases[c][k];
      open_loop_state(coeffs, m.x0, g.dt(), u1_cases[c], u2, dW, x, i);
      const double J = path_cost(m.Q2, m.R2, m.G2, x, u2, g.dt());
      costs[c * M + i] = J;
      deltas[c * M + i] = J - base;
    }
  });

  std::vector<PerturbationReport> out;
  for (std::size_t v = 0; v < V; ++v) {
    auto rep = detail::summarize_perturbation(
        "leader:" + perturbations[v].name, CostKind::J2, eps,
        std::span<const double>(deltas).subspan(v * E * M, E * M),
        std::span<const double>(costs).subspan(v * E * M, E * M), M);
    rep.in_proven_scope = m.diffusion_control_free();
    out.push_back(std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force comparison against constant-gain follower laws

struct GridPoint {
  double alpha = 0.0, beta = 0.0;
  MeanStderr cost;
};

struct GridSearchResult {
  std::vector<GridPoint> table;
  std::size_t best = 0;
  MeanStderr equilibrium;  // J1 of the equilibrium follower control, same noise
};

/// Evaluates J1 for follower laws u1 = alpha xhat + beta, xhat being the mean
/// state the law itself induces, with the leader's equilibrium control frozen
/// path by path and common random numbers throughout.
inline GridSearchResult gain_grid_search(const Equilibrium& eq, const std::vector<double>& alphas,
                                         const std::vector<double>& betas,
                                         const NoiseBundle& noise, std::size_t threads = 1) {
  const LQModel& m = eq.model;
  const TimeGrid& g = m.grid;
  const std::size_t M = noise.paths();
  const NodeCoefficients coeffs(m);

  std::vector<GridPoint> table;
  std::vector<std::vector<double>> laws;
  for (double a : alphas) {
    for (double b : betas) {
      const auto xhat = integrate_forward(g, m.x0, [&](std::size_t j, double x) {
        return m.A.at_half(j) * x + m.B1.at_half(j) * (a * x + b) +
               m.B2.at_half(j) * eq.u2hat.half(j);
      });
      std::vector<double> u(g.nodes());
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = a * xhat.node(k) + b;
      laws.push_back(std::move(u));
      table.push_back({a, b, {}});
    }
  }
  const std::vector<double> u1bar = eq.u1bar.node_values();
  const std::size_t L = laws.size();
  std::vector<double> costs((L + 1) * M);
  parallel_for(M, threads, [&](std::size_t i) {
    const auto dW = noise.state_increments(i);
    const PathRecord eqpath = simulate_closed_loop_path(eq, dW, i, Scheme::EulerMaruyama);
    std::vector<double> x(g.nodes());
    for (std::size_t l = 0; l < L; ++l) {
      open_loop_state(coeffs, m.x0, g.dt(), laws[l], eqpath.u2, dW, x, i);
      costs[l * M + i] = path_cost(m.Q1, m.R1, m.G1, x, laws[l], g.dt());
    }
    open_loop_state(coeffs, m.x0, g.dt(), u1bar, eqpath.u2, dW, x, i);
    costs[L * M + i] = path_cost(m.Q1, m.R1, m.G1, x, u1bar, g.dt());
  });

  GridSearchResult out;
  for (std::size_t l = 0; l < L; ++l) {
    table[l].cost = mean_stderr(std::span<const double>(costs).subspan(l * M, M));
    if (table[l].cost.mean < table[out.best].cost.mean) out.best = l;
  }
  out.equilibrium = mean_stderr(std::span<const double>(costs).subspan(L * M, M));
  out.table = std::move(table);
  return out;
}

}  // namespace stackelberg
