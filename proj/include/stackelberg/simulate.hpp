#pragma once

#include "filter.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "solver.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stackelberg {

// Node values of one simulated path. q is empty for open-loop runs.
struct PathRecord {
  std::vector<double> x, q, u1, u2;
};

struct TrajectoryEnsemble {
  TimeGrid grid;
  std::uint64_t seed = 0;
  bool closed_loop = false;
  std::vector<PathRecord> paths;
  std::vector<Vec2> Xhat;  // shared filtered state; empty for open-loop runs
};

namespace detail {

[[noreturn]] inline void non_finite_state(std::size_t path, std::size_t step) {
  throw Error(ErrorKind::NonFiniteState,
              "path " + std::to_string(path) + " step " + std::to_string(step));
}

}  // namespace detail

enum class Scheme {
  // Euler-Maruyama on the deviation X - Xhat, so that the ensemble mean follows
  // the RK4 filter instead of its Euler discretisation.
  FilterCorrected,
  // Plain Euler-Maruyama on X.
  EulerMaruyama,
};

/// Closed-loop augmented system, one path.
inline PathRecord simulate_closed_loop_path(const Equilibrium& eq, std::span<const double> dW,
                                            std::size_t path_id = 0,
                                            Scheme scheme = Scheme::FilterCorrected) {
  const std::size_t n = eq.grid().steps();
  const double dt = eq.grid().dt();
  PathRecord r;
  r.x.resize(n + 1);
  r.q.resize(n + 1);
  r.u1.resize(n + 1);
  r.u2.resize(n + 1);
  Vec2 X(eq.model.x0, 0.0);
  for (std::size_t k = 0;; ++k) {
    const Vec2& Xh = eq.Xhat(k);
    const GainSet& g = eq.gains.at.node(k);
    r.x[k] = X(0);
    r.q[k] = X(1);
    r.u1[k] = apply(g.follower_xhat, Xh);
    r.u2[k] = apply(g.leader_x, X) + apply(g.leader_xhat, Xh);
    if (k == n) break;
    const ClosedLoopMatrices& c = eq.closed_loop[k];
    const Vec2 drift = c.drift_x * X + c.drift_xhat * Xh;
    const Vec2 diffusion = c.diff_x * X + c.diff_xhat * Xh;
    X = X + drift * dt + diffusion * dW[k];
    if (scheme == Scheme::FilterCorrected) X += eq.filter_defect[k];
    if (!X.allFinite()) detail::non_finite_state(path_id, k + 1);
  }
  return r;
}

inline TrajectoryEnsemble simulate_closed_loop(const Equilibrium& eq, const NoiseBundle& noise,
                                               std::size_t threads = 1,
                                               Scheme scheme = Scheme::FilterCorrected) {
  TrajectoryEnsemble ens;
  ens.grid = eq.grid();
  ens.seed = noise.seed();
  ens.closed_loop = true;
  ens.Xhat = eq.leader_filter.Xhat.node_values();
  ens.paths.resize(noise.paths());
  parallel_for(noise.paths(), threads, [&](std::size_t i) {
    ens.paths[i] = simulate_closed_loop_path(eq, noise.state_increments(i), i, scheme);
  });
  return ens;
}

// Model coefficients sampled once at the nodes, for tight simulation loops.
struct NodeCoefficients {
  std::vector<double> A, B1, B2, C, D1, D2;

  explicit NodeCoefficients(const LQModel& m) {
    for (std::size_t k = 0; k < m.grid.nodes(); ++k) {
      A.push_back(m.A.at_node(k));
      B1.push_back(m.B1.at_node(k));
      B2.push_back(m.B2.at_node(k));
      C.push_back(m.C.at_node(k));
      D1.push_back(m.D1.at_node(k));
      D2.push_back(m.D2.at_node(k));
    }
  }
};

/// Euler-Maruyama for the scalar state under given control samples; writes
/// the N+1 node values into x.
inline void open_loop_state(const NodeCoefficients& c, double x0, double dt,
                            std::span<const double> u1, std::span<const double> u2,
                            std::span<const double> dW, std::span<double> x,
                            std::size_t path_id = 0) {
  const std::size_t n = dW.size();
  x[0] = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double drift = c.A[k] * x[k] + c.B1[k] * u1[k] + c.B2[k] * u2[k];
    const double diffusion = c.C[k] * x[k] + c.D1[k] * u1[k] + c.D2[k] * u2[k];
    x[k + 1] = x[k] + drift * dt + diffusion * dW[k];
    if (!std::isfinite(x[k + 1])) detail::non_finite_state(path_id, k + 1);
  }
}

inline PathRecord simulate_open_loop_path(const LQModel& m, std::span<const double> u1,
                                          std::span<const double> u2, std::span<const double> dW,
                                          std::size_t path_id = 0) {
  PathRecord r;
  r.u1.assign(u1.begin(), u1.end());
  r.u2.assign(u2.begin(), u2.end());
  r.x.resize(m.grid.nodes());
  open_loop_state(NodeCoefficients(m), m.x0, m.grid.dt(), u1, u2, dW, r.x, path_id);
  return r;
}

// A control given per path as node samples; deterministic controls ignore the index.
using ControlProcess = std::function<std::vector<double>(std::size_t path)>;

inline ControlProcess deterministic_control(std::vector<double> nodes) {
  return [v = std::move(nodes)](std::size_t) { return v; };
}

inline TrajectoryEnsemble simulate_open_loop(const LQModel& m, const ControlProcess& u1,
                                             const ControlProcess& u2, const NoiseBundle& noise,
                                             std::size_t threads = 1) {
  TrajectoryEnsemble ens;
  ens.grid = m.grid;
  ens.seed = noise.seed();
  ens.paths.resize(noise.paths());
  const NodeCoefficients coeffs(m);
  parallel_for(noise.paths(), threads, [&](std::size_t i) {
    PathRecord r;
    r.u1 = u1(i);
    r.u2 = u2(i);
    if (r.u1.size() != m.grid.nodes() || r.u2.size() != m.grid.nodes())
      throw Error(ErrorKind::LengthMismatch, "control samples do not match grid");
    r.x.resize(m.grid.nodes());
    open_loop_state(coeffs, m.x0, m.grid.dt(), r.u1, r.u2, noise.state_increments(i), r.x, i);
    ens.paths[i] = std::move(r);
  });
  return ens;
}

/// Pathwise reconstruction of the follower's Theta along a realised state and
/// leader control: Theta = Thetahat + D where D solves the backward ODE
/// driven by the deviations (x - xhat, u2 - uhat2), RK4 with deviations
/// interpolated linearly between nodes. Theta(T) = 0.
inline std::vector<double> backfill_theta(const LQModel& m, const FollowerRiccati& P,
                                          const FilterPath& filter,
                                          const HalfGridSeries<double>& u2hat,
                                          std::span<const double> x, std::span<const double> u2,
                                          const RiccatiOptions& opt = {}) {
  const std::size_t n = m.grid.steps();
  auto deviation = [&](std::span<const double> path, auto&& mean, std::size_t j) {
    if (j % 2 == 0) return path[j / 2] - mean(j);
    return 0.5 * ((path[j / 2] - mean(j - 1)) + (path[j / 2 + 1] - mean(j + 1)));
  };
  auto xhat = [&](std::size_t j) { return filter.xhat.half(j); };
  auto uhat = [&](std::size_t j) { return u2hat.half(j); };
  auto rhs = [&](std::size_t j, double d) {
    const auto [s, b, p] = detail::follower_filter_coefficients(m, P, j, opt);
    const double ex = deviation(x, xhat, j);
    const double eu = deviation(u2, uhat, j);
    const double B2C = m.B2.at_half(j) + m.D2.at_half(j) * m.C.at_half(j);
    return -(b * b * s * p * p * ex + B2C * p * eu + m.A.at_half(j) * d);
  };
  const auto dev = integrate_backward(m.grid, 0.0, rhs);
  std::vector<double> theta(n + 1);
  for (std::size_t k = 0; k <= n; ++k) theta[k] = filter.theta_hat.node(k) + dev.node(k);
  theta[n] = 0.0;
  return theta;
}

/// Girsanov density for deterministic h along one observation-noise path:
/// Z_k = exp(sum_{j<k} h_j dWbar_j - 1/2 sum_{j<k} h_j^2 dt).
inline std::vector<double> density_path(const LQModel& m, std::span<const double> dWbar) {
  const std::size_t n = m.grid.steps();
  const double dt = m.grid.dt();
  std::vector<double> z(n + 1);
  z[0] = 1.0;
  double exponent = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double h = m.h.at_node(k);
    exponent += h * dWbar[k] - 0.5 * h * h * dt;
    z[k + 1] = std::exp(exponent);
  }
  return z;
}

inline std::vector<std::vector<double>> density_process(const LQModel& m, const NoiseBundle& noise,
                                                        std::size_t threads = 1) {
  std::vector<std::vector<double>> out(noise.paths());
  parallel_for(noise.paths(), threads, [&](std::size_t i) {
    out[i] = density_path(m, noise.observation_increments(i));
  });
  return out;
}

inline std::vector<double> density_terminal(const LQModel& m, const NoiseBundle& noise,
                                            std::size_t threads = 1) {
  std::vector<double> out(noise.paths());
  parallel_for(noise.paths(), threads, [&](std::size_t i) {
    out[i] = density_path(m, noise.observation_increments(i)).back();
  });
  return out;
}

}  // namespace stackelberg
