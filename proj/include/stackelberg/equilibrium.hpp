#pragma once

#include "filter.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "simulate.hpp"
#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace stackelberg {

inline double hamiltonian_H1(const LQModel& m, double x, double u1, double u2, double p, double k,
                             double t) {
  const auto at = [&](const CoefficientFn& f) { return sample_at(f, t, m.grid); };
  return (at(m.A) * x + at(m.B1) * u1 + at(m.B2) * u2) * p +
         (at(m.C) * x + at(m.D1) * u1 + at(m.D2) * u2) * k + 0.5 * at(m.Q1) * x * x +
         0.5 * at(m.R1) * u1 * u1;
}

// Adjoint processes rebuilt from the decoupling relations at one node.
struct AdjointSample {
  double p = 0.0;     // follower: P x + Theta
  double k = 0.0;     // follower: P (C x + D1 u1 + D2 u2)
  Vec2 Y, Z, Zhat;    // leader: Pi1 X + Pi2 Xhat, Sigma2 X + Sigma3 Xhat, Sigma1 Xhat
};

inline std::vector<AdjointSample> reconstruct_adjoints(const Equilibrium& eq, const PathRecord& path,
                                                       std::span<const double> theta) {
  const LQModel& m = eq.model;
  std::vector<AdjointSample> out(m.grid.nodes());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double P = eq.P.at(k);
    const double x = path.x[k];
    auto& a = out[k];
    a.p = P * x + theta[k];
    a.k = P * (m.C.at_node(k) * x + m.D1.at_node(k) * path.u1[k] + m.D2.at_node(k) * path.u2[k]);
    if (!path.q.empty()) {
      const Vec2 X(x, path.q[k]);
      const Vec2& Xh = eq.Xhat(k);
      const SigmaSet& s = eq.sigma.node(k);
      a.Y = eq.pi.Pi1.node(k) * X + eq.pi.Pi2.node(k) * Xh;
      a.Z = s.S2 * X + s.S3 * Xh;
      a.Zhat = s.S1 * Xh;
    }
  }
  return out;
}

struct ResidualProfile {
  std::vector<double> residual;  // per node
  std::vector<double> std_error; // per node; zero for algebraic identities
  double max_abs = 0.0;
  double rms = 0.0;
};

namespace detail {

inline void summarize(ResidualProfile& r) {
  double ss = 0.0;
  r.max_abs = 0.0;
  for (double v : r.residual) {
    r.max_abs = std::max(r.max_abs, std::abs(v));
    ss += v * v;
  }
  r.rms = r.residual.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(r.residual.size()));
}

}  // namespace detail

/// r1 = R1 u1 + B1 phat + D1 khat with the conditional means replaced by
/// ensemble means (the observation carries no information about W).
inline ResidualProfile follower_stationarity_residual(const Equilibrium& eq,
                                                      const TrajectoryEnsemble& ens,
                                                      const std::vector<std::vector<double>>& thetas) {
  const LQModel& m = eq.model;
  const std::size_t nodes = m.grid.nodes();
  const std::size_t M = ens.paths.size();
  ResidualProfile r;
  r.residual.resize(nodes);
  r.std_error.resize(nodes);
  std::vector<double> samples(M);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double P = eq.P.at(k);
    const double B1 = m.B1.at_node(k), D1 = m.D1.at_node(k);
    for (std::size_t i = 0; i < M; ++i) {
      const PathRecord& path = ens.paths[i];
      const double p = P * path.x[k] + thetas[i][k];
      const double kk =
          P * (m.C.at_node(k) * path.x[k] + D1 * path.u1[k] + m.D2.at_node(k) * path.u2[k]);
      samples[i] = B1 * p + D1 * kk;
    }
    const auto stats = mean_stderr(samples);
    r.residual[k] = m.R1.at_node(k) * ens.paths.front().u1[k] + stats.mean;
    r.std_error[k] = stats.std_error;
  }
  detail::summarize(r);
  return r;
}

/// Left side of the leader's first-order condition with (phi, delta, q) read
/// off the reconstructions; the conditional means are those of the
/// reconstructions: phihat = e1'(Pi1+Pi2)Xhat, deltahat = e1' Sigma1 Xhat,
/// qhat = Xhat_2. Returns the worst path at each node.
inline ResidualProfile leader_stationarity_residual(const Equilibrium& eq,
                                                    const TrajectoryEnsemble& ens) {
  const LQModel& m = eq.model;
  const std::size_t nodes = m.grid.nodes();
  ResidualProfile r;
  r.residual.assign(nodes, 0.0);
  r.std_error.assign(nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double P = eq.P.at(k);
    const LeaderBlockSet& blk = eq.blocks.node(k);
    const double s = blk.follower_inv;
    const double B1 = m.B1.at_node(k), B2 = m.B2.at_node(k), C = m.C.at_node(k);
    const double D1 = m.D1.at_node(k), D2 = m.D2.at_node(k), R2 = m.R2.at_node(k);
    const double b = B1 + D1 * C;
    const Vec2& Xh = eq.Xhat(k);
    const Mat2& Pi1 = eq.pi.Pi1.node(k);
    const Mat2& Pi2 = eq.pi.Pi2.node(k);
    const SigmaSet& sg = eq.sigma.node(k);
    const double phi_hat = ((Pi1 + Pi2) * Xh)(0);
    const double delta_hat = (sg.S1 * Xh)(0);
    const double q_hat = Xh(1);
    const double mean_terms = -B1 * s * D1 * D2 * P * phi_hat - s * D1 * D1 * D2 * P * delta_hat -
                              (b * s * D1 * D2 * P * P - (B2 + D2 * C) * P) * q_hat;
    double worst = 0.0;
    for (const PathRecord& path : ens.paths) {
      const Vec2 X(path.x[k], path.q[k]);
      const double phi = (Pi1 * X + Pi2 * Xh)(0);
      const double delta = (sg.S2 * X + sg.S3 * Xh)(0);
      const double v = R2 * path.u2[k] + B2 * phi + D2 * delta + mean_terms;
      if (std::abs(v) > std::abs(worst)) worst = v;
    }
    r.residual[k] = worst;
  }
  detail::summarize(r);
  return r;
}

struct DriftResiduals {
  std::vector<double> follower;   // per interior node
  std::vector<Mat2> leader_x;     // coefficient of X, per interior node
  std::vector<Mat2> leader_xhat;  // coefficient of Xhat, per interior node
  double follower_max = 0.0;
  double leader_max = 0.0;
};

/// Drift-matching identities with the decoupling relations substituted and the
/// time derivatives of P, Pi1, Pi2 taken by central differences on the nodes.
/// Both residuals vanish up to O(dt^2) when the Riccati equations hold.
inline DriftResiduals drift_residuals(const Equilibrium& eq) {
  const LQModel& m = eq.model;
  const std::size_t n = m.grid.steps();
  const double dt = m.grid.dt();
  DriftResiduals out;
  for (std::size_t k = 1; k < n; ++k) {
    const double P = eq.P.at(k);
    const double A = m.A.at_node(k), B1 = m.B1.at_node(k), C = m.C.at_node(k);
    const double D1 = m.D1.at_node(k), R1 = m.R1.at_node(k), Q1 = m.Q1.at_node(k);
    const double b = B1 + D1 * C;
    const double dP = (eq.P.at(k + 1) - eq.P.at(k - 1)) / (2.0 * dt);
    const double fr = dP + 2.0 * A * P + C * C * P - b * b * P * P / (D1 * D1 * P + R1) + Q1;
    out.follower.push_back(fr);
    out.follower_max = std::max(out.follower_max, std::abs(fr));

    const LeaderBlockSet& kb = eq.blocks.node(k);
    const Mat2& Pi1 = eq.pi.Pi1.node(k);
    const Mat2& Pi2 = eq.pi.Pi2.node(k);
    const Mat2 dPi1 = (eq.pi.Pi1.node(k + 1) - eq.pi.Pi1.node(k - 1)) / (2.0 * dt);
    const Mat2 dPi2 = (eq.pi.Pi2.node(k + 1) - eq.pi.Pi2.node(k - 1)) / (2.0 * dt);
    const SigmaSet& sg = eq.sigma.node(k);
    const double r = kb.R2inv;
    const Vec2 D12 = kb.D1 + kb.D2, D34 = kb.D3 + kb.D4;
    const Mat2 S = Pi1 + Pi2;

    // Drift of dY after Ito's formula on Y = Pi1 X + Pi2 Xhat, split by the
    // process each term multiplies, then the BSDE generator; the ansatz
    // Y = Pi1 X + Pi2 Xhat, Yhat = S Xhat, Z = Sigma2 X + Sigma3 Xhat,
    // Zhat = Sigma1 Xhat is substituted term by term.
    const Mat2 a2r = kb.A2 - D12 * r * kb.D5.transpose();
    const Mat2 Bt = kb.B1 - kb.D2 * r * kb.D2.transpose();
    const Mat2 yhat_coef = kb.D1 * r * D12.transpose() + kb.D2 * r * kb.D1.transpose();
    const Mat2 z_coef = kb.C1 - kb.D2 * r * kb.D4.transpose();
    const Mat2 zhat_coef = kb.D1 * r * D34.transpose() + kb.D2 * r * kb.D3.transpose();
    const Mat2 bfull = kb.B1 - D12 * r * D12.transpose();
    const Mat2 cfull = kb.C1 - D12 * r * D34.transpose();

    Mat2 on_x = dPi1 + Pi1 * kb.A1 + Pi1 * Bt * Pi1 + Pi1 * z_coef * sg.S2 + kb.A5 +
                kb.A1 * Pi1 + kb.A3 * sg.S2;
    Mat2 on_xhat = Pi1 * a2r + Pi1 * Bt * Pi2 - Pi1 * yhat_coef * S + Pi1 * z_coef * sg.S3 -
                   Pi1 * zhat_coef * sg.S1 + dPi2 + Pi2 * (kb.A1 + a2r) + Pi2 * bfull * S +
                   Pi2 * cfull * sg.S1 + kb.A1 * Pi2 +
                   (kb.A2 - kb.D5 * r * D12.transpose()) * S + kb.A3 * sg.S3 +
                   (kb.A4 - kb.D5 * r * D34.transpose()) * sg.S1 - kb.D5 * r * kb.D5.transpose();
    out.leader_x.push_back(on_x);
    out.leader_xhat.push_back(on_xhat);
    out.leader_max = std::max({out.leader_max, max_abs(on_x), max_abs(on_xhat)});
  }
  return out;
}

/// Time-summed Euler residual of the follower's adjoint BSDE along one path,
///   sum_k p_{k+1} - p_k + (Q1 x_k + A p_k + C k_k) dt - k_k dW_k.
inline double bsde_path_residual(const Equilibrium& eq, const PathRecord& path,
                                 std::span<const double> theta, std::span<const double> dW) {
  const LQModel& m = eq.model;
  const std::size_t n = m.grid.steps();
  const double dt = m.grid.dt();
  auto p_at = [&](std::size_t k) { return eq.P.at(k) * path.x[k] + theta[k]; };
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double P = eq.P.at(k);
    const double p = p_at(k);
    const double kk = P * (m.C.at_node(k) * path.x[k] + m.D1.at_node(k) * path.u1[k] +
                           m.D2.at_node(k) * path.u2[k]);
    sum += p_at(k + 1) - p + (m.Q1.at_node(k) * path.x[k] + m.A.at_node(k) * p +
                              m.C.at_node(k) * kk) * dt - kk * dW[k];
  }
  return sum;
}

inline std::vector<double> backfill_theta(const Equilibrium& eq, const PathRecord& path) {
  return backfill_theta(eq.model, eq.P, eq.follower_filter, eq.u2hat, path.x, path.u2,
                        eq.options);
}

struct BsdeResidual {
  double rms = 0.0;
  std::size_t paths = 0;
};

inline BsdeResidual bsde_residual(const Equilibrium& eq, const TrajectoryEnsemble& ens,
                                  const std::vector<std::vector<double>>& thetas,
                                  const NoiseBundle& noise) {
  double ss = 0.0;
  for (std::size_t i = 0; i < ens.paths.size(); ++i) {
    const double r = bsde_path_residual(eq, ens.paths[i], thetas[i], noise.state_increments(i));
    ss += r * r;
  }
  return {std::sqrt(ss / static_cast<double>(ens.paths.size())), ens.paths.size()};
}

/// Same as bsde_residual but simulates, reconstructs and discards each
/// closed-loop path on the fly.
inline BsdeResidual bsde_residual_streaming(const Equilibrium& eq, const NoiseBundle& noise,
                                            std::size_t threads = 1) {
  std::vector<double> per_path(noise.paths());
  parallel_for(noise.paths(), threads, [&](std::size_t i) {
    const auto dW = noise.state_increments(i);
    const PathRecord path = simulate_closed_loop_path(eq, dW, i);
    const auto theta = backfill_theta(eq, path);
    per_path[i] = bsde_path_residual(eq, path, theta, dW);
  });
  double ss = 0.0;
  for (double r : per_path) ss += r * r;
  return {std::sqrt(ss / static_cast<double>(per_path.size())), per_path.size()};
}

/// Largest relative gap, over nodes, between the follower control written
/// through its own filter and through the leader's filtered state:
///   u1 = -(D1^2P+R1)^{-1}[(B1+D1C)P xhat + B1 Thetahat + D1 D2 P uhat2]
/// with xhat = Xhat_1, Thetahat = e2'(Pi1+Pi2)Xhat, uhat2 = Lhat Xhat,
/// versus u1 = F Xhat.
inline double gain_consistency(const Equilibrium& eq) {
  const LQModel& m = eq.model;
  double worst = 0.0;
  for (std::size_t j = 0; j < m.grid.half_nodes(); ++j) {
    const Vec2& Xh = eq.leader_filter.Xhat.half(j);
    const GainSet& g = eq.gains.at.half(j);
    const double theta_hat = ((eq.pi.Pi1.half(j) + eq.pi.Pi2.half(j)) * Xh)(1);
    const double u2hat = apply(g.leader_filtered, Xh);
    const double direct = follower_control(m, eq.P, j, Xh(0), theta_hat, u2hat, eq.options);
    const double via_gain = apply(g.follower_xhat, Xh);
    const double scale = std::max({1.0, std::abs(direct), std::abs(via_gain)});
    worst = std::max(worst, std::abs(direct - via_gain) / scale);
  }
  return worst;
}

struct TowerCheckpoint {
  double t = 0.0;
  Vec2 mean = Vec2::Zero();
  Vec2 std_error = Vec2::Zero();
  Vec2 xhat = Vec2::Zero();
};

/// Ensemble mean of the closed-loop state against the filtered state at the
/// given node indices.
inline std::vector<TowerCheckpoint> tower_check(const Equilibrium& eq, const NoiseBundle& noise,
                                                const std::vector<std::size_t>& nodes,
                                                std::size_t threads = 1,
                                                Scheme scheme = Scheme::FilterCorrected) {
  const std::size_t M = noise.paths();
  const std::size_t width = nodes.size();
  std::vector<double> xs(M * width), qs(M * width);
  parallel_for(M, threads, [&](std::size_t i) {
    const PathRecord path = simulate_closed_loop_path(eq, noise.state_increments(i), i, scheme);
    for (std::size_t c = 0; c < width; ++c) {
      xs[c * M + i] = path.x[nodes[c]];
      qs[c * M + i] = path.q[nodes[c]];
    }
  });
  std::vector<TowerCheckpoint> out;
  for (std::size_t c = 0; c < width; ++c) {
    const auto sx = mean_stderr(std::span<const double>(xs).subspan(c * M, M));
    const auto sq = mean_stderr(std::span<const double>(qs).subspan(c * M, M));
    out.push_back({eq.grid().time(nodes[c]), Vec2(sx.mean, sq.mean),
                   Vec2(sx.std_error, sq.std_error), eq.Xhat(nodes[c])});
  }
  return out;
}

}  // namespace stackelberg
