#pragma once

#include "closed_loop.hpp"
#include "filter.hpp"
#include "riccati.hpp"

#include <vector>

namespace stackelberg {

// Row gains at one time:
//   u2 = leader_x X + leader_xhat Xhat,  u1 = follower_xhat Xhat,
//   uhat2 = leader_filtered Xhat  (leader_filtered = leader_x + leader_xhat).
struct GainSet {
  Row2 leader_x = Row2::Zero();
  Row2 leader_xhat = Row2::Zero();
  Row2 follower_xhat = Row2::Zero();
  Row2 leader_filtered = Row2::Zero();
};

inline GainSet gains_at(const LeaderBlockSet& k, const Mat2& Pi1, const Mat2& Pi2,
                        const SigmaSet& s) {
  const Vec2 D12 = k.D1 + k.D2, D34 = k.D3 + k.D4;
  const Mat2 S = Pi1 + Pi2;
  GainSet g;
  g.leader_x = -k.R2inv * (k.D2.transpose() * Pi1 + k.D4.transpose() * s.S2);
  g.leader_xhat = -k.R2inv * (k.D1.transpose() * S + k.D2.transpose() * Pi2 +
                              k.D3.transpose() * s.S1 + k.D4.transpose() * s.S3 +
                              k.D5.transpose());
  g.follower_xhat =
      k.A6 + k.B2 * S +
      k.cross * k.R2inv * (D12.transpose() * S + D34.transpose() * s.S1 + k.D5.transpose());
  g.leader_filtered = g.leader_x + g.leader_xhat;
  return g;
}

struct FeedbackGains {
  HalfGridSeries<GainSet> at;
};

inline FeedbackGains build_gains(const LeaderBlocks& blocks, const LeaderRiccati& pi,
                                 const HalfGridSeries<SigmaSet>& sig) {
  return {HalfGridSeries<GainSet>::generate(blocks.grid.steps(), [&](std::size_t j) {
    return gains_at(blocks.half(j), pi.Pi1.half(j), pi.Pi2.half(j), sig.half(j));
  })};
}

// Everything the equilibrium pipeline produces for one model.
struct Equilibrium {
  LQModel model;
  RiccatiOptions options;
  FollowerRiccati P;
  LeaderBlocks blocks;
  LeaderRiccati pi;
  HalfGridSeries<SigmaSet> sigma;
  FeedbackGains gains;
  FilteredLeaderPath leader_filter;
  // Deterministic equilibrium controls on the half grid.
  HalfGridSeries<double> u1bar;
  HalfGridSeries<double> u2hat;
  // The follower's own filter (xhat, Thetahat) driven by uhat2.
  FilterPath follower_filter;
  // Closed-loop coefficients at the nodes (left points of Euler-Maruyama steps).
  std::vector<ClosedLoopMatrices> closed_loop;
  // Xhat(k+1) - Xhat(k) - dt * (filter matrix)(k) Xhat(k): what an Euler step
  // of the filter misses against the RK4 filter, per step.
  std::vector<Vec2> filter_defect;

  const TimeGrid& grid() const { return model.grid; }
  const Vec2& Xhat(std::size_t k) const { return leader_filter.Xhat.node(k); }
};

inline Equilibrium solve_equilibrium(const LQModel& model, const RiccatiOptions& opt = {}) {
  validate_model(model);
  Equilibrium eq;
  eq.model = model;
  eq.options = opt;
  eq.P = solve_follower_P(model, opt);
  eq.blocks = assemble_leader_blocks(model, eq.P, opt);
  eq.pi = solve_leader_riccati(model, eq.blocks, opt);
  eq.sigma = sigma_series(eq.blocks, eq.pi, opt);
  eq.gains = build_gains(eq.blocks, eq.pi, eq.sigma);
  eq.leader_filter = solve_leader_xhat(model, eq.blocks, eq.pi, eq.sigma);
  const std::size_t n = model.grid.steps();
  eq.u1bar = HalfGridSeries<double>::generate(n, [&](std::size_t j) {
    return apply(eq.gains.at.half(j).follower_xhat, eq.leader_filter.Xhat.half(j));
  });
  eq.u2hat = HalfGridSeries<double>::generate(n, [&](std::size_t j) {
    return apply(eq.gains.at.half(j).leader_filtered, eq.leader_filter.Xhat.half(j));
  });
  eq.follower_filter = solve_follower_filter(model, eq.P, eq.u2hat, opt);
  eq.closed_loop.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    eq.closed_loop.push_back(closed_loop_matrices(eq.blocks.node(k), eq.pi.Pi1.node(k),
                                                  eq.pi.Pi2.node(k), eq.sigma.node(k)));
  eq.filter_defect.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Mat2 F = filtered_state_matrix(eq.blocks.node(k), eq.pi.Pi1.node(k), eq.pi.Pi2.node(k),
                                         eq.sigma.node(k));
    eq.filter_defect.push_back(eq.Xhat(k + 1) - eq.Xhat(k) - model.grid.dt() * (F * eq.Xhat(k)));
  }
  return eq;
}

}  // namespace stackelberg
