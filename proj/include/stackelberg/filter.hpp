#pragma once

#include "closed_loop.hpp"
#include "model.hpp"
#include "ode.hpp"
#include "riccati.hpp"

namespace stackelberg {

struct FilterPath {
  HalfGridSeries<double> xhat;
  HalfGridSeries<double> theta_hat;
};

struct FilteredLeaderPath {
  HalfGridSeries<Vec2> Xhat;
};

namespace detail {

struct FollowerFilterCoefficients {
  double s, b, P;
};

inline FollowerFilterCoefficients follower_filter_coefficients(const LQModel& m,
                                                               const FollowerRiccati& P,
                                                               std::size_t j,
                                                               const RiccatiOptions& opt) {
  const double p = P.P.half(j);
  const double s = h3_inverse(m.D1.at_half(j), p, m.R1.at_half(j), m.grid.half_time(j), opt);
  return {s, m.B1.at_half(j) + m.D1.at_half(j) * m.C.at_half(j), p};
}

}  // namespace detail

/// dThetahat/dt: depends on (uhat2, Thetahat) only.
inline double theta_hat_rhs(const LQModel& m, const FollowerRiccati& P, std::size_t j,
                            double u2hat, double theta_hat, const RiccatiOptions& opt = {}) {
  const auto [s, b, p] = detail::follower_filter_coefficients(m, P, j, opt);
  const double D1 = m.D1.at_half(j), D2 = m.D2.at_half(j);
  const double forcing = b * s * D1 * D2 * p * p - (m.B2.at_half(j) + D2 * m.C.at_half(j)) * p;
  const double decay = b * s * m.B1.at_half(j) * p - m.A.at_half(j);
  return forcing * u2hat + decay * theta_hat;
}

/// dxhat/dt of the follower's filtered state.
inline double xhat_rhs(const LQModel& m, const FollowerRiccati& P, std::size_t j, double u2hat,
                       double theta_hat, double xhat, const RiccatiOptions& opt = {}) {
  const auto [s, b, p] = detail::follower_filter_coefficients(m, P, j, opt);
  const double A = m.A.at_half(j), B1 = m.B1.at_half(j), B2 = m.B2.at_half(j);
  const double D1 = m.D1.at_half(j), D2 = m.D2.at_half(j);
  return (A - B1 * s * b * p) * xhat - s * B1 * B1 * theta_hat + (B2 - B1 * s * D1 * D2 * p) * u2hat;
}

/// Solves the follower's filtering system for a deterministic leader control
/// estimate uhat2 given on the half grid: Thetahat backward first (it does not
/// involve xhat), then xhat forward.
inline FilterPath solve_follower_filter(const LQModel& m, const FollowerRiccati& P,
                                        const HalfGridSeries<double>& u2hat,
                                        const RiccatiOptions& opt = {}) {
  FilterPath out;
  out.theta_hat = integrate_backward(m.grid, 0.0, [&](std::size_t j, double th) {
    return theta_hat_rhs(m, P, j, u2hat.half(j), th, opt);
  });
  out.xhat = integrate_forward(m.grid, m.x0, [&](std::size_t j, double x) {
    return xhat_rhs(m, P, j, u2hat.half(j), out.theta_hat.half(j), x, opt);
  });
  return out;
}

/// The follower's optimal control in terms of its own filter.
inline double follower_control(const LQModel& m, const FollowerRiccati& P, std::size_t j,
                               double xhat, double theta_hat, double u2hat,
                               const RiccatiOptions& opt = {}) {
  const auto [s, b, p] = detail::follower_filter_coefficients(m, P, j, opt);
  return -s * (b * p * xhat + m.B1.at_half(j) * theta_hat +
               m.D1.at_half(j) * m.D2.at_half(j) * p * u2hat);
}

inline HalfGridSeries<double> follower_control_series(const LQModel& m, const FollowerRiccati& P,
                                                      const FilterPath& f,
                                                      const HalfGridSeries<double>& u2hat,
                                                      const RiccatiOptions& opt = {}) {
  return HalfGridSeries<double>::generate(m.grid.steps(), [&](std::size_t j) {
    return follower_control(m, P, j, f.xhat.half(j), f.theta_hat.half(j), u2hat.half(j), opt);
  });
}

inline FilteredLeaderPath solve_leader_xhat(const LQModel& m, const LeaderBlocks& blocks,
                                            const LeaderRiccati& pi,
                                            const HalfGridSeries<SigmaSet>& sig) {
  Vec2 x0(m.x0, 0.0);
  auto rhs = [&](std::size_t j, const Vec2& X) -> Vec2 {
    return filtered_state_matrix(blocks.half(j), pi.Pi1.half(j), pi.Pi2.half(j), sig.half(j)) * X;
  };
  return {integrate_forward(m.grid, x0, rhs)};
}

}  // namespace stackelberg
