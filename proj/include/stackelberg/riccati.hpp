#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace stackelberg {

struct RiccatiOptions {
  // Abort once any entry exceeds blowup_factor * (1 + max|terminal|).
  double blowup_factor = 1e8;
  // 2x2 inverses are refused when |det| < inverse_tol * (1 + |arg|_F^2).
  double inverse_tol = 1e-10;
  // (H3): D1^2 P + R1 must stay above h3_tol * (1 + |R1|).
  double h3_tol = 1e-12;
  // Leader terminal matrix [[G2, G1], [0, 0]] instead of diag(G2, 0). The
  // follower's G1 q(T) is already accounted for through Thetahat(T) = 0, and
  // the coupled form leaves a first-order gain in J2 along admissible
  // deviations, so it is off by default.
  bool terminal_follower_coupling = false;
};

// ---------------------------------------------------------------------------
// Follower

struct FollowerRiccati {
  TimeGrid grid;
  HalfGridSeries<double> P;

  double at(std::size_t k) const { return P.node(k); }
  std::vector<double> node_values() const { return P.node_values(); }
};

namespace detail {

inline double h3_inverse(double D1, double P, double R1, double t, const RiccatiOptions& opt) {
  const double m = D1 * D1 * P + R1;
  if (!(m > opt.h3_tol * (1.0 + std::abs(R1))))
    throw SolverError(ErrorKind::H3Violated, t, "D1^2 P + R1 = " + std::to_string(m));
  return 1.0 / m;
}

template <class T>
void check_bounded(const T& value, double bound, double t, const char* what) {
  if (!all_finite(value) || max_abs(value) > bound)
    throw SolverError(ErrorKind::RiccatiBlowUp, t, std::string(what) + " left the bounded region");
}

}  // namespace detail

/// Right-hand side dP/dt of the follower's Riccati equation at half index j.
inline double follower_P_rhs(const LQModel& m, std::size_t j, double P,
                             const RiccatiOptions& opt = {}) {
  const double A = m.A.at_half(j), B1 = m.B1.at_half(j), C = m.C.at_half(j);
  const double D1 = m.D1.at_half(j), R1 = m.R1.at_half(j), Q1 = m.Q1.at_half(j);
  const double s = detail::h3_inverse(D1, P, R1, m.grid.half_time(j), opt);
  const double b = B1 + D1 * C;
  return -(2.0 * A * P + C * C * P - s * b * b * P * P + Q1);
}

inline FollowerRiccati solve_follower_P(const LQModel& m, const RiccatiOptions& opt = {}) {
  const double bound = opt.blowup_factor * (1.0 + std::abs(m.G1));
  auto rhs = [&](std::size_t j, double P) { return follower_P_rhs(m, j, P, opt); };
  auto check = [&](std::size_t j, double P) {
    detail::check_bounded(P, bound, m.grid.half_time(j), "P");
  };
  return {m.grid, integrate_backward(m.grid, m.G1, rhs, check)};
}

// ---------------------------------------------------------------------------
// Leader block matrices

struct LeaderBlockSet {
  Mat2 A1, A2, A3, A4, A5, B1, C1;
  Vec2 D1, D2, D3, D4, D5;
  Row2 A6, B2;
  double R2inv = 0.0;
  // (D1^2 P + R1)^{-1} and the cross-coupling (D1^2 P + R1)^{-1} D1 D2 P.
  double follower_inv = 0.0;
  double cross = 0.0;
  double time = 0.0;

  Mat2 Btilde() const { return B1 - D2 * R2inv * D2.transpose(); }
};

struct LeaderBlocks {
  TimeGrid grid;
  std::vector<LeaderBlockSet> sets;  // one per half-grid index
  Mat2 Gbar;

  const LeaderBlockSet& half(std::size_t j) const { return sets[j]; }
  const LeaderBlockSet& node(std::size_t k) const { return sets[2 * k]; }
};

inline Mat2 leader_terminal(const LQModel& m, const RiccatiOptions& opt = {}) {
  Mat2 g;
  g << m.G2, opt.terminal_follower_coupling ? m.G1 : 0.0, 0.0, 0.0;
  return g;
}

/// Block matrices of the leader's augmented system at half index j, built from
/// the model coefficients and the follower's P at that time.
inline LeaderBlockSet leader_block_at(const LQModel& m, std::size_t j, double P,
                                      const RiccatiOptions& opt = {}) {
  const double A = m.A.at_half(j), B1 = m.B1.at_half(j), B2 = m.B2.at_half(j);
  const double C = m.C.at_half(j), D1 = m.D1.at_half(j), D2 = m.D2.at_half(j);
  const double R1 = m.R1.at_half(j), Q2 = m.Q2.at_half(j), R2 = m.R2.at_half(j);
  const double t = m.grid.half_time(j);
  const double s = detail::h3_inverse(D1, P, R1, t, opt);
  const double b = B1 + D1 * C;

  LeaderBlockSet k;
  k.time = t;
  k.follower_inv = s;
  k.cross = s * D1 * D2 * P;
  k.R2inv = 1.0 / R2;
  k.A1 << A, 0.0, 0.0, -(b * s * B1 * P - A);
  k.A2 << -B1 * s * b * P, 0.0, 0.0, 0.0;
  k.A3 << C, 0.0, 0.0, 0.0;
  k.A4 << -D1 * s * b * P, 0.0, 0.0, 0.0;
  k.A5 << Q2, 0.0, 0.0, 0.0;
  k.B1 << 0.0, -s * B1 * B1, -s * B1 * B1, 0.0;
  k.C1 << 0.0, 0.0, -D1 * s * B1, 0.0;
  k.D1 << -B1 * s * D1 * D2 * P, 0.0;
  k.D2 << B2, 0.0;
  k.D3 << -s * D1 * D1 * D2 * P, 0.0;
  k.D4 << D2, 0.0;
  k.D5 << 0.0, -(b * s * D1 * D2 * P * P - (B2 + D2 * C) * P);
  k.A6 << -s * b * P, 0.0;
  k.B2 << 0.0, -s * B1;
  return k;
}

inline LeaderBlocks assemble_leader_blocks(const LQModel& m, const FollowerRiccati& P,
                                           const RiccatiOptions& opt = {}) {
  LeaderBlocks out;
  out.grid = m.grid;
  out.Gbar = leader_terminal(m, opt);
  out.sets.reserve(m.grid.half_nodes());
  for (std::size_t j = 0; j < m.grid.half_nodes(); ++j)
    out.sets.push_back(leader_block_at(m, j, P.P.half(j), opt));
  return out;
}

// ---------------------------------------------------------------------------
// Sigma gains

struct SigmaSet {
  Mat2 S1, S2, S3;
  double det_M1 = 0.0, det_M2 = 0.0;  // determinants of the matrices being inverted
};

namespace detail {

inline Mat2 invert_or_throw(const Mat2& arg, ErrorKind kind, double t, const RiccatiOptions& opt) {
  auto inv = inverse_guarded(arg, opt.inverse_tol);
  if (!inv) {
    throw SolverError(kind, t,
                      kind == ErrorKind::M1NotInvertible ? "I + Pi1 (D3+D4) R2^-1 (D3+D4)' singular"
                                                         : "I + Pi1 D4 R2^-1 D4' singular");
  }
  return *inv;
}

inline Mat2 m1_argument(const LeaderBlockSet& k, const Mat2& Pi1) {
  const Vec2 D34 = k.D3 + k.D4;
  return Mat2::Identity() + Pi1 * D34 * k.R2inv * D34.transpose();
}

inline Mat2 m2_argument(const LeaderBlockSet& k, const Mat2& Pi1) {
  return Mat2::Identity() + Pi1 * k.D4 * k.R2inv * k.D4.transpose();
}

}  // namespace detail

inline Mat2 sigma1(const Mat2& Pi1, const Mat2& Pi2, const LeaderBlockSet& k,
                   const RiccatiOptions& opt = {}) {
  const Mat2 M1 = detail::invert_or_throw(detail::m1_argument(k, Pi1),
                                          ErrorKind::M1NotInvertible, k.time, opt);
  const Vec2 D12 = k.D1 + k.D2, D34 = k.D3 + k.D4;
  return M1 * (Pi1 * (k.A3 + k.A4 - D34 * k.R2inv * k.D5.transpose()) +
               Pi1 * (k.C1.transpose() - D34 * k.R2inv * D12.transpose()) * (Pi1 + Pi2));
}

inline Mat2 sigma2(const Mat2& Pi1, const LeaderBlockSet& k, const RiccatiOptions& opt = {}) {
  const Mat2 M2 = detail::invert_or_throw(detail::m2_argument(k, Pi1),
                                          ErrorKind::M2NotInvertible, k.time, opt);
  return M2 * (Pi1 * k.A3 + Pi1 * (k.C1.transpose() - k.D4 * k.R2inv * k.D2.transpose()) * Pi1);
}

inline Mat2 sigma3(const Mat2& Pi1, const Mat2& Pi2, const LeaderBlockSet& k,
                   const RiccatiOptions& opt = {}) {
  const Mat2 M2 = detail::invert_or_throw(detail::m2_argument(k, Pi1),
                                          ErrorKind::M2NotInvertible, k.time, opt);
  const Vec2 D12 = k.D1 + k.D2, D34 = k.D3 + k.D4;
  const Mat2 S1 = sigma1(Pi1, Pi2, k, opt);
  return M2 * (Pi1 * (k.A4 - D34 * k.R2inv * k.D5.transpose()) +
               Pi1 * (k.C1.transpose() - k.D4 * k.R2inv * k.D2.transpose()) * Pi2 -
               Pi1 * (k.D3 * k.R2inv * D12.transpose() + k.D4 * k.R2inv * k.D1.transpose()) *
                   (Pi1 + Pi2) -
               Pi1 * (k.D3 * k.R2inv * D34.transpose() + k.D4 * k.R2inv * k.D3.transpose()) * S1);
}

inline SigmaSet sigmas(const Mat2& Pi1, const Mat2& Pi2, const LeaderBlockSet& k,
                       const RiccatiOptions& opt = {}) {
  SigmaSet s;
  s.S1 = sigma1(Pi1, Pi2, k, opt);
  s.S2 = sigma2(Pi1, k, opt);
  s.S3 = sigma3(Pi1, Pi2, k, opt);
  s.det_M1 = detail::m1_argument(k, Pi1).determinant();
  s.det_M2 = detail::m2_argument(k, Pi1).determinant();
  return s;
}

// ---------------------------------------------------------------------------
// Leader Riccati equations

/// dPi1/dt from the leader's first Riccati equation.
inline Mat2 leader_pi1_rhs(const LeaderBlockSet& k, const Mat2& Pi1, const RiccatiOptions& opt = {},
                           double* det_m2 = nullptr) {
  const Mat2 arg = detail::m2_argument(k, Pi1);
  if (det_m2) *det_m2 = arg.determinant();
  const Mat2 M2 = detail::invert_or_throw(arg, ErrorKind::M2NotInvertible, k.time, opt);
  const Mat2 left = k.A3 + Pi1 * (k.C1 - k.D2 * k.R2inv * k.D4.transpose());
  const Mat2 right = k.A3 + (k.C1.transpose() - k.D4 * k.R2inv * k.D2.transpose()) * Pi1;
  return -(Pi1 * k.A1 + k.A1 * Pi1 + Pi1 * k.Btilde() * Pi1 + k.A5 + left * M2 * Pi1 * right);
}

/// dPi2/dt from the leader's second Riccati equation, given Pi1 at the same time.
inline Mat2 leader_pi2_rhs(const LeaderBlockSet& k, const Mat2& Pi1, const Mat2& Pi2,
                           const RiccatiOptions& opt = {}, double* det_m1 = nullptr) {
  if (det_m1) *det_m1 = detail::m1_argument(k, Pi1).determinant();
  const Vec2 D12 = k.D1 + k.D2, D34 = k.D3 + k.D4;
  const Mat2 S = Pi1 + Pi2;
  const Mat2 S1 = sigma1(Pi1, Pi2, k, opt);
  const Mat2 S3 = sigma3(Pi1, Pi2, k, opt);
  const Mat2 a2r = k.A2 - D12 * k.R2inv * k.D5.transpose();
  const Mat2 a2l = k.A2 - k.D5 * k.R2inv * D12.transpose();
  const Mat2 bfull = k.B1 - D12 * k.R2inv * D12.transpose();
  const Mat2 left3 = k.A3 + Pi1 * (k.C1 - k.D2 * k.R2inv * k.D4.transpose());
  const Mat2 left1 = (k.A4 - k.D5 * k.R2inv * D34.transpose()) +
                     Pi2 * (k.C1 - D12 * k.R2inv * D34.transpose()) -
                     Pi1 * (k.D1 * k.R2inv * D34.transpose() + k.D2 * k.R2inv * k.D3.transpose());
  return -(S * a2r + a2l * S + Pi2 * k.A1 + k.A1 * Pi2 + S * bfull * S -
           Pi1 * k.Btilde() * Pi1 + left3 * S3 + left1 * S1 -
           k.D5 * k.R2inv * k.D5.transpose());
}

// The D1 = D2 = 0 reductions, written out term by term. Used to cross-check
// the general right-hand sides.
inline Mat2 reduced_pi1_rhs(const LeaderBlockSet& k, const Mat2& Pi1) {
  return -(Pi1 * k.A1 + k.A1 * Pi1 + Pi1 * k.Btilde() * Pi1 + k.A3 * Pi1 * k.A3 + k.A5);
}

inline Mat2 reduced_pi2_rhs(const LeaderBlockSet& k, const Mat2& Pi1, const Mat2& Pi2) {
  const Mat2 Bt = k.Btilde();
  const Mat2 ar = k.A2 - k.D2 * k.R2inv * k.D5.transpose();
  const Mat2 al = k.A2 - k.D5 * k.R2inv * k.D2.transpose();
  return -(Pi2 * (k.A1 + ar) + (k.A1 + al) * Pi2 - k.D5 * k.R2inv * k.D5.transpose() +
           Pi1 * ar + al * Pi1 + Pi2 * Bt * Pi2 + Pi1 * Bt * Pi2 + Pi2 * Bt * Pi1);
}

struct LeaderRiccati {
  TimeGrid grid;
  HalfGridSeries<Mat2> Pi1, Pi2;
  // Smallest |det| met by the matrices behind M1 and M2 over all RK4 stages.
  double min_abs_det_M1 = std::numeric_limits<double>::infinity();
  double min_abs_det_M2 = std::numeric_limits<double>::infinity();
};

inline LeaderRiccati solve_leader_riccati(const LQModel& m, const LeaderBlocks& blocks,
                                          const RiccatiOptions& opt = {}) {
  LeaderRiccati out;
  out.grid = m.grid;
  const double bound = opt.blowup_factor * (1.0 + max_abs(blocks.Gbar));

  auto rhs1 = [&](std::size_t j, const Mat2& Pi1) {
    double det = 0.0;
    Mat2 d = leader_pi1_rhs(blocks.half(j), Pi1, opt, &det);
    out.min_abs_det_M2 = std::min(out.min_abs_det_M2, std::abs(det));
    return d;
  };
  auto check1 = [&](std::size_t j, const Mat2& v) {
    detail::check_bounded(v, bound, m.grid.half_time(j), "Pi1");
  };
  out.Pi1 = integrate_backward(m.grid, blocks.Gbar, rhs1, check1);

  auto rhs2 = [&](std::size_t j, const Mat2& Pi2) {
    double det = 0.0;
    Mat2 d = leader_pi2_rhs(blocks.half(j), out.Pi1.half(j), Pi2, opt, &det);
    out.min_abs_det_M1 = std::min(out.min_abs_det_M1, std::abs(det));
    return d;
  };
  auto check2 = [&](std::size_t j, const Mat2& v) {
    detail::check_bounded(v, bound, m.grid.half_time(j), "Pi2");
  };
  out.Pi2 = integrate_backward(m.grid, Mat2(Mat2::Zero()), rhs2, check2);
  return out;
}

/// Sigma gains at every half-grid index.
inline HalfGridSeries<SigmaSet> sigma_series(const LeaderBlocks& blocks, const LeaderRiccati& pi,
                                             const RiccatiOptions& opt = {}) {
  return HalfGridSeries<SigmaSet>::generate(blocks.grid.steps(), [&](std::size_t j) {
    return sigmas(pi.Pi1.half(j), pi.Pi2.half(j), blocks.half(j), opt);
  });
}

}  // namespace stackelberg
