#pragma once

#include "linalg.hpp"
#include "riccati.hpp"

namespace stackelberg {

// Coefficients of the closed-loop augmented state X = (x, q):
//   dX = (drift_x X + drift_xhat Xhat) dt + (diff_x X + diff_xhat Xhat) dW.
struct ClosedLoopMatrices {
  Mat2 drift_x, drift_xhat, diff_x, diff_xhat;
};

inline ClosedLoopMatrices closed_loop_matrices(const LeaderBlockSet& k, const Mat2& Pi1,
                                               const Mat2& Pi2, const SigmaSet& s) {
  const Vec2 D12 = k.D1 + k.D2, D34 = k.D3 + k.D4;
  const double r = k.R2inv;
  const Mat2 Bt = k.Btilde();
  const Mat2 c_drift = k.C1 - k.D2 * r * k.D4.transpose();
  const Mat2 c_diff = k.C1.transpose() - k.D4 * r * k.D2.transpose();
  const Mat2 S = Pi1 + Pi2;

  ClosedLoopMatrices out;
  out.drift_x = k.A1 + Bt * Pi1 + c_drift * s.S2;
  out.drift_xhat = k.A2 - D12 * r * k.D5.transpose() + Bt * Pi2 -
                   (k.D1 * r * D12.transpose() + k.D2 * r * k.D1.transpose()) * S +
                   c_drift * s.S3 -
                   (k.D1 * r * D34.transpose() + k.D2 * r * k.D3.transpose()) * s.S1;
  out.diff_x = k.A3 + c_diff * Pi1 - k.D4 * r * k.D4.transpose() * s.S2;
  out.diff_xhat = k.A4 - D34 * r * k.D5.transpose() + c_diff * Pi2 -
                  (k.D3 * r * D12.transpose() + k.D4 * r * k.D1.transpose()) * S -
                  k.D4 * r * k.D4.transpose() * s.S3 -
                  (k.D3 * r * D34.transpose() + k.D4 * r * k.D3.transpose()) * s.S1;
  return out;
}

/// Coefficient of the linear ODE for the filtered leader state Xhat.
inline Mat2 filtered_state_matrix(const LeaderBlockSet& k, const Mat2& Pi1, const Mat2& Pi2,
                                  const SigmaSet& s) {
  const Vec2 D12 = k.D1 + k.D2, D34 = k.D3 + k.D4;
  const double r = k.R2inv;
  const Mat2 c_drift = k.C1 - k.D2 * r * k.D4.transpose();
  return k.A1 + k.A2 + (k.B1 - D12 * r * D12.transpose()) * (Pi1 + Pi2) -
         D12 * r * k.D5.transpose() + c_drift * s.S2 -
         (k.D1 * r * D34.transpose() + k.D2 * r * k.D3.transpose()) * s.S1 + c_drift * s.S3;
}

}  // namespace stackelberg
