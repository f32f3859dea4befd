#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>

namespace stackelberg {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Row2 = Eigen::RowVector2d;

inline double apply(const Row2& r, const Vec2& v) { return r(0) * v(0) + r(1) * v(1); }

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const Vec2& v) { return v.cwiseAbs().maxCoeff(); }
inline double max_abs(const Row2& v) { return v.cwiseAbs().maxCoeff(); }
inline double max_abs(double x) { return std::abs(x); }

inline bool all_finite(const Mat2& m) { return m.allFinite(); }
inline bool all_finite(const Vec2& v) { return v.allFinite(); }
inline bool all_finite(double x) { return std::isfinite(x); }

/// Inverse of a 2x2 matrix by adjugate. Returns nullopt when
/// |det| < rel_tol * (1 + |m|_F^2).
inline std::optional<Mat2> inverse_guarded(const Mat2& m, double rel_tol) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double scale = 1.0 + m.squaredNorm();
  if (!std::isfinite(det) || std::abs(det) < rel_tol * scale) return std::nullopt;
  Mat2 adj;
  adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return adj / det;
}

}  // namespace stackelberg
