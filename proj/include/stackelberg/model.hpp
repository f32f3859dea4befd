#pragma once

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace stackelberg {

// Uniform grid t_k = k*T/N. ODE solvers also use the half grid s_j = j*T/(2N),
// j = 0..2N, whose even entries coincide with the nodes.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw Error(ErrorKind::OutOfRange, "horizon must be positive and finite");
    if (steps < 1) throw Error(ErrorKind::OutOfRange, "grid needs at least one step");
  }

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  std::size_t half_nodes() const { return 2 * steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }

  double time(std::size_t k) const {
    return k == steps_ ? horizon_ : static_cast<double>(k) * horizon_ / static_cast<double>(steps_);
  }
  double half_time(std::size_t j) const {
    return j == 2 * steps_ ? horizon_
                           : static_cast<double>(j) * horizon_ / static_cast<double>(2 * steps_);
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_ = 1.0;
  std::size_t steps_ = 1;
};

// A deterministic coefficient: a constant or samples at the grid nodes,
// linearly interpolated in between.
class CoefficientFn {
 public:
  CoefficientFn(double value = 0.0) : data_(value) {}  // NOLINT(google-explicit-constructor)
  CoefficientFn(std::vector<double> samples) : data_(std::move(samples)) {}  // NOLINT

  bool is_constant() const { return std::holds_alternative<double>(data_); }
  const std::vector<double>& samples() const { return std::get<std::vector<double>>(data_); }
  double constant() const { return std::get<double>(data_); }

  double at_node(std::size_t k) const {
    if (is_constant()) return constant();
    return samples()[k];
  }

  // Value at half-grid index j: nodes are exact, midpoints are the average of
  // the bracketing nodes.
  double at_half(std::size_t j) const {
    if (is_constant()) return constant();
    const auto& s = samples();
    if (j % 2 == 0) return s[j / 2];
    return 0.5 * (s[j / 2] + s[j / 2 + 1]);
  }

  // Every stored value; a single entry for constants.
  std::vector<double> values() const {
    if (is_constant()) return {constant()};
    return samples();
  }

 private:
  std::variant<double, std::vector<double>> data_;
};

inline double sample_at(const CoefficientFn& fn, double t, const TimeGrid& grid) {
  const double T = grid.horizon();
  const double tol = 1e-12 * T;
  if (!(t >= -tol && t <= T + tol))
    throw Error(ErrorKind::OutOfRange, "t=" + std::to_string(t) + " outside [0, T]");
  if (fn.is_constant()) return fn.constant();
  const auto& s = fn.samples();
  if (s.size() != grid.nodes())
    throw Error(ErrorKind::LengthMismatch, "coefficient samples do not match grid");
  const double x = std::clamp(t, 0.0, T) / grid.dt();
  auto k = static_cast<std::size_t>(std::floor(x));
  if (k >= grid.steps()) return s[grid.steps()];
  const double w = x - static_cast<double>(k);
  if (w == 0.0) return s[k];
  return (1.0 - w) * s[k] + w * s[k + 1];
}

struct LQModel {
  CoefficientFn A, B1, B2, C, D1, D2, h;
  CoefficientFn Q1, R1, Q2, R2;
  double G1 = 0.0, G2 = 0.0;
  double x0 = 0.0;
  TimeGrid grid;

  // True when D1 and D2 vanish at every node.
  bool diffusion_control_free() const {
    auto zero = [](const CoefficientFn& f) {
      for (double v : f.values())
        if (v != 0.0) return false;
      return true;
    };
    return zero(D1) && zero(D2);
  }
};

struct Violation {
  std::string hypothesis;  // "H1", "H2", "H4" or "grid"
  ErrorKind kind;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(violations.front().kind, summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string out;
    for (const auto& v : vs) {
      if (!out.empty()) out += "; ";
      out += "(" + v.hypothesis + ") " + v.message;
    }
    return out;
  }

  std::vector<Violation> violations_;
};

/// Collects every violated standing hypothesis. An empty result means the
/// model is admissible.
inline std::vector<Violation> check_model(const LQModel& m) {
  std::vector<Violation> out;
  const std::size_t nodes = m.grid.nodes();

  if (m.grid.steps() < 2)
    out.push_back({"grid", ErrorKind::OutOfRange, "need at least 2 steps"});

  auto check_fn = [&](const CoefficientFn& f, const char* name, const char* hyp) -> bool {
    if (!f.is_constant() && f.samples().size() != nodes) {
      out.push_back({hyp, ErrorKind::LengthMismatch,
                     std::string(name) + " has " + std::to_string(f.samples().size()) +
                         " samples, expected " + std::to_string(nodes)});
      return false;
    }
    for (double v : f.values()) {
      if (!std::isfinite(v)) {
        out.push_back({hyp, ErrorKind::NonFinite, std::string(name) + " is not finite"});
        return false;
      }
    }
    return true;
  };
  auto min_of = [](const CoefficientFn& f) {
    double lo = f.values().front();
    for (double v : f.values()) lo = std::min(lo, v);
    return lo;
  };
  auto check_scalar = [&](double v, const char* name, const char* hyp) -> bool {
    if (!std::isfinite(v)) {
      out.push_back({hyp, ErrorKind::NonFinite, std::string(name) + " is not finite"});
      return false;
    }
    return true;
  };

  check_fn(m.A, "A", "H1");
  check_fn(m.B1, "B1", "H1");
  check_fn(m.B2, "B2", "H1");
  check_fn(m.C, "C", "H1");
  check_fn(m.D1, "D1", "H1");
  check_fn(m.D2, "D2", "H1");
  check_fn(m.h, "h", "H1");
  check_scalar(m.x0, "x0", "H1");

  auto weights = [&](const CoefficientFn& Q, const CoefficientFn& R, double G, const char* hyp,
                     const char* qn, const char* rn, const char* gn) {
    if (check_fn(Q, qn, hyp) && min_of(Q) < 0.0)
      out.push_back({hyp, ErrorKind::NegativeWeight, std::string(qn) + " < 0"});
    if (check_fn(R, rn, hyp) && !(min_of(R) > 0.0))
      out.push_back({hyp, ErrorKind::NonPositiveWeight, std::string(rn) + " <= 0"});
    if (check_scalar(G, gn, hyp) && G < 0.0)
      out.push_back({hyp, ErrorKind::NegativeWeight, std::string(gn) + " < 0"});
  };
  weights(m.Q1, m.R1, m.G1, "H2", "Q1", "R1", "G1");
  weights(m.Q2, m.R2, m.G2, "H4", "Q2", "R2", "G2");
  return out;
}

inline const LQModel& validate_model(const LQModel& m) {
  auto violations = check_model(m);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return m;
}

}  // namespace stackelberg
