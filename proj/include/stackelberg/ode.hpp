#pragma once

#include "model.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace stackelberg {

// Values of a function of time on the half grid (2N+1 points). Node values
// come from the integrator; midpoint values from cubic Hermite interpolation
// with the ODE right-hand side as derivative, so they carry the same order of
// accuracy as RK4 and can feed later RK4 solves that need half-step inputs.
template <class T>
class HalfGridSeries {
 public:
  HalfGridSeries() = default;
  explicit HalfGridSeries(std::vector<T> values) : values_(std::move(values)) {}

  std::size_t steps() const { return values_.empty() ? 0 : (values_.size() - 1) / 2; }
  const T& node(std::size_t k) const { return values_[2 * k]; }
  const T& half(std::size_t j) const { return values_[j]; }
  T& half(std::size_t j) { return values_[j]; }
  const T& front() const { return values_.front(); }
  const T& back() const { return values_.back(); }
  const std::vector<T>& raw() const { return values_; }

  std::vector<T> node_values() const {
    std::vector<T> out;
    out.reserve(steps() + 1);
    for (std::size_t k = 0; k <= steps(); ++k) out.push_back(node(k));
    return out;
  }

  // Builds a series from node samples; midpoints are linear interpolants.
  static HalfGridSeries from_nodes(const std::vector<T>& nodes) {
    std::vector<T> v(2 * nodes.size() - 1);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      v[2 * k] = nodes[k];
      if (k + 1 < nodes.size()) v[2 * k + 1] = T(0.5 * (nodes[k] + nodes[k + 1]));
    }
    return HalfGridSeries(std::move(v));
  }

  template <class F>
  static HalfGridSeries generate(std::size_t steps, F&& f) {
    std::vector<T> v;
    v.reserve(2 * steps + 1);
    for (std::size_t j = 0; j <= 2 * steps; ++j) v.push_back(f(j));
    return HalfGridSeries(std::move(v));
  }

 private:
  std::vector<T> values_;
};

struct NoCheck {
  template <class T>
  void operator()(std::size_t, const T&) const {}
};

/// Classical RK4 for dy/dt = rhs(j, y) run from y(T) = terminal down to t = 0.
/// rhs is evaluated only at half-grid indices j. check(j, y) sees every node
/// value as soon as it is produced.
template <class State, class Rhs, class Check = NoCheck>
HalfGridSeries<State> integrate_backward(const TimeGrid& grid, const State& terminal, Rhs&& rhs,
                                         Check&& check = {}) {
  const std::size_t n = grid.steps();
  const double h = grid.dt();
  std::vector<State> v(2 * n + 1);
  v[2 * n] = terminal;
  check(2 * n, terminal);
  State f_next = rhs(2 * n, terminal);
  for (std::size_t k = n; k-- > 0;) {
    const State& y = v[2 * k + 2];
    const State k1 = f_next;
    const State k2 = rhs(2 * k + 1, State(y - 0.5 * h * k1));
    const State k3 = rhs(2 * k + 1, State(y - 0.5 * h * k2));
    const State k4 = rhs(2 * k, State(y - h * k3));
    v[2 * k] = State(y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    check(2 * k, v[2 * k]);
    const State f_here = rhs(2 * k, v[2 * k]);
    v[2 * k + 1] = State(0.5 * (v[2 * k] + y) + (h / 8.0) * (f_here - k1));
    f_next = f_here;
  }
  return HalfGridSeries<State>(std::move(v));
}

/// Forward counterpart of integrate_backward, from y(0) = initial.
template <class State, class Rhs, class Check = NoCheck>
HalfGridSeries<State> integrate_forward(const TimeGrid& grid, const State& initial, Rhs&& rhs,
                                        Check&& check = {}) {
  const std::size_t n = grid.steps();
  const double h = grid.dt();
  std::vector<State> v(2 * n + 1);
  v[0] = initial;
  check(0, initial);
  State f_prev = rhs(0, initial);
  for (std::size_t k = 0; k < n; ++k) {
    const State& y = v[2 * k];
    const State k1 = f_prev;
    const State k2 = rhs(2 * k + 1, State(y + 0.5 * h * k1));
    const State k3 = rhs(2 * k + 1, State(y + 0.5 * h * k2));
    const State k4 = rhs(2 * k + 2, State(y + h * k3));
    v[2 * k + 2] = State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    check(2 * k + 2, v[2 * k + 2]);
    const State f_here = rhs(2 * k + 2, v[2 * k + 2]);
    v[2 * k + 1] = State(0.5 * (y + v[2 * k + 2]) + (h / 8.0) * (k1 - f_here));
    f_prev = f_here;
  }
  return HalfGridSeries<State>(std::move(v));
}

}  // namespace stackelberg
