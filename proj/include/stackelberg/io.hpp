#pragma once

#include "costs.hpp"
#include "equilibrium.hpp"
#include "simulate.hpp"
#include "solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace stackelberg {

// ---------------------------------------------------------------------------
// JSON model files

namespace detail {

[[noreturn]] inline void parse_error(const std::string& what) { throw Error(ErrorKind::Parse, what); }

inline double json_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) parse_error(std::string("missing key \"") + key + "\"");
  const auto& v = j.at(key);
  if (!v.is_number()) parse_error(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

// Arrays are node samples on their own uniform grid over [0, T]; they are
// resampled onto the target grid when the lengths differ.
inline CoefficientFn json_coefficient(const nlohmann::json& j, const char* key, double horizon,
                                      const TimeGrid& target) {
  if (!j.contains(key)) parse_error(std::string("missing key \"") + key + "\"");
  const auto& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (!v.is_array()) parse_error(std::string("\"") + key + "\" must be a number or an array");
  std::vector<double> s;
  for (const auto& e : v) {
    if (!e.is_number()) parse_error(std::string("\"") + key + "\" has a non-numeric entry");
    s.push_back(e.get<double>());
  }
  if (s.size() < 2) parse_error(std::string("\"") + key + "\" needs at least two samples");
  if (s.size() == target.nodes()) return CoefficientFn(std::move(s));
  const TimeGrid own(horizon, s.size() - 1);
  const CoefficientFn src(std::move(s));
  std::vector<double> out(target.nodes());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sample_at(src, target.time(k), own);
  return CoefficientFn(std::move(out));
}

}  // namespace detail

/// Parses a model; steps, when given, overrides the file's "steps".
inline LQModel parse_model(const std::string& text, std::optional<std::size_t> steps = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::parse_error(e.what());
  }
  if (!j.is_object()) detail::parse_error("top level must be an object");
  const double T = detail::json_number(j, "T");
  std::size_t n = 0;
  if (steps) {
    n = *steps;
  } else {
    if (!j.contains("steps") || !j.at("steps").is_number_integer() || j.at("steps").get<long long>() < 1)
      detail::parse_error("\"steps\" must be a positive integer");
    n = j.at("steps").get<std::size_t>();
  }
  if (!(T > 0.0) || !std::isfinite(T)) detail::parse_error("\"T\" must be positive");
  LQModel m;
  m.grid = TimeGrid(T, n);
  auto coef = [&](const char* key) { return detail::json_coefficient(j, key, T, m.grid); };
  m.A = coef("A");
  m.B1 = coef("B1");
  m.B2 = coef("B2");
  m.C = coef("C");
  m.D1 = coef("D1");
  m.D2 = coef("D2");
  m.h = coef("h");
  m.Q1 = coef("Q1");
  m.R1 = coef("R1");
  m.Q2 = coef("Q2");
  m.R2 = coef("R2");
  m.G1 = detail::json_number(j, "G1");
  m.G2 = detail::json_number(j, "G2");
  m.x0 = detail::json_number(j, "x0");
  return m;
}

inline LQModel load_model(const std::string& path, std::optional<std::size_t> steps = {}) {
  std::ifstream in(path);
  if (!in) detail::parse_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str(), steps);
}

// ---------------------------------------------------------------------------
// CSV output. Doubles are printed with 17 significant digits so that files
// round-trip and compare byte for byte.

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

template <class... Ts>
void csv_row(std::ostream& os, const Ts&... cells) {
  bool first = true;
  auto put = [&](const auto& c) {
    if (!first) os << ',';
    first = false;
    if constexpr (std::is_arithmetic_v<std::decay_t<decltype(c)>> &&
                  !std::is_integral_v<std::decay_t<decltype(c)>>)
      os << fmt(c);
    else
      os << c;
  };
  (put(cells), ...);
  os << '\n';
}

}  // namespace detail

inline void write_riccati_csv(std::ostream& os, const Equilibrium& eq) {
  os << "t,P,Pi1_00,Pi1_01,Pi1_10,Pi1_11,Pi2_00,Pi2_01,Pi2_10,Pi2_11\n";
  for (std::size_t k = 0; k < eq.grid().nodes(); ++k) {
    const Mat2& a = eq.pi.Pi1.node(k);
    const Mat2& b = eq.pi.Pi2.node(k);
    detail::csv_row(os, eq.grid().time(k), eq.P.at(k), a(0, 0), a(0, 1), a(1, 0), a(1, 1), b(0, 0),
                    b(0, 1), b(1, 0), b(1, 1));
  }
}

inline void write_gains_csv(std::ostream& os, const Equilibrium& eq) {
  os << "t,LX_1,LX_2,LXhat_1,LXhat_2,F_1,F_2,Lhat_1,Lhat_2\n";
  for (std::size_t k = 0; k < eq.grid().nodes(); ++k) {
    const GainSet& g = eq.gains.at.node(k);
    detail::csv_row(os, eq.grid().time(k), g.leader_x(0), g.leader_x(1), g.leader_xhat(0),
                    g.leader_xhat(1), g.follower_xhat(0), g.follower_xhat(1),
                    g.leader_filtered(0), g.leader_filtered(1));
  }
}

inline void write_xhat_csv(std::ostream& os, const Equilibrium& eq) {
  os << "t,xhat,thetahat,X1,X2\n";
  for (std::size_t k = 0; k < eq.grid().nodes(); ++k) {
    const Vec2& X = eq.Xhat(k);
    detail::csv_row(os, eq.grid().time(k), eq.follower_filter.xhat.node(k),
                    eq.follower_filter.theta_hat.node(k), X(0), X(1));
  }
}

/// Writes every stride-th path of the ensemble.
inline void write_trajectories_csv(std::ostream& os, const TrajectoryEnsemble& ens,
                                   std::size_t stride = 1) {
  os << "path_id,t,X1,X2,u1,u2\n";
  if (stride == 0) stride = 1;
  for (std::size_t i = 0; i < ens.paths.size(); i += stride) {
    const PathRecord& p = ens.paths[i];
    for (std::size_t k = 0; k < p.x.size(); ++k)
      detail::csv_row(os, i, ens.grid.time(k), p.x[k], p.q.empty() ? 0.0 : p.q[k], p.u1[k], p.u2[k]);
  }
}

inline void write_costs_csv(std::ostream& os, const CostEstimate& j1, const CostEstimate& j2) {
  os << "cost,mean,stderr,paths\n";
  detail::csv_row(os, "J1", j1.mean, j1.std_error, j1.paths);
  detail::csv_row(os, "J2", j2.mean, j2.std_error, j2.paths);
}

inline void write_perturbation_csv(std::ostream& os, const std::vector<PerturbationReport>& reps) {
  os << "id,eps,dJ,stderr,pass\n";
  for (const auto& r : reps) {
    for (const auto& p : r.points) {
      const bool ok = p.delta.mean >= -r.sigma_factor * p.delta.std_error;
      detail::csv_row(os, r.description, p.eps, p.delta.mean, p.delta.std_error, ok ? "pass" : "fail");
    }
  }
}

inline void write_grid_csv(std::ostream& os, const GridSearchResult& g) {
  os << "alpha,beta,J,stderr\n";
  for (const auto& p : g.table) detail::csv_row(os, p.alpha, p.beta, p.cost.mean, p.cost.std_error);
}

// One line per check of the verification report.
struct CheckResult {
  std::string name;
  double max_abs = 0.0;
  double rms = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

inline void write_verify_csv(std::ostream& os, const std::vector<CheckResult>& checks) {
  os << "check,max_abs,rms,tolerance,pass,note\n";
  for (const auto& c : checks)
    detail::csv_row(os, c.name, c.max_abs, c.rms, c.tolerance, c.passed ? "pass" : "fail", c.note);
}

}  // namespace stackelberg
