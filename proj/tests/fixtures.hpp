#pragma once

#include <stackelberg.hpp>

#include <random>

namespace fixtures {

using namespace stackelberg;

// A=0.1, B1=B2=1, C=0.2, D1=D2=0, h=1, unit weights, x0=1, T=1.
inline LQModel benchmark(std::size_t steps = 200) {
  LQModel m;
  m.A = 0.1;
  m.B1 = 1.0;
  m.B2 = 1.0;
  m.C = 0.2;
  m.D1 = 0.0;
  m.D2 = 0.0;
  m.h = 1.0;
  m.Q1 = 1.0;
  m.R1 = 1.0;
  m.Q2 = 1.0;
  m.R2 = 1.0;
  m.G1 = 1.0;
  m.G2 = 1.0;
  m.x0 = 1.0;
  m.grid = TimeGrid(1.0, steps);
  return m;
}

inline LQModel zero_weights(LQModel m) {
  m.Q1 = 0.0;
  m.Q2 = 0.0;
  m.G1 = 0.0;
  m.G2 = 0.0;
  return m;
}

// Admissible models with moderate coefficients; about half get nonzero D1, D2
// and some get sampled (time-varying) coefficients.
inline LQModel random_model(std::mt19937_64& rng, std::size_t steps = 200) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto pos = [&](double lo, double hi) { return lo + (hi - lo) * 0.5 * (u(rng) + 1.0); };
  LQModel m = benchmark(steps);
  const bool diffusion_control = u(rng) > 0.0;
  m.A = 0.5 * u(rng);
  m.B1 = u(rng);
  m.B2 = u(rng);
  m.C = 0.5 * u(rng);
  m.D1 = diffusion_control ? 0.3 * u(rng) : 0.0;
  m.D2 = diffusion_control ? 0.3 * u(rng) : 0.0;
  m.h = u(rng);
  m.Q1 = pos(0.0, 2.0);
  m.R1 = pos(0.2, 2.0);
  m.Q2 = pos(0.0, 2.0);
  m.R2 = pos(0.2, 2.0);
  m.G1 = pos(0.0, 2.0);
  m.G2 = pos(0.0, 2.0);
  m.x0 = 2.0 * u(rng);
  if (u(rng) > 0.5) {
    std::vector<double> a(steps + 1);
    const double amp = 0.3 * u(rng);
    for (std::size_t k = 0; k <= steps; ++k)
      a[k] = amp * std::sin(3.0 * static_cast<double>(k) / static_cast<double>(steps));
    m.A = a;
  }
  return m;
}

}  // namespace fixtures
