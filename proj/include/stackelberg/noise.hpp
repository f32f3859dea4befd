#pragma once

#include "model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace stackelberg {

struct PathNoise {
  std::vector<double> dW;     // state noise increments, N of them
  std::vector<double> dWbar;  // observation noise increments
};

// Brownian increments for M paths. Path i draws from its own engine, seeded
// from (seed, i, channel) through std::seed_seq, so every increment is a pure
// function of (seed, i, k) and paths can be generated in any order.
class NoiseBundle {
 public:
  enum Channel : std::uint32_t { State = 0, Observation = 1 };

  NoiseBundle(std::uint64_t seed, std::size_t paths, const TimeGrid& grid)
      : seed_(seed), paths_(paths), grid_(grid) {
    if (paths < 1) throw Error(ErrorKind::OutOfRange, "need at least one path");
  }

  std::uint64_t seed() const { return seed_; }
  std::size_t paths() const { return paths_; }
  const TimeGrid& grid() const { return grid_; }

  void fill(std::size_t path, Channel channel, std::span<double> out) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                      static_cast<std::uint32_t>(channel)};
    std::mt19937_64 engine(seq);
    std::normal_distribution<double> normal(0.0, std::sqrt(grid_.dt()));
    for (double& x : out) x = normal(engine);
  }

  std::vector<double> state_increments(std::size_t path) const {
    std::vector<double> v(grid_.steps());
    fill(path, State, v);
    return v;
  }

  std::vector<double> observation_increments(std::size_t path) const {
    std::vector<double> v(grid_.steps());
    fill(path, Observation, v);
    return v;
  }

  PathNoise path(std::size_t i) const { return {state_increments(i), observation_increments(i)}; }

 private:
  std::uint64_t seed_;
  std::size_t paths_;
  TimeGrid grid_;
};

inline NoiseBundle generate_noise(std::uint64_t seed, std::size_t paths, const TimeGrid& grid) {
  return NoiseBundle(seed, paths, grid);
}

}  // namespace stackelberg
