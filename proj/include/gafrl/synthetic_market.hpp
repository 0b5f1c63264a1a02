#pragma once

#include <cstdint>

#include "gafrl/market_data.hpp"

namespace gafrl {

// Linear ramp up over `period` bars followed by a one-bar drop of
// `amplitude` (peak-to-trough, relative to base_price). Each bar opens at
// the previous close; closes carry multiplicative Gaussian noise.
struct SawtoothSpec {
  std::size_t bars = 500;
  std::size_t period = 20;
  double amplitude = 0.05;
  double base_price = 100.0;
  double noise = 0.0005;  // relative std of close and wick noise
  std::size_t phase = 0;  // bars to shift the cycle by
  // The last `marked_bars` ramp bars of each cycle are drawn hanging-man
  // shaped: small body, long lower wick, no upper wick. At most period / 2.
  std::size_t marked_bars = 0;
  std::uint64_t seed = 0;
  std::int64_t start_timestamp = 1577836800;  // 2020-01-01T00:00:00Z
  std::int64_t bar_interval = 900;
};

CandleSeries make_sawtooth(const SawtoothSpec& spec);

// Geometric Gaussian random walk.
struct RandomWalkSpec {
  std::size_t bars = 500;
  double start_price = 100.0;
  double volatility = 0.01;  // per-bar log-return std
  std::uint64_t seed = 0;
  std::int64_t start_timestamp = 1577836800;
  std::int64_t bar_interval = 900;
};

CandleSeries make_random_walk(const RandomWalkSpec& spec);

// Every open, high, low and close equals `price`.
CandleSeries make_constant(std::size_t bars, double price, std::int64_t start_timestamp = 1577836800,
                           std::int64_t bar_interval = 900);

}  // namespace gafrl
