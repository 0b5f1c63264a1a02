#include "gafrl/synthetic_market.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gafrl/errors.hpp"

namespace gafrl {

namespace {

Candle make_bar(std::int64_t ts, double open, double close, double wick_up, double wick_down) {
  return Candle{ts,
                open,
                std::max(open, close) * (1.0 + wick_up),
                std::min(open, close) * (1.0 - wick_down),
                close,
                1000.0};
}

}  // namespace

CandleSeries make_sawtooth(const SawtoothSpec& spec) {
  if (spec.bars < 2 || spec.period < 2) throw DomainError("sawtooth needs bars >= 2, period >= 2");
  if (!(spec.amplitude > 0.0 && spec.amplitude < 1.0) || !(spec.base_price > 0.0) ||
      spec.noise < 0.0 || spec.bar_interval <= 0 || spec.marked_bars > spec.period / 2) {
    throw DomainError("sawtooth parameters out of range");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto level = [&](std::size_t t) {
    const double frac = static_cast<double>((t + spec.phase) % spec.period) /
                        static_cast<double>(spec.period - 1);
    return spec.base_price * (1.0 + spec.amplitude * (frac - 0.5));
  };
  const double step = spec.base_price * spec.amplitude / static_cast<double>(spec.period - 1);
  std::vector<Candle> bars;
  bars.reserve(spec.bars);
  double prev_close = level(0);
  for (std::size_t t = 0; t < spec.bars; ++t) {
    const double close = level(t) * (1.0 + spec.noise * gauss(rng));
    double up = spec.noise * std::abs(gauss(rng));
    double down = spec.noise * std::abs(gauss(rng));
    if ((t + spec.phase) % spec.period >= spec.period - spec.marked_bars) {
      // Lower wick of three bodies (floored at half a ramp step) keeps the
      // shape inside every hammer threshold whatever the noise draw.
      const double body = std::abs(close - prev_close);
      up = 0.0;
      down = 3.0 * std::max(body, 0.5 * step) / std::min(close, prev_close);
    }
    bars.push_back(make_bar(spec.start_timestamp + static_cast<std::int64_t>(t) * spec.bar_interval,
                            prev_close, close, up, down));
    prev_close = close;
  }
  return CandleSeries(std::move(bars), spec.bar_interval);
}

CandleSeries make_random_walk(const RandomWalkSpec& spec) {
  if (spec.bars < 2 || !(spec.start_price > 0.0) || spec.volatility < 0.0 ||
      spec.bar_interval <= 0) {
    throw DomainError("random walk parameters out of range");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Candle> bars;
  bars.reserve(spec.bars);
  double price = spec.start_price;
  for (std::size_t t = 0; t < spec.bars; ++t) {
    const double open = price;
    price *= std::exp(spec.volatility * gauss(rng));
    const double up = 0.5 * spec.volatility * std::abs(gauss(rng));
    const double down = 0.5 * spec.volatility * std::abs(gauss(rng));
    bars.push_back(make_bar(spec.start_timestamp + static_cast<std::int64_t>(t) * spec.bar_interval,
                            open, price, up, down));
  }
  return CandleSeries(std::move(bars), spec.bar_interval);
}

CandleSeries make_constant(std::size_t bars, double price, std::int64_t start_timestamp,
                           std::int64_t bar_interval) {
  if (bars < 2 || !(price > 0.0) || bar_interval <= 0) throw DomainError("constant series out of range");
  std::vector<Candle> out;
  out.reserve(bars);
  for (std::size_t t = 0; t < bars; ++t) {
    out.push_back(make_bar(start_timestamp + static_cast<std::int64_t>(t) * bar_interval, price,
                           price, 0.0, 0.0));
  }
  return CandleSeries(std::move(out), bar_interval);
}

}  // namespace gafrl
