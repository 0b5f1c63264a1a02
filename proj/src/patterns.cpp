#include "gafrl/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gafrl/errors.hpp"

namespace gafrl {

namespace {

constexpr std::array<std::string_view, kPatternClassCount> kNames = {
    "bullish_engulfing", "bearish_engulfing", "morning_star",
    "evening_star",      "bullish_harami",    "bearish_harami",
    "hammer",            "hanging_man",       "none"};

const PatternThresholds& T = kThresholds;

double body_top(const Candle& c) { return std::max(c.open, c.close); }
double body_bottom(const Candle& c) { return std::min(c.open, c.close); }

bool small_body(const Candle& c) {
  return c.range() > 0.0 && c.body() < T.small_body * c.range();
}

bool long_body(const Candle& c) {
  return c.range() > 0.0 && c.body() > 0.0 && c.body() >= T.long_body * c.range();
}

bool hammer_shaped(const Candle& c) {
  const double r = c.range();
  return r > 0.0 && small_body(c) && c.lower_shadow() >= T.shadow_to_body * c.body() &&
         c.lower_shadow() >= T.long_shadow * r && c.upper_shadow() <= T.short_shadow * r;
}

bool bullish_engulfing(std::span<const Candle> k) {
  const Candle& a = k[0];
  const Candle& b = k[1];
  return a.bearish() && b.bullish() && b.open < a.close && b.close > a.open;
}

bool bearish_engulfing(std::span<const Candle> k) {
  const Candle& a = k[0];
  const Candle& b = k[1];
  return a.bullish() && b.bearish() && b.open > a.close && b.close < a.open;
}

bool morning_star(std::span<const Candle> k) {
  const Candle& first = k[0];
  const Candle& star = k[1];
  const Candle& last = k[2];
  const double midpoint = 0.5 * (first.open + first.close);
  return first.bearish() && long_body(first) && small_body(star) &&
         body_top(star) < first.close && last.bullish() && last.close > midpoint;
}

bool evening_star(std::span<const Candle> k) {
  const Candle& first = k[0];
  const Candle& star = k[1];
  const Candle& last = k[2];
  const double midpoint = 0.5 * (first.open + first.close);
  return first.bullish() && long_body(first) && small_body(star) &&
         body_bottom(star) > first.close && last.bearish() && last.close < midpoint;
}

bool bullish_harami(std::span<const Candle> k) {
  const Candle& a = k[0];
  const Candle& b = k[1];
  return a.bearish() && long_body(a) && b.bullish() && b.open > a.close &&
         b.close < a.open;
}

bool bearish_harami(std::span<const Candle> k) {
  const Candle& a = k[0];
  const Candle& b = k[1];
  return a.bullish() && long_body(a) && b.bearish() && b.open < a.close &&
         b.close > a.open;
}

bool hammer(std::span<const Candle> k) { return hammer_shaped(k[0]); }

const std::array<PatternRule, 8> kRules = {{
    {PatternClass::MorningStar, 3, Trend::Down, &morning_star},
    {PatternClass::EveningStar, 3, Trend::Up, &evening_star},
    {PatternClass::BullishEngulfing, 2, Trend::Down, &bullish_engulfing},
    {PatternClass::BearishEngulfing, 2, Trend::Up, &bearish_engulfing},
    {PatternClass::BullishHarami, 2, Trend::Down, &bullish_harami},
    {PatternClass::BearishHarami, 2, Trend::Up, &bearish_harami},
    {PatternClass::Hammer, 1, Trend::Down, &hammer},
    {PatternClass::HangingMan, 1, Trend::Up, &hammer},
}};

}  // namespace

PatternClass pattern_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kPatternClassCount)) {
    throw DomainError("pattern code out of range: " + std::to_string(code));
  }
  return static_cast<PatternClass>(code);
}

std::string_view pattern_name(PatternClass c) {
  return kNames[static_cast<std::size_t>(c)];
}

std::optional<PatternClass> pattern_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<PatternClass>(i);
  }
  return std::nullopt;
}

const std::array<PatternRule, 8>& pattern_rules() { return kRules; }

std::size_t min_label_window() { return 3 + T.trend_lookback; }

bool trend_holds(std::span<const Candle> bars, std::size_t pattern_start, Trend trend) {
  if (trend == Trend::Any) return true;
  if (pattern_start < T.trend_lookback) return false;
  for (std::size_t i = pattern_start - T.trend_lookback + 1; i < pattern_start; ++i) {
    const double prev = bars[i - 1].close;
    const double cur = bars[i].close;
    if (trend == Trend::Down && !(cur < prev)) return false;
    if (trend == Trend::Up && !(cur > prev)) return false;
  }
  return true;
}

bool rule_matches(const PatternRule& rule, std::span<const Candle> bars) {
  if (bars.size() < rule.candle_count) return false;
  const std::size_t start = bars.size() - rule.candle_count;
  return trend_holds(bars, start, rule.trend) && rule.shape(bars.subspan(start));
}

PatternClass label_bars(std::span<const Candle> bars) {
  if (bars.size() < min_label_window()) {
    throw InsufficientDataError("labeling needs at least " +
                                std::to_string(min_label_window()) + " bars");
  }
  for (const auto& rule : kRules) {
    if (rule_matches(rule, bars)) return rule.pattern;
  }
  return PatternClass::None;
}

PatternClass label_window(const Window& w) { return label_bars(w.bars()); }

namespace {

// Builds windows bar by bar in price space. All magnitudes are relative to
// the running price so the generator behaves identically at any scale.
class WindowBuilder {
 public:
  explicit WindowBuilder(std::mt19937_64& rng) : rng_(rng) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

  std::vector<Candle> bars;

  double last_close() const { return bars.back().close; }

  void push(double open, double close, double upper, double lower) {
    Candle c;
    c.timestamp = kStart + static_cast<std::int64_t>(bars.size()) * kInterval;
    c.open = open;
    c.close = close;
    c.high = std::max(open, close) + std::abs(upper);
    c.low = std::min(open, close) - std::abs(lower);
    c.volume = uniform(100.0, 1000.0);
    bars.push_back(c);
  }

  // One noise bar following `drift` (relative, signed) with volatility sigma.
  void noise_bar(double drift, double sigma) {
    const double p = bars.empty() ? start_price : last_close();
    const double open = p * (1.0 + 0.1 * sigma * normal());
    const double close = open * (1.0 + drift + sigma * normal());
    const double scale = sigma * p;
    push(open, close, uniform(0.0, 0.8) * scale, uniform(0.0, 0.8) * scale);
  }

  // Bar whose close moves strictly in `direction` relative to the last close.
  void trend_bar(int direction, double sigma) {
    const double p = last_close();
    const double open = p * (1.0 + 0.1 * sigma * normal());
    const double step = sigma * (0.3 + std::abs(normal()) * 0.7 + uniform(0.2, 0.8));
    const double close = p * (1.0 + direction * step);
    const double scale = sigma * p;
    push(open, close, uniform(0.0, 0.6) * scale, uniform(0.0, 0.6) * scale);
  }

  double start_price = 100.0;

 private:
  static constexpr std::int64_t kStart = 1577836800;
  static constexpr std::int64_t kInterval = 900;
  std::mt19937_64& rng_;
};

int trend_direction(PatternClass c) {
  switch (c) {
    case PatternClass::BullishEngulfing:
    case PatternClass::MorningStar:
    case PatternClass::BullishHarami:
    case PatternClass::Hammer:
      return -1;
    case PatternClass::None:
      return 0;
    default:
      return +1;
  }
}

std::size_t candle_count(PatternClass c) {
  for (const auto& r : kRules) {
    if (r.pattern == c) return r.candle_count;
  }
  return 0;
}

// Appends the pattern's final candles; `d` is +1 for the bullish variant
// (which follows a downtrend) and -1 for the bearish mirror.
void append_pattern(WindowBuilder& b, PatternClass c, double sigma) {
  const double p = b.last_close();
  const double unit = sigma * p * b.uniform(1.5, 2.5);
  switch (c) {
    case PatternClass::BullishEngulfing:
    case PatternClass::BearishEngulfing: {
      const double d = c == PatternClass::BullishEngulfing ? 1.0 : -1.0;
      const double body_a = unit * b.uniform(0.6, 1.1);
      const double open_a = p + d * b.uniform(-0.1, 0.1) * unit;
      const double close_a = open_a - d * body_a;
      b.push(open_a, close_a, b.uniform(0.0, 0.3) * body_a, b.uniform(0.0, 0.3) * body_a);
      const double open_b = close_a - d * b.uniform(0.1, 0.4) * body_a;
      const double close_b = open_a + d * b.uniform(0.2, 0.7) * body_a;
      b.push(open_b, close_b, b.uniform(0.0, 0.2) * body_a, b.uniform(0.0, 0.2) * body_a);
      break;
    }
    case PatternClass::MorningStar:
    case PatternClass::EveningStar: {
      const double d = c == PatternClass::MorningStar ? 1.0 : -1.0;
      const double body1 = unit * b.uniform(1.0, 1.6);
      const double open1 = p;
      const double close1 = open1 - d * body1;
      b.push(open1, close1, b.uniform(0.0, 0.3) * body1, b.uniform(0.0, 0.3) * body1);
      const double body2 = body1 * b.uniform(0.05, 0.15);
      // star body sits beyond the first close
      const double near2 = close1 - d * b.uniform(0.15, 0.4) * body1;
      const double far2 = near2 - d * body2;
      const bool star_up = b.coin();
      const double open2 = star_up == (d > 0) ? far2 : near2;
      const double close2 = star_up == (d > 0) ? near2 : far2;
      b.push(open2, close2, b.uniform(1.5, 3.0) * body2, b.uniform(1.5, 3.0) * body2);
      const double open3 = near2 + d * b.uniform(0.05, 0.2) * body1;
      const double close3 = close1 + d * b.uniform(0.65, 1.0) * body1;
      b.push(open3, close3, b.uniform(0.0, 0.2) * body1, b.uniform(0.0, 0.2) * body1);
      break;
    }
    case PatternClass::BullishHarami:
    case PatternClass::BearishHarami: {
      const double d = c == PatternClass::BullishHarami ? 1.0 : -1.0;
      const double body_a = unit * b.uniform(1.0, 1.6);
      const double open_a = p;
      const double close_a = open_a - d * body_a;
      b.push(open_a, close_a, b.uniform(0.0, 0.3) * body_a, b.uniform(0.0, 0.3) * body_a);
      const double open_b = close_a + d * b.uniform(0.15, 0.3) * body_a;
      const double close_b = open_b + d * b.uniform(0.25, 0.45) * body_a;
      b.push(open_b, close_b, b.uniform(0.0, 0.15) * body_a, b.uniform(0.0, 0.15) * body_a);
      break;
    }
    case PatternClass::Hammer:
    case PatternClass::HangingMan: {
      const double body = unit * b.uniform(0.15, 0.35);
      const double lower = body * b.uniform(2.8, 4.5);
      const double upper = body * b.uniform(0.0, 0.1);
      const double open = p * (1.0 + 0.1 * sigma * b.normal());
      const double close = b.coin() ? open + body : open - body;
      b.push(open, close, upper, lower);
      break;
    }
    case PatternClass::None:
      break;
  }
}

std::vector<Candle> build_candidate(WindowBuilder& b, PatternClass c, std::size_t w) {
  b.bars.clear();
  b.start_price = 100.0 * std::exp(b.uniform(-1.5, 1.5));
  const double sigma = b.uniform(0.004, 0.015);
  if (c == PatternClass::None) {
    const double drift = b.uniform(-1.0, 1.0) * sigma;
    for (std::size_t i = 0; i < w; ++i) b.noise_bar(drift, sigma);
    return b.bars;
  }
  const int dir = trend_direction(c);
  const std::size_t n = candle_count(c);
  const std::size_t prefix = w - n;
  const std::size_t trend_bars = std::min(prefix - 1, T.trend_lookback + 1 +
                                                          static_cast<std::size_t>(
                                                              b.uniform(0.0, 3.0)));
  const double drift = dir * sigma * b.uniform(0.0, 0.8);
  b.noise_bar(drift, sigma);
  while (b.bars.size() < prefix - trend_bars) b.noise_bar(drift, sigma);
  while (b.bars.size() < prefix) b.trend_bar(dir, sigma);
  append_pattern(b, c, sigma);
  return b.bars;
}

bool all_positive(const std::vector<Candle>& bars) {
  return std::all_of(bars.begin(), bars.end(), [](const Candle& c) { return c.low > 0.0; });
}

}  // namespace

std::vector<LabeledWindow> generate_synthetic(PatternClass pattern, std::size_t count,
                                              std::uint64_t seed,
                                              std::size_t window_size) {
  if (count == 0) throw DomainError("generate_synthetic needs count > 0");
  if (window_size < min_label_window()) {
    throw InsufficientDataError("window size below labeling minimum");
  }
  std::mt19937_64 rng(seed);
  WindowBuilder builder(rng);
  std::vector<LabeledWindow> out;
  out.reserve(count);
  constexpr std::size_t kMaxAttempts = 100000;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t attempts = 0;
    for (;;) {
      if (++attempts > kMaxAttempts) {
        throw DomainError("generator could not produce a " +
                          std::string(pattern_name(pattern)) + " window");
      }
      auto bars = build_candidate(builder, pattern, window_size);
      if (!all_positive(bars)) continue;
      if (label_bars(bars) != pattern) continue;
      out.push_back({Window(std::move(bars), 0), pattern});
      break;
    }
  }
  return out;
}

std::vector<LabeledWindow> generate_balanced_corpus(std::size_t per_class,
                                                    std::uint64_t seed,
                                                    std::size_t window_size) {
  std::vector<std::vector<LabeledWindow>> by_class;
  for (std::size_t k = 0; k < kPatternClassCount; ++k) {
    // SplitMix-style constant keeps per-class streams decorrelated.
    const std::uint64_t class_seed = seed * 0x9E3779B97F4A7C15ULL + k + 1;
    by_class.push_back(
        generate_synthetic(kAllPatternClasses[k], per_class, class_seed, window_size));
  }
  std::vector<LabeledWindow> out;
  out.reserve(per_class * kPatternClassCount);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (auto& cls : by_class) out.push_back(std::move(cls[i]));
  }
  return out;
}

}  // namespace gafrl
