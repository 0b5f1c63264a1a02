#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gafrl/market_data.hpp"

namespace gafrl {

// Stable integer codes 0..8 are used in corpus files and checkpoints.
enum class PatternClass : std::uint8_t {
  BullishEngulfing = 0,
  BearishEngulfing = 1,
  MorningStar = 2,
  EveningStar = 3,
  BullishHarami = 4,
  BearishHarami = 5,
  Hammer = 6,
  HangingMan = 7,
  None = 8,
};

inline constexpr std::size_t kPatternClassCount = 9;

inline constexpr std::array<PatternClass, kPatternClassCount> kAllPatternClasses = {
    PatternClass::BullishEngulfing, PatternClass::BearishEngulfing,
    PatternClass::MorningStar,      PatternClass::EveningStar,
    PatternClass::BullishHarami,    PatternClass::BearishHarami,
    PatternClass::Hammer,           PatternClass::HangingMan,
    PatternClass::None};

constexpr int pattern_code(PatternClass c) { return static_cast<int>(c); }
// Throws DomainError for codes outside 0..8.
PatternClass pattern_from_code(int code);
std::string_view pattern_name(PatternClass c);
std::optional<PatternClass> pattern_from_name(std::string_view name);

enum class Trend { Up, Down, Any };

// Every threshold the rules use. All comparisons are between price
// differences of the same window, so labels are invariant to rescaling.
struct PatternThresholds {
  // Closes strictly monotone over this many bars before the pattern's first
  // candle define the prior trend.
  std::size_t trend_lookback = 3;
  // body < small_body * range
  double small_body = 0.3;
  // body >= long_body * range for the first candle of stars and haramis
  double long_body = 0.5;
  // hammer-shaped: lower shadow >= shadow_to_body * body ...
  double shadow_to_body = 2.0;
  // ... and lower shadow >= long_shadow * range ...
  double long_shadow = 0.6;
  // ... and upper shadow <= short_shadow * range
  double short_shadow = 0.1;
};

inline constexpr PatternThresholds kThresholds{};

struct PatternRule {
  PatternClass pattern;
  std::size_t candle_count;  // 1, 2 or 3
  Trend trend;
  // True when the last `candle_count` bars satisfy the body/shadow predicate.
  bool (*shape)(std::span<const Candle> last);
};

// The eight rules, in precedence order: three-candle rules first, then
// two-candle, then one-candle; ties broken by enum order.
const std::array<PatternRule, 8>& pattern_rules();

// Bars needed for the longest rule plus its trend lookback.
std::size_t min_label_window();

bool trend_holds(std::span<const Candle> bars, std::size_t pattern_start, Trend trend);
bool rule_matches(const PatternRule& rule, std::span<const Candle> bars);

// First matching rule in precedence order, or None. Throws
// InsufficientDataError if the window is shorter than min_label_window().
PatternClass label_window(const Window& w);
PatternClass label_bars(std::span<const Candle> bars);

struct LabeledWindow {
  Window window;
  PatternClass label;
};

// Deterministic given the seed. Pattern windows end in the target pattern
// after a trend leg; None windows are random walks that no rule accepts.
// Every returned window satisfies label_window(window) == label.
std::vector<LabeledWindow> generate_synthetic(PatternClass pattern, std::size_t count,
                                              std::uint64_t seed,
                                              std::size_t window_size = 10);

// `per_class` windows of each of the nine classes, classes interleaved.
std::vector<LabeledWindow> generate_balanced_corpus(std::size_t per_class,
                                                    std::uint64_t seed,
                                                    std::size_t window_size = 10);

}  // namespace gafrl
