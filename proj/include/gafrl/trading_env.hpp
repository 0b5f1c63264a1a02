#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gafrl/classifier.hpp"
#include "gafrl/environment.hpp"
#include "gafrl/market_data.hpp"

namespace gafrl {

enum class Action : std::uint8_t { Buy = 0, Sell = 1, Hold = 2 };
inline constexpr std::size_t kActionCount = 3;
inline constexpr int kMaxPosition = 3;

std::string_view action_name(Action a);

// Unit-sized position book. Units are opened and closed FIFO; shorts carry
// their entry price like longs.
struct AccountState {
  double initial_equity = 0.0;
  int position = 0;
  std::deque<double> entry_prices;
  double realized_pnl = 0.0;
  double equity = 0.0;

  double unrealized(double mark) const;
  double equity_at(double mark) const { return initial_equity + realized_pnl + unrealized(mark); }
};

struct EnvConfig {
  std::size_t window = 10;
  double initial_equity = 10000.0;
  double fee_per_unit = 0.0;
  // true: observation is the 9-class distribution only.
  bool strict_observation = false;
  // Unrealized return per unit is multiplied by this before tanh.
  double pnl_feature_scale = 20.0;
};

inline constexpr std::size_t kAugmentedObservationSize = kPatternClassCount + 2;

// Classifier output for every window of a series: entry t is the
// distribution of bars [t, t + W), for t = 0 .. size - W.
using PatternFeed = std::vector<PatternDistribution>;
PatternFeed compute_pattern_feed(const CandleSeries& series, const ClassifierModel& model);

struct TraceRow {
  std::size_t step = 0;
  std::int64_t timestamp = 0;  // of the fill bar
  Action action = Action::Hold;
  bool executed = false;       // false when the position cap turned it into a hold
  double fill_price = 0.0;
  int position = 0;
  double realized = 0.0;       // PnL realized by this fill, net of fee
  double reward = 0.0;
  double equity = 0.0;
};

// Decision at step t sees window t (bars [t, t+W)), fills at bar t+W's open
// and is marked at bar t+W's close. The episode ends after size - W steps.
class TradingEnv : public Environment {
 public:
  TradingEnv(std::shared_ptr<const CandleSeries> series, std::shared_ptr<const PatternFeed> feed,
             EnvConfig config);
  TradingEnv(std::shared_ptr<const CandleSeries> series, const ClassifierModel& model,
             EnvConfig config);

  std::size_t observation_size() const override;
  std::size_t action_count() const override { return kActionCount; }

  EnvState reset() override;
  StepResult step(std::size_t action) override;
  StepResult step(Action a) { return step(static_cast<std::size_t>(a)); }

  std::size_t max_steps() const { return series_->size() - config_.window; }
  bool done() const { return step_ >= max_steps(); }
  const AccountState& account() const { return account_; }
  const EnvConfig& config() const { return config_; }
  const CandleSeries& series() const { return *series_; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  // Close of the last bar of the current window.
  double current_close() const;

 private:
  std::vector<double> observe() const;
  void fill(Action a, double price, TraceRow& row);

  std::shared_ptr<const CandleSeries> series_;
  std::shared_ptr<const PatternFeed> feed_;
  EnvConfig config_;
  AccountState account_;
  std::size_t step_ = 0;
  bool started_ = false;
  std::vector<TraceRow> trace_;
};

// Header: step,timestamp,action,executed,fill_price,position,realized,reward,equity
void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

}  // namespace gafrl
