#include "gafrl/trading_env.hpp"

#include <cmath>
#include <ostream>

#include "gafrl/errors.hpp"
#include "gafrl/gaf.hpp"

namespace gafrl {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Buy:
      return "buy";
    case Action::Sell:
      return "sell";
    case Action::Hold:
      return "hold";
  }
  return "?";
}

double AccountState::unrealized(double mark) const {
  double u = 0.0;
  for (double entry : entry_prices) u += position > 0 ? mark - entry : entry - mark;
  return u;
}

PatternFeed compute_pattern_feed(const CandleSeries& series, const ClassifierModel& model) {
  const std::size_t w = model.window();
  if (series.size() <= w) {
    throw InsufficientDataError("series of " + std::to_string(series.size()) +
                                " bars is too short for window " + std::to_string(w));
  }
  PatternFeed feed;
  feed.reserve(series.size() - w + 1);
  const auto bars = series.bars();
  for (std::size_t t = 0; t + w <= series.size(); ++t) {
    Window win(std::vector<Candle>(bars.begin() + static_cast<long>(t),
                                   bars.begin() + static_cast<long>(t + w)),
               t);
    feed.push_back(model.predict(encode_window(win)));
  }
  return feed;
}

TradingEnv::TradingEnv(std::shared_ptr<const CandleSeries> series,
                       std::shared_ptr<const PatternFeed> feed, EnvConfig config)
    : series_(std::move(series)), feed_(std::move(feed)), config_(config) {
  if (!series_ || !feed_) throw ConfigError("trading env needs a series and a pattern feed");
  if (config_.window < 2 || series_->size() <= config_.window) {
    throw InsufficientDataError("series of " + std::to_string(series_->size()) +
                                " bars allows no step with window " +
                                std::to_string(config_.window));
  }
  if (feed_->size() != series_->size() - config_.window + 1) {
    throw DimensionError("pattern feed has " + std::to_string(feed_->size()) +
                         " entries, series needs " +
                         std::to_string(series_->size() - config_.window + 1));
  }
  if (!(config_.initial_equity > 0.0) || config_.fee_per_unit < 0.0) {
    throw ConfigError("initial equity must be positive and fees non-negative");
  }
}

TradingEnv::TradingEnv(std::shared_ptr<const CandleSeries> series, const ClassifierModel& model,
                       EnvConfig config)
    : TradingEnv(series,
                 std::make_shared<const PatternFeed>(compute_pattern_feed(*series, model)),
                 [&] {
                   if (config.window != model.window()) {
                     throw ConfigError("env window " + std::to_string(config.window) +
                                       " differs from classifier window " +
                                       std::to_string(model.window()));
                   }
                   return config;
                 }()) {}

std::size_t TradingEnv::observation_size() const {
  return config_.strict_observation ? kPatternClassCount : kAugmentedObservationSize;
}

double TradingEnv::current_close() const {
  return (*series_)[step_ + config_.window - 1].close;
}

std::vector<double> TradingEnv::observe() const {
  const auto& p = (*feed_)[step_].probabilities;
  std::vector<double> obs(p.begin(), p.end());
  if (!config_.strict_observation) {
    obs.push_back(static_cast<double>(account_.position) / kMaxPosition);
    double feature = 0.0;
    if (account_.position != 0) {
      const double mark = current_close();
      const double per_unit = account_.unrealized(mark) / std::abs(account_.position);
      feature = std::tanh(config_.pnl_feature_scale * per_unit / mark);
    }
    obs.push_back(feature);
  }
  return obs;
}

EnvState TradingEnv::reset() {
  account_ = AccountState{};
  account_.initial_equity = config_.initial_equity;
  account_.equity = config_.initial_equity;
  step_ = 0;
  started_ = true;
  trace_.clear();
  return {observe(), step_};
}

void TradingEnv::fill(Action a, double price, TraceRow& row) {
  const int dir = a == Action::Buy ? +1 : -1;
  const int next = account_.position + dir;
  if (a == Action::Hold || std::abs(next) > kMaxPosition) return;
  double realized = -config_.fee_per_unit;
  if (account_.position != 0 && (account_.position > 0) != (dir > 0)) {
    // closes the oldest open unit
    const double entry = account_.entry_prices.front();
    account_.entry_prices.pop_front();
    realized += account_.position > 0 ? price - entry : entry - price;
  } else {
    account_.entry_prices.push_back(price);
  }
  account_.position = next;
  account_.realized_pnl += realized;
  row.executed = true;
  row.fill_price = price;
  row.realized = realized;
}

StepResult TradingEnv::step(std::size_t action) {
  if (!started_) throw LifecycleError("step called before reset");
  if (done()) throw LifecycleError("step called after the episode finished");
  if (action >= kActionCount) {
    throw DomainError("action index " + std::to_string(action) + " out of range");
  }
  const auto a = static_cast<Action>(action);
  const Candle& next_bar = (*series_)[step_ + config_.window];
  const double before = account_.equity;

  TraceRow row;
  row.step = step_;
  row.timestamp = next_bar.timestamp;
  row.action = a;
  fill(a, next_bar.open, row);
  account_.equity = account_.equity_at(next_bar.close);
  ++step_;

  StepResult r;
  r.reward = account_.equity - before;
  r.done = done();
  r.next_state = {observe(), step_};

  row.position = account_.position;
  row.reward = r.reward;
  row.equity = account_.equity;
  trace_.push_back(row);
  return r;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "step,timestamp,action,executed,fill_price,position,realized,reward,equity\n";
  for (const auto& r : trace) {
    out << r.step << ',' << r.timestamp << ',' << action_name(r.action) << ','
        << (r.executed ? 1 : 0) << ',' << (r.executed ? format_double(r.fill_price) : "")
        << ',' << r.position << ',' << format_double(r.realized) << ','
        << format_double(r.reward) << ',' << format_double(r.equity) << '\n';
  }
}

}  // namespace gafrl
