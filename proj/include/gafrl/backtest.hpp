#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gafrl/classifier.hpp"
#include "gafrl/ppo.hpp"
#include "gafrl/trading_env.hpp"

namespace gafrl {

// One executed fill.
struct TradeRecord {
  std::size_t step = 0;
  std::int64_t timestamp = 0;
  Action action = Action::Hold;
  double fill_price = 0.0;
  int position = 0;       // after the fill
  double realized = 0.0;  // net of fee
};

struct Metrics {
  std::size_t steps = 0;
  double initial_equity = 0.0;
  double final_equity = 0.0;
  double total_return_pct = 0.0;
  double max_drawdown_pct = 0.0;
  std::size_t trade_count = 0;
  double trades_per_week = 0.0;
  // Share of position-reducing fills with positive realized PnL; 0 if none.
  double win_rate = 0.0;
};

// Throws InsufficientDataError for a curve shorter than 2 points.
Metrics compute_metrics(std::span<const double> equity, std::span<const TradeRecord> trades,
                        std::int64_t bar_interval);

struct BacktestReport {
  std::vector<double> equity;               // initial equity, then one value per step
  std::vector<std::int64_t> timestamps;     // same length as equity
  std::vector<TradeRecord> trades;
  std::vector<TraceRow> trace;
  Metrics metrics;
  std::int64_t bar_interval = 0;
  std::string policy_mode;  // "greedy" or "sample"
  std::string source;       // provenance tags, empty unless set
  std::string target;
};

using Policy = std::function<std::size_t(const EnvState&)>;

// Rolls `policy` through one full episode of `env`.
BacktestReport run_policy(TradingEnv& env, const Policy& policy);

struct BacktestOptions {
  EnvConfig env;
  bool sample = false;  // categorical draws instead of argmax
  std::uint64_t sample_seed = 0;
};

// Throws ConfigError when the classifier window or the agent's input size
// disagrees with the environment configuration.
BacktestReport run_backtest(std::shared_ptr<const CandleSeries> series,
                            const ClassifierModel& classifier, const PpoAgent& agent,
                            const BacktestOptions& options);

// run_backtest on a target asset, tagged with source and target names.
BacktestReport transfer_eval(std::shared_ptr<const CandleSeries> target_series,
                             const ClassifierModel& classifier, const PpoAgent& agent,
                             const BacktestOptions& options, const std::string& source_name,
                             const std::string& target_name);

struct DateRange {
  std::int64_t first = 0;
  std::int64_t last = 0;

  bool overlaps(const DateRange& other) const {
    return first <= other.last && other.first <= last;
  }
};

DateRange date_range(const CandleSeries& series);

// Returns a warning when the ranges overlap and overlap is allowed; throws
// ConfigError when it is not. Returns nullopt for disjoint ranges.
std::optional<std::string> check_disjoint(const DateRange& train, const DateRange& eval,
                                          bool allow_overlap);

// Writes report.csv, equity.csv, trades.csv, trace.csv and equity.svg into
// `dir`, creating it if needed.
void write_report(const BacktestReport& report, const std::string& dir);

// Header: metric,value
void write_metrics_csv(const BacktestReport& report, std::ostream& out);
// Header: step,timestamp,equity
void write_equity_csv(const BacktestReport& report, std::ostream& out);
// Header: step,timestamp,action,fill_price,position,realized
void write_trades_csv(std::span<const TradeRecord> trades, std::ostream& out);
void write_equity_svg(std::span<const double> equity, std::ostream& out);

// Reads equity.csv and trades.csv back; used to recompute metrics from the
// exported files alone.
struct ExportedRun {
  std::vector<double> equity;
  std::vector<std::int64_t> timestamps;
  std::vector<TradeRecord> trades;
};
ExportedRun read_exported_run(const std::string& dir);

// Infers the bar interval from the equity timestamps (smallest step).
Metrics recompute_metrics(const ExportedRun& run);

}  // namespace gafrl
