#include "gafrl/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gafrl/errors.hpp"

namespace gafrl {

namespace {

constexpr double kSecondsPerWeek = 7.0 * 24.0 * 3600.0;

template <class T>
T parse_field(const std::string& s, std::size_t line, const char* what) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

Action action_from_name(const std::string& s, std::size_t line) {
  for (Action a : {Action::Buy, Action::Sell, Action::Hold}) {
    if (action_name(a) == s) return a;
  }
  throw ParseError(line, "unknown action '" + s + "'");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

Metrics compute_metrics(std::span<const double> equity, std::span<const TradeRecord> trades,
                        std::int64_t bar_interval) {
  if (equity.size() < 2) {
    throw InsufficientDataError("metrics need an equity curve of at least 2 points");
  }
  Metrics m;
  m.steps = equity.size() - 1;
  m.initial_equity = equity.front();
  m.final_equity = equity.back();
  m.total_return_pct = 100.0 * (m.final_equity - m.initial_equity) / m.initial_equity;
  double peak = equity.front();
  for (double e : equity) {
    peak = std::max(peak, e);
    if (peak > 0.0) m.max_drawdown_pct = std::max(m.max_drawdown_pct, 100.0 * (peak - e) / peak);
  }
  m.trade_count = trades.size();
  const double weeks = static_cast<double>(m.steps) * static_cast<double>(bar_interval) /
                       kSecondsPerWeek;
  m.trades_per_week = weeks > 0.0 ? static_cast<double>(m.trade_count) / weeks : 0.0;
  std::size_t closes = 0;
  std::size_t wins = 0;
  int position = 0;
  for (const auto& t : trades) {
    if (std::abs(t.position) < std::abs(position)) {
      ++closes;
      if (t.realized > 0.0) ++wins;
    }
    position = t.position;
  }
  m.win_rate = closes > 0 ? static_cast<double>(wins) / static_cast<double>(closes) : 0.0;
  return m;
}

BacktestReport run_policy(TradingEnv& env, const Policy& policy) {
  BacktestReport r;
  const auto& series = env.series();
  const std::size_t w = env.config().window;
  auto state = env.reset();
  r.equity.push_back(env.account().equity);
  r.timestamps.push_back(series[w - 1].timestamp);
  bool done = env.done();
  while (!done) {
    auto step = env.step(policy(state));
    r.equity.push_back(env.account().equity);
    r.timestamps.push_back(env.trace().back().timestamp);
    done = step.done;
    state = std::move(step.next_state);
  }
  r.trace = env.trace();
  for (const auto& row : r.trace) {
    if (!row.executed) continue;
    r.trades.push_back({row.step, row.timestamp, row.action, row.fill_price, row.position,
                        row.realized});
  }
  r.bar_interval = series.bar_interval();
  r.metrics = compute_metrics(r.equity, r.trades, r.bar_interval);
  return r;
}

BacktestReport run_backtest(std::shared_ptr<const CandleSeries> series,
                            const ClassifierModel& classifier, const PpoAgent& agent,
                            const BacktestOptions& options) {
  if (classifier.window() != options.env.window) {
    throw ConfigError("classifier window " + std::to_string(classifier.window()) +
                      " differs from configured window " + std::to_string(options.env.window));
  }
  TradingEnv env(std::move(series), classifier, options.env);
  if (agent.policy().observation_size() != env.observation_size()) {
    throw ConfigError("agent expects " + std::to_string(agent.policy().observation_size()) +
                      " observation features, environment provides " +
                      std::to_string(env.observation_size()));
  }
  BacktestReport r;
  if (options.sample) {
    std::mt19937_64 rng(options.sample_seed);
    r = run_policy(env, [&](const EnvState& s) {
      return sample_categorical(agent.policy().probabilities(s.observation), rng);
    });
    r.policy_mode = "sample";
  } else {
    r = run_policy(env, [&](const EnvState& s) { return agent.act_greedy(s.observation); });
    r.policy_mode = "greedy";
  }
  return r;
}

BacktestReport transfer_eval(std::shared_ptr<const CandleSeries> target_series,
                             const ClassifierModel& classifier, const PpoAgent& agent,
                             const BacktestOptions& options, const std::string& source_name,
                             const std::string& target_name) {
  auto r = run_backtest(std::move(target_series), classifier, agent, options);
  r.source = source_name;
  r.target = target_name;
  return r;
}

DateRange date_range(const CandleSeries& series) {
  if (series.size() == 0) throw InsufficientDataError("empty series has no date range");
  return {series[0].timestamp, series[series.size() - 1].timestamp};
}

std::optional<std::string> check_disjoint(const DateRange& train, const DateRange& eval,
                                          bool allow_overlap) {
  if (!train.overlaps(eval)) return std::nullopt;
  const std::string msg = "evaluation range [" + std::to_string(eval.first) + ", " +
                          std::to_string(eval.last) + "] overlaps training range [" +
                          std::to_string(train.first) + ", " + std::to_string(train.last) + "]";
  if (!allow_overlap) throw ConfigError(msg);
  return msg;
}

void write_metrics_csv(const BacktestReport& report, std::ostream& out) {
  const auto& m = report.metrics;
  out << "metric,value\n";
  out << "steps," << m.steps << '\n';
  out << "initial_equity," << format_double(m.initial_equity) << '\n';
  out << "final_equity," << format_double(m.final_equity) << '\n';
  out << "total_return_pct," << format_double(m.total_return_pct) << '\n';
  out << "max_drawdown_pct," << format_double(m.max_drawdown_pct) << '\n';
  out << "trade_count," << m.trade_count << '\n';
  out << "trades_per_week," << format_double(m.trades_per_week) << '\n';
  out << "win_rate," << format_double(m.win_rate) << '\n';
  out << "bar_interval," << report.bar_interval << '\n';
  if (!report.policy_mode.empty()) out << "policy," << report.policy_mode << '\n';
  if (!report.source.empty()) out << "source," << report.source << '\n';
  if (!report.target.empty()) out << "target," << report.target << '\n';
}

void write_equity_csv(const BacktestReport& report, std::ostream& out) {
  out << "step,timestamp,equity\n";
  for (std::size_t i = 0; i < report.equity.size(); ++i) {
    out << i << ',' << report.timestamps[i] << ',' << format_double(report.equity[i]) << '\n';
  }
}

void write_trades_csv(std::span<const TradeRecord> trades, std::ostream& out) {
  out << "step,timestamp,action,fill_price,position,realized\n";
  for (const auto& t : trades) {
    out << t.step << ',' << t.timestamp << ',' << action_name(t.action) << ','
        << format_double(t.fill_price) << ',' << t.position << ',' << format_double(t.realized)
        << '\n';
  }
}

void write_equity_svg(std::span<const double> equity, std::ostream& out) {
  constexpr double kWidth = 800.0;
  constexpr double kHeight = 300.0;
  constexpr double kPad = 20.0;
  double lo = equity.empty() ? 0.0 : *std::min_element(equity.begin(), equity.end());
  double hi = equity.empty() ? 1.0 : *std::max_element(equity.begin(), equity.end());
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double xs = equity.size() > 1 ? (kWidth - 2 * kPad) / static_cast<double>(equity.size() - 1)
                                      : 0.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kPad << "\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">equity "
      << format_double(lo) << " .. " << format_double(hi) << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < equity.size(); ++i) {
    const double x = kPad + xs * static_cast<double>(i);
    const double y = kHeight - kPad - (equity[i] - lo) / (hi - lo) * (kHeight - 2 * kPad);
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
    out.write(buf, n);
  }
  out << "\"/>\n</svg>\n";
}

void write_report(const BacktestReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    auto out = open_output((base / "report.csv").string());
    write_metrics_csv(report, out);
  }
  {
    auto out = open_output((base / "equity.csv").string());
    write_equity_csv(report, out);
  }
  {
    auto out = open_output((base / "trades.csv").string());
    write_trades_csv(report.trades, out);
  }
  {
    auto out = open_output((base / "trace.csv").string());
    write_trace_csv(report.trace, out);
  }
  {
    auto out = open_output((base / "equity.svg").string());
    write_equity_svg(report.equity, out);
  }
}

ExportedRun read_exported_run(const std::string& dir) {
  const std::filesystem::path base(dir);
  ExportedRun run;
  std::string line;
  {
    auto in = open_input((base / "equity.csv").string());
    std::size_t n = 1;
    if (!std::getline(in, line) || line != "step,timestamp,equity") {
      throw ParseError(1, "equity.csv header mismatch");
    }
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto f = split_csv_record(line, n);
      if (f.size() != 3) throw ParseError(n, "equity.csv needs 3 fields");
      run.timestamps.push_back(parse_field<std::int64_t>(f[1], n, "timestamp"));
      run.equity.push_back(parse_field<double>(f[2], n, "equity"));
    }
  }
  {
    auto in = open_input((base / "trades.csv").string());
    std::size_t n = 1;
    if (!std::getline(in, line) || line != "step,timestamp,action,fill_price,position,realized") {
      throw ParseError(1, "trades.csv header mismatch");
    }
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto f = split_csv_record(line, n);
      if (f.size() != 6) throw ParseError(n, "trades.csv needs 6 fields");
      TradeRecord t;
      t.step = parse_field<std::size_t>(f[0], n, "step");
      t.timestamp = parse_field<std::int64_t>(f[1], n, "timestamp");
      t.action = action_from_name(f[2], n);
      t.fill_price = parse_field<double>(f[3], n, "fill price");
      t.position = parse_field<int>(f[4], n, "position");
      t.realized = parse_field<double>(f[5], n, "realized");
      run.trades.push_back(t);
    }
  }
  return run;
}

Metrics recompute_metrics(const ExportedRun& run) {
  std::int64_t interval = 0;
  for (std::size_t i = 1; i < run.timestamps.size(); ++i) {
    const auto d = run.timestamps[i] - run.timestamps[i - 1];
    if (d > 0 && (interval == 0 || d < interval)) interval = d;
  }
  return compute_metrics(run.equity, run.trades, interval);
}

}  // namespace gafrl
