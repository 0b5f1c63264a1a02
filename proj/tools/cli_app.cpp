#include "cli_app.hpp"

#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "gafrl/backtest.hpp"
#include "gafrl/classifier.hpp"
#include "gafrl/config.hpp"
#include "gafrl/errors.hpp"
#include "gafrl/gaf.hpp"
#include "gafrl/market_data.hpp"
#include "gafrl/patterns.hpp"
#include "gafrl/ppo.hpp"
#include "gafrl/synthetic_market.hpp"
#include "gafrl/trading_env.hpp"

namespace gafrl::cli {

namespace {

using Handler = std::function<void(const KeyValueConfig&, std::ostream&, std::ostream&)>;

// A subcommand whose flags map onto config keys. Settings resolve as: the
// --config file, then --set overrides, then explicit flags.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description,
          Handler handler)
      : app_(parent.add_subcommand(name, description)), handler_(std::move(handler)) {
    app_->add_option("--config", config_path_, "key=value settings file");
    app_->add_option("--set", overrides_, "extra key=value setting (repeatable)");
  }

  Command& option(const std::string& flag, const std::string& key, const std::string& help) {
    auto& b = bound_.emplace_back(Bound{key, {}, nullptr, false});
    b.option = app_->add_option("--" + flag, b.value, help + " [" + key + "]");
    return *this;
  }

  Command& flag(const std::string& flag, const std::string& key, const std::string& help) {
    auto& b = bound_.emplace_back(Bound{key, {}, nullptr, true});
    const std::string description = help + " [" + key + "]";
    b.option = app_->add_flag("--" + flag, description);
    return *this;
  }

  bool parsed() const { return app_->parsed(); }

  void execute(std::ostream& out, std::ostream& err) const {
    KeyValueConfig cfg;
    if (!config_path_.empty()) cfg = KeyValueConfig::load(config_path_);
    for (const auto& kv : overrides_) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    for (const auto& b : bound_) {
      if (b.option->count() == 0) continue;
      cfg.set(b.key, b.is_flag ? "true" : b.value);
    }
    handler_(cfg, out, err);
  }

 private:
  struct Bound {
    std::string key;
    std::string value;
    CLI::Option* option;
    bool is_flag;
  };

  CLI::App* app_;
  Handler handler_;
  std::string config_path_;
  std::vector<std::string> overrides_;
  std::deque<Bound> bound_;
};

std::size_t get_size(const KeyValueConfig& cfg, const std::string& key, std::int64_t fallback) {
  const auto v = cfg.get_int(key, fallback);
  if (v < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t get_seed(const KeyValueConfig& cfg, const std::string& key, std::uint64_t fallback) {
  const auto s = cfg.find(key);
  if (!s) return fallback;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(*s, &used);
    if (used != s->size()) throw std::invalid_argument(*s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + " must be an unsigned integer, got '" + *s + "'");
  }
}

std::shared_ptr<const CandleSeries> load_series(const KeyValueConfig& cfg,
                                                const std::string& from_key,
                                                const std::string& to_key) {
  auto series = parse_csv(cfg.require("data"), CsvSchema::from_config(cfg));
  if (cfg.contains(from_key) || cfg.contains(to_key)) {
    series = series.between(cfg.get_int(from_key, INT64_MIN), cfg.get_int(to_key, INT64_MAX));
  }
  return std::make_shared<const CandleSeries>(std::move(series));
}

ClassifierModel load_checked_classifier(const KeyValueConfig& cfg) {
  auto model = load_classifier(cfg.require("classifier"));
  if (cfg.contains("window") && get_size(cfg, "window", 0) != model.window()) {
    throw ConfigError("window " + cfg.require("window") + " differs from classifier window " +
                      std::to_string(model.window()));
  }
  return model;
}

EnvConfig env_config(const KeyValueConfig& cfg, std::size_t window) {
  EnvConfig e;
  e.window = window;
  e.initial_equity = cfg.get_double("initial_equity", e.initial_equity);
  e.fee_per_unit = cfg.get_double("fee", e.fee_per_unit);
  e.strict_observation = cfg.get_bool("strict_observation", e.strict_observation);
  e.pnl_feature_scale = cfg.get_double("pnl_feature_scale", e.pnl_feature_scale);
  return e;
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// ---------------------------------------------------------------------------

void cmd_gen_market(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto kind = cfg.get_string("kind", "sawtooth");
  const auto start = cfg.get_int("start", 1577836800);
  const auto interval = cfg.get_int("interval", 900);
  const auto bars = get_size(cfg, "bars", 500);
  std::optional<CandleSeries> series;
  if (kind == "sawtooth") {
    SawtoothSpec s;
    s.bars = bars;
    s.period = get_size(cfg, "period", static_cast<std::int64_t>(s.period));
    s.amplitude = cfg.get_double("amplitude", s.amplitude);
    s.base_price = cfg.get_double("price", s.base_price);
    s.noise = cfg.get_double("noise", s.noise);
    s.phase = get_size(cfg, "phase", 0);
    s.marked_bars = get_size(cfg, "marked_bars", 0);
    s.seed = get_seed(cfg, "seed", 0);
    s.start_timestamp = start;
    s.bar_interval = interval;
    series = make_sawtooth(s);
  } else if (kind == "random-walk") {
    RandomWalkSpec s;
    s.bars = bars;
    s.start_price = cfg.get_double("price", s.start_price);
    s.volatility = cfg.get_double("volatility", s.volatility);
    s.seed = get_seed(cfg, "seed", 0);
    s.start_timestamp = start;
    s.bar_interval = interval;
    series = make_random_walk(s);
  } else if (kind == "constant") {
    series = make_constant(bars, cfg.get_double("price", 100.0), start, interval);
  } else {
    throw ConfigError("unknown market kind '" + kind + "'");
  }
  const auto path = cfg.require("out");
  write_csv(*series, path);
  out << "wrote " << series->size() << " bars to " << path << '\n';
}

void cmd_encode(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto series = parse_csv(cfg.require("data"), CsvSchema::from_config(cfg));
  const auto w = get_size(cfg, "window", 10);
  const auto index = get_size(cfg, "index", 0);
  if (index + w > series.size()) {
    throw InsufficientDataError("window at " + std::to_string(index) + " needs " +
                                std::to_string(index + w) + " bars, series has " +
                                std::to_string(series.size()));
  }
  const auto bars = series.bars();
  const Window window(std::vector<Candle>(bars.begin() + static_cast<long>(index),
                                          bars.begin() + static_cast<long>(index + w)),
                      index);
  const auto gaf = encode_window(window);
  std::ofstream file;
  std::ostream* sink = &out;
  if (cfg.contains("out")) {
    file.open(cfg.require("out"));
    if (!file) throw IoError("cannot write " + cfg.require("out"));
    sink = &file;
  }
  static constexpr const char* kNames[] = {"open", "high", "low", "close"};
  *sink << "channel,row";
  for (std::size_t j = 0; j < w; ++j) *sink << ",c" << j;
  *sink << '\n';
  for (std::size_t c = 0; c < kGafChannels; ++c) {
    const auto& m = gaf.channel(static_cast<GafChannel>(c));
    for (std::size_t i = 0; i < w; ++i) {
      *sink << kNames[c] << ',' << i;
      for (std::size_t j = 0; j < w; ++j) *sink << ',' << format_double(m(i, j));
      *sink << '\n';
    }
  }
}

void cmd_gen_corpus(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto per_class = get_size(cfg, "per_class", 100);
  const auto corpus = generate_balanced_corpus(per_class, get_seed(cfg, "seed", 42),
                                               get_size(cfg, "window", 10));
  const auto path = cfg.require("out");
  write_corpus_csv(corpus, path);
  out << "wrote " << corpus.size() << " labeled windows to " << path << '\n';
}

void cmd_train_cnn(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  std::vector<LabeledWindow> windows;
  if (cfg.contains("corpus")) {
    windows = read_corpus_csv(cfg.require("corpus"));
  } else {
    windows = generate_balanced_corpus(get_size(cfg, "per_class", 100),
                                       get_seed(cfg, "corpus_seed", 42),
                                       get_size(cfg, "window", 10));
  }
  ClassifierConfig c;
  c.max_epochs = get_size(cfg, "epochs", static_cast<std::int64_t>(c.max_epochs));
  c.batch_size = get_size(cfg, "batch_size", static_cast<std::int64_t>(c.batch_size));
  c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
  c.seed = get_seed(cfg, "seed", c.seed);
  c.patience = get_size(cfg, "patience", static_cast<std::int64_t>(c.patience));
  c.validation_fraction = cfg.get_double("validation_fraction", c.validation_fraction);
  const auto corpus = encode_corpus(windows);
  const auto result = train_classifier(corpus, c);
  const auto path = cfg.require("out");
  save_classifier(result.model, path);
  const auto& m = result.model.metadata();
  out << "trained on " << corpus.size() << " windows for " << m.epochs_run
      << " epochs: train_accuracy=" << format_double(m.train_accuracy)
      << " validation_accuracy=" << format_double(m.validation_accuracy) << '\n'
      << "wrote " << path << '\n';
}

void cmd_classify(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto model = load_checked_classifier(cfg);
  const auto series = parse_csv(cfg.require("data"), CsvSchema::from_config(cfg));
  const auto feed = compute_pattern_feed(series, model);
  std::ofstream file;
  std::ostream* sink = &out;
  if (cfg.contains("out")) {
    file.open(cfg.require("out"));
    if (!file) throw IoError("cannot write " + cfg.require("out"));
    sink = &file;
  }
  *sink << "window,timestamp,pattern";
  for (auto c : kAllPatternClasses) *sink << ",p_" << pattern_name(c);
  *sink << '\n';
  for (std::size_t t = 0; t < feed.size(); ++t) {
    *sink << t << ',' << series[t + model.window() - 1].timestamp << ','
          << pattern_name(feed[t].argmax());
    for (double p : feed[t].probabilities) *sink << ',' << format_double(p);
    *sink << '\n';
  }
}

void cmd_train_agent(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto classifier = load_checked_classifier(cfg);
  const auto series = load_series(cfg, "train.from", "train.to");
  const auto env_cfg = env_config(cfg, classifier.window());
  TradingEnv env(series, classifier, env_cfg);

  PpoConfig ppo;
  ppo.apply(cfg);
  ppo.seed = get_seed(cfg, "seed", ppo.seed);
  ppo.validate();
  PpoAgent agent(env.observation_size(), env.action_count(), ppo);
  const auto episodes = get_size(cfg, "episodes", 50);
  const auto max_steps = get_size(cfg, "max_steps", static_cast<std::int64_t>(env.max_steps()));
  const auto result = train(env, agent, episodes, max_steps);

  const auto path = cfg.require("out");
  const auto range = date_range(*series);
  save_agent(agent, path,
             {{"window", std::to_string(classifier.window())},
              {"strict_observation", env_cfg.strict_observation ? "true" : "false"},
              {"train.first", std::to_string(range.first)},
              {"train.last", std::to_string(range.last)},
              {"train.source", stem(cfg.require("data"))}});
  const auto log_path = cfg.get_string("log", path + ".log.csv");
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write " + log_path);
  write_training_log(result.episodes, log);

  const std::size_t decile = std::max<std::size_t>(1, result.episodes.size() / 10);
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < decile && i < result.episodes.size(); ++i) {
    first += result.episodes[i].total_return;
    last += result.episodes[result.episodes.size() - 1 - i].total_return;
  }
  out << "trained " << episodes << " episodes, " << result.updates.size()
      << " updates: first-decile mean return " << format_double(first / decile)
      << ", last-decile " << format_double(last / decile) << '\n'
      << "wrote " << path << " and " << log_path << '\n';
}

struct LoadedAgent {
  PpoAgent agent;
  KeyValueConfig meta;
};

LoadedAgent load_checked_agent(const KeyValueConfig& cfg, const ClassifierModel& classifier) {
  const auto path = cfg.require("agent");
  LoadedAgent a{load_agent(path), KeyValueConfig::load(path + ".meta")};
  const auto w = a.meta.get_int("window", static_cast<std::int64_t>(classifier.window()));
  if (static_cast<std::size_t>(w) != classifier.window()) {
    throw ConfigError("agent was trained with window " + std::to_string(w) +
                      ", classifier uses " + std::to_string(classifier.window()));
  }
  return a;
}

void print_summary(const BacktestReport& r, const std::string& dir, std::ostream& out) {
  const auto& m = r.metrics;
  out << "total_return_pct=" << format_double(m.total_return_pct)
      << " max_drawdown_pct=" << format_double(m.max_drawdown_pct)
      << " trades=" << m.trade_count << " trades_per_week=" << format_double(m.trades_per_week)
      << " win_rate=" << format_double(m.win_rate) << '\n'
      << "wrote report to " << dir << '\n';
}

BacktestOptions backtest_options(const KeyValueConfig& cfg, const ClassifierModel& classifier,
                                 const KeyValueConfig& agent_meta) {
  BacktestOptions opt;
  KeyValueConfig merged = agent_meta;
  for (const auto& [k, v] : cfg.entries()) merged.set(k, v);
  opt.env = env_config(merged, classifier.window());
  opt.sample = cfg.get_bool("sample", false);
  opt.sample_seed = get_seed(cfg, "sample_seed", 0);
  return opt;
}

void cmd_backtest(const KeyValueConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto classifier = load_checked_classifier(cfg);
  const auto agent = load_checked_agent(cfg, classifier);
  const auto series = load_series(cfg, "eval.from", "eval.to");
  if (agent.meta.contains("train.first") && agent.meta.contains("train.last")) {
    const DateRange train{agent.meta.get_int("train.first", 0), agent.meta.get_int("train.last", 0)};
    if (auto warning = check_disjoint(train, date_range(*series),
                                      cfg.get_bool("allow_overlap", false))) {
      err << "warning: " << *warning << '\n';
    }
  }
  const auto report =
      run_backtest(series, classifier, agent.agent, backtest_options(cfg, classifier, agent.meta));
  const auto dir = cfg.require("out");
  write_report(report, dir);
  print_summary(report, dir, out);
}

void cmd_transfer_eval(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto classifier = load_checked_classifier(cfg);
  const auto agent = load_checked_agent(cfg, classifier);
  const auto series = load_series(cfg, "eval.from", "eval.to");
  const auto source = cfg.get_string("source_name", agent.meta.get_string("train.source", "source"));
  const auto target = cfg.get_string("target_name", stem(cfg.require("data")));
  const auto report = transfer_eval(series, classifier, agent.agent,
                                    backtest_options(cfg, classifier, agent.meta), source, target);
  const auto dir = cfg.require("out");
  write_report(report, dir);
  out << "transfer " << source << " -> " << target << '\n';
  print_summary(report, dir, out);
}

void cmd_report(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
  const auto dir = cfg.require("dir");
  const auto run = read_exported_run(dir);
  BacktestReport r;
  r.equity = run.equity;
  r.timestamps = run.timestamps;
  r.trades = run.trades;
  r.metrics = recompute_metrics(run);
  if (run.timestamps.size() > 1) r.bar_interval = run.timestamps[1] - run.timestamps[0];
  write_metrics_csv(r, out);
  const auto svg = (std::filesystem::path(dir) / "equity.svg").string();
  std::ofstream file(svg);
  if (!file) throw IoError("cannot write " + svg);
  write_equity_svg(r.equity, file);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("GAF candlestick-pattern classifier and PPO trading agent", "gafrl");
  app.require_subcommand(1);
  std::deque<Command> commands;

  commands.emplace_back(app, "gen-market", "write a synthetic OHLCV series", cmd_gen_market);
  commands.back()
      .option("kind", "kind", "sawtooth | random-walk | constant")
      .option("bars", "bars", "number of bars")
      .option("period", "period", "sawtooth period in bars")
      .option("amplitude", "amplitude", "sawtooth peak-to-trough fraction")
      .option("price", "price", "base or start price")
      .option("noise", "noise", "sawtooth relative noise")
      .option("marked-bars", "marked_bars", "sawtooth hanging-man bars before each drop")
      .option("phase", "phase", "sawtooth phase shift in bars")
      .option("volatility", "volatility", "random-walk per-bar log-return std")
      .option("seed", "seed", "random seed")
      .option("start", "start", "first timestamp (unix seconds)")
      .option("interval", "interval", "bar interval in seconds")
      .option("out", "out", "output CSV path");

  commands.emplace_back(app, "encode", "print the GAF stack of one window", cmd_encode);
  commands.back()
      .option("data", "data", "OHLCV CSV")
      .option("index", "index", "window origin bar")
      .option("window", "window", "window length")
      .option("out", "out", "output CSV (default stdout)");

  commands.emplace_back(app, "gen-corpus", "generate a balanced labeled corpus", cmd_gen_corpus);
  commands.back()
      .option("per-class", "per_class", "windows per class")
      .option("seed", "seed", "random seed")
      .option("window", "window", "window length")
      .option("out", "out", "output corpus CSV");

  commands.emplace_back(app, "train-cnn", "train the pattern classifier", cmd_train_cnn);
  commands.back()
      .option("corpus", "corpus", "corpus CSV (default: generate one)")
      .option("per-class", "per_class", "generated windows per class")
      .option("corpus-seed", "corpus_seed", "seed of the generated corpus")
      .option("window", "window", "window length for a generated corpus")
      .option("epochs", "epochs", "maximum epochs")
      .option("batch-size", "batch_size", "mini-batch size")
      .option("learning-rate", "learning_rate", "Adam learning rate")
      .option("patience", "patience", "early-stopping patience in epochs")
      .option("seed", "seed", "training seed")
      .option("out", "out", "checkpoint path");

  commands.emplace_back(app, "classify", "pattern distribution for every window", cmd_classify);
  commands.back()
      .option("data", "data", "OHLCV CSV")
      .option("classifier", "classifier", "classifier checkpoint")
      .option("out", "out", "output CSV (default stdout)");

  commands.emplace_back(app, "train-agent", "train the PPO agent on a series", cmd_train_agent);
  commands.back()
      .option("data", "data", "OHLCV CSV")
      .option("classifier", "classifier", "classifier checkpoint")
      .option("episodes", "episodes", "training episodes")
      .option("max-steps", "max_steps", "step limit per episode")
      .option("seed", "seed", "PPO seed")
      .option("fee", "fee", "fee per unit traded")
      .flag("strict", "strict_observation", "observe the pattern distribution only")
      .option("from", "train.from", "first training timestamp")
      .option("to", "train.to", "last training timestamp")
      .option("log", "log", "training log CSV")
      .option("out", "out", "agent checkpoint path");

  commands.emplace_back(app, "backtest", "greedy evaluation on held-out data", cmd_backtest);
  commands.back()
      .option("data", "data", "OHLCV CSV")
      .option("classifier", "classifier", "classifier checkpoint")
      .option("agent", "agent", "agent checkpoint")
      .option("fee", "fee", "fee per unit traded")
      .flag("sample", "sample", "sample actions instead of argmax")
      .option("sample-seed", "sample_seed", "seed for sampled actions")
      .option("from", "eval.from", "first evaluation timestamp")
      .option("to", "eval.to", "last evaluation timestamp")
      .flag("allow-overlap", "allow_overlap", "warn instead of failing on overlapping dates")
      .option("out", "out", "report directory");

  commands.emplace_back(app, "transfer-eval", "evaluate a trained agent on another asset",
                        cmd_transfer_eval);
  commands.back()
      .option("data", "data", "target OHLCV CSV")
      .option("classifier", "classifier", "classifier checkpoint")
      .option("agent", "agent", "agent checkpoint")
      .option("fee", "fee", "fee per unit traded")
      .flag("sample", "sample", "sample actions instead of argmax")
      .option("sample-seed", "sample_seed", "seed for sampled actions")
      .option("from", "eval.from", "first evaluation timestamp")
      .option("to", "eval.to", "last evaluation timestamp")
      .option("source-name", "source_name", "source asset tag")
      .option("target-name", "target_name", "target asset tag")
      .option("out", "out", "report directory");

  commands.emplace_back(app, "report", "recompute metrics from a report directory", cmd_report);
  commands.back().option("dir", "dir", "report directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    for (const auto& c : commands) {
      if (c.parsed()) c.execute(out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gafrl::cli
