// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. argv[1] is the path of the gafrl command-line binary.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "gafrl/backtest.hpp"
#include "gafrl/classifier.hpp"
#include "gafrl/gaf.hpp"
#include "gafrl/ppo.hpp"
#include "gafrl/synthetic_market.hpp"
#include "gafrl/trading_env.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace gafrl;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds) {
  std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run_criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, std::chrono::duration<double>(Clock::now() - t0).count());
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.se = sd / std::sqrt(static_cast<double>(v.size()));
  return s;
}

// ---------------------------------------------------------------------------
// 1. GAF correctness

Outcome gaf_correctness() {
  const auto t0 = Clock::now();
  const auto corner = encode_gaf(std::vector<double>{0.0, 1.0});
  if (!(corner(0, 0) == -1.0 && corner(0, 1) == 0.0 && corner(1, 0) == 0.0 &&
        corner(1, 1) == 1.0)) {
    return {false, "encode_gaf([0,1]) is not [[-1,0],[0,1]]"};
  }
  RandomWalkSpec spec;
  spec.bars = 1009;
  spec.seed = 1;
  const auto series = make_random_walk(spec);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  std::uniform_real_distribution<double> shift(-1000.0, 1000.0);
  double sym = 0.0, diag = 0.0, affine = 0.0;
  bool in_range = true;
  for (const auto& w : make_windows(series, 10)) {
    for (const auto& x : {w.opens(), w.highs(), w.lows(), w.closes()}) {
      const auto g = encode_gaf(x);
      const auto phi = gaf_angles(x);
      const double a = scale(rng), b = shift(rng);
      std::vector<double> y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
      const auto gy = encode_gaf(y);
      for (std::size_t i = 0; i < x.size(); ++i) {
        diag = std::max(diag, std::abs(g(i, i) - std::cos(2.0 * phi[i])));
        for (std::size_t j = 0; j < x.size(); ++j) {
          sym = std::max(sym, std::abs(g(i, j) - g(j, i)));
          in_range = in_range && g(i, j) >= -1.0 && g(i, j) <= 1.0;
          affine = std::max(affine, std::abs(g(i, j) - gy(i, j)));
        }
      }
    }
  }
  const double secs = elapsed(t0);
  Outcome o;
  o.pass = sym <= 1e-12 && diag <= 1e-12 && affine <= 1e-12 && in_range && secs < 1.0;
  std::ostringstream d;
  d << "corner exact; 1000 windows x 4 channels: max |G-G^T|=" << sym << " max diag err=" << diag
    << " max affine diff=" << affine << " range ok=" << (in_range ? "yes" : "no")
    << " runtime " << fmt("%.3f", secs) << "s (< 1s)";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 2. Gradient fidelity

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  using namespace nn;
  struct Case {
    const char* name;
    std::vector<LayerSpec> layers;
    Shape input;
  };
  const std::vector<Case> cases = {
      {"conv2d", {Conv2d{2, 3, 2}}, {2, 5, 5}},
      {"dense", {Dense{6, 4}}, {6}},
      {"relu", {Dense{6, 8}, Relu{}, Dense{8, 3}}, {6}},
      {"maxpool2x2", {Conv2d{2, 3, 2}, MaxPool2x2{}, Flatten{}, Dense{12, 3}}, {2, 5, 5}},
      {"flatten", {Flatten{}, Dense{18, 2}}, {2, 3, 3}},
      {"softmax", {Dense{5, 4}, Softmax{}}, {5}},
  };
  double worst_layer = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::mt19937_64 rng(seed * 31);
      Network net(c.layers, c.input, seed);
      const auto x = testing::random_tensor(c.input, rng);
      const double err = testing::network_gradient_error(net, x, rng);
      if (err > worst_layer) {
        worst_layer = err;
        worst_name = c.name;
      }
    }
  }
  double worst_ac = 0.0;
  double worst_loss = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed * 97);
    ActorCritic model(kAugmentedObservationSize, kActionCount, 64, seed);
    for (auto& p : model.mutable_policy_head().mutable_parameters()) {
      for (double& v : p.data()) v = 0.3 * testing::random_tensor({1}, rng)[0];
    }
    std::vector<double> obs(kAugmentedObservationSize);
    for (double& v : obs) v = testing::random_tensor({1}, rng)[0];
    worst_ac = std::max(worst_ac, testing::actor_critic_gradient_error(model, obs, rng));

    // Full PPO loss through the actor-critic at fixed advantages.
    std::vector<Transition> batch(8);
    for (auto& t : batch) {
      t.state.resize(kAugmentedObservationSize);
      for (double& v : t.state) v = testing::random_tensor({1}, rng)[0];
      t.action = rng() % kActionCount;
    }
    const auto e = evaluate(model, batch);
    const double offsets[] = {0.0, 0.5, -0.5};
    std::vector<double> ret, adv;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].log_prob_old = std::min(0.0, e.log_probs[i] + offsets[i % 3]);
      ret.push_back(testing::random_tensor({1}, rng)[0]);
      adv.push_back(testing::random_tensor({1}, rng)[0]);
    }
    worst_loss = std::max(worst_loss, testing::ppo_gradient_error(model, batch, ret, adv, {}));
  }
  const double secs = elapsed(t0);
  Outcome o;
  o.pass = worst_layer < 1e-4 && worst_ac < 1e-4 && worst_loss < 1e-4 && secs < 30.0;
  std::ostringstream d;
  d << "6 layer kinds x 5 seeds worst rel err " << worst_layer << " (" << worst_name
    << "); actor-critic pass " << worst_ac << "; PPO loss " << worst_loss
    << " (threshold 1e-4, step 1e-5)";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 3. Classifier

std::optional<ClassifierModel> trained_classifier;

Outcome classifier_accuracy() {
  const auto t0 = Clock::now();
  auto windows = generate_balanced_corpus(889, 42, 10);
  windows.erase(windows.begin() + 8000, windows.end());  // interleaved classes stay balanced
  const auto corpus = encode_corpus(windows);
  ClassifierConfig cfg;
  cfg.seed = 42;
  const auto r = train_classifier(corpus, cfg);
  trained_classifier = r.model;
  const double val = r.model.metadata().validation_accuracy;
  const std::size_t epochs = r.model.metadata().epochs_run;

  auto mem_windows = generate_balanced_corpus(1, 42, 10);
  const auto mem = encode_corpus(mem_windows);
  ClassifierConfig mcfg;
  mcfg.validation_fraction = 0.0;
  mcfg.patience = 0;
  mcfg.max_epochs = 150;
  mcfg.batch_size = kPatternClassCount;
  const double mem_acc = accuracy(train_classifier(mem, mcfg).model, mem);

  const double secs = elapsed(t0);
  Outcome o;
  o.pass = val >= 0.90 && epochs <= 30 && mem_acc == 1.0 && secs < 600.0;
  std::ostringstream d;
  d << "8000 windows seed 42: validation accuracy " << fmt("%.4f", val) << " (>= 0.90) after "
    << epochs << " epochs (<= 30); memorization train accuracy " << mem_acc
    << " (== 1); runtime " << fmt("%.0f", secs) << "s (< 600s)";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 4. PPO loss algebra

Outcome ppo_algebra() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> in_band(std::log(0.8), std::log(1.2));

  // Clip inactivity.
  PpoConfig clipped;
  PpoConfig unclipped;
  unclipped.clip = 1e300;
  int clip_mismatch = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 64;
    std::vector<double> lp(n), old(n), ret(n), val(n), ent(n);
    for (std::size_t i = 0; i < n; ++i) {
      old[i] = -std::abs(z(rng)) - 0.3;
      lp[i] = old[i] + in_band(rng);
      ret[i] = z(rng);
      val[i] = z(rng);
      ent[i] = std::abs(z(rng));
    }
    if (ppo_loss(lp, old, ret, val, ent, clipped).total !=
        ppo_loss(lp, old, ret, val, ent, unclipped).total) {
      ++clip_mismatch;
    }
  }

  // Identical parameters give unit ratios.
  PpoAgent agent(kAugmentedObservationSize, kActionCount, PpoConfig{});
  int ratio_mismatch = 0;
  std::vector<Transition> batch;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> obs(kAugmentedObservationSize);
    for (double& v : obs) v = z(rng);
    const auto s = agent.act(obs, rng);
    batch.push_back({obs, s.action, s.log_prob, 0.0});
  }
  const auto e = evaluate(agent.policy(), batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (std::exp(e.log_probs[i] - batch[i].log_prob_old) != 1.0) ++ratio_mismatch;
  }

  // Discounted returns against the brute-force double sum.
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    TrajectoryBuffer b;
    const std::size_t n = 1 + rng() % 100;
    for (std::size_t i = 0; i < n; ++i) {
      b.push({{0.0}, 0, 0.0, 5.0 * z(rng)});
      if (rng() % 12 == 0) b.end_episode();
    }
    const double gamma = 0.5 + 0.5 * static_cast<double>(rng() % 1001) / 1000.0;
    const auto fast = discounted_returns(b, gamma);
    for (std::size_t t = 0; t < n; ++t) {
      double sum = 0.0;
      for (std::size_t u = t; u < n; ++u) {
        sum += std::pow(gamma, static_cast<double>(u - t)) * b[u].reward;
        if (b.ends_episode(u)) break;
      }
      worst = std::max(worst, std::abs(fast[t] - sum) / std::max(1.0, std::abs(sum)));
    }
  }
  Outcome o;
  o.pass = clip_mismatch == 0 && ratio_mismatch == 0 && worst <= 1e-12;
  std::ostringstream d;
  d << "clip-inactive mismatches " << clip_mismatch << "/500; q != 1 at theta == theta_old "
    << ratio_mismatch << "/500; discounted returns worst rel err " << worst
    << " over 100 buffers (<= 1e-12)";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 5 and 8. Sawtooth learning and transfer

constexpr int kSeeds = 10;
constexpr std::size_t kTrainEpisodes = 200;

SawtoothSpec asset_a(std::uint64_t seed) {
  SawtoothSpec s;
  s.bars = 500;
  s.seed = 1000 + seed;
  s.marked_bars = 1;
  return s;
}

SawtoothSpec asset_a_heldout(std::uint64_t seed) {
  SawtoothSpec s = asset_a(seed);
  s.seed = 5000 + seed;
  s.start_timestamp += static_cast<std::int64_t>(s.bars) * s.bar_interval;
  return s;
}

// Same period, amplitude and noise level; different price level, phase and noise path.
SawtoothSpec asset_b(std::uint64_t seed) {
  SawtoothSpec s = asset_a_heldout(seed);
  s.base_price = 250.0;
  s.phase = 7;
  s.seed = 9000 + seed;
  return s;
}

struct TrainedAgents {
  std::vector<PpoAgent> agents;
  std::vector<double> first_decile;
  std::vector<double> last_decile;
};

std::optional<TrainedAgents> trained_agents;

double greedy_return(const ClassifierModel& cls, const PpoAgent& agent, const SawtoothSpec& spec) {
  auto s = std::make_shared<const CandleSeries>(make_sawtooth(spec));
  BacktestOptions opt;
  return run_backtest(s, cls, agent, opt).equity.back() - opt.env.initial_equity;
}

Outcome sawtooth_learning() {
  const auto t0 = Clock::now();
  const ClassifierModel cls = trained_classifier ? *trained_classifier : ClassifierModel(10, 42);
  TrainedAgents trained;
  std::vector<double> agent_returns, random_returns;
  int improved = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    auto s = std::make_shared<const CandleSeries>(make_sawtooth(asset_a(seed)));
    TradingEnv env(s, cls, EnvConfig{});
    PpoConfig pc;
    pc.seed = static_cast<std::uint64_t>(seed);
    PpoAgent agent(env.observation_size(), env.action_count(), pc);
    const auto res = train(env, agent, kTrainEpisodes, env.max_steps());
    const std::size_t d = kTrainEpisodes / 10;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      first += res.episodes[i].total_return;
      last += res.episodes[kTrainEpisodes - 1 - i].total_return;
    }
    trained.first_decile.push_back(first / d);
    trained.last_decile.push_back(last / d);
    improved += last > first;

    agent_returns.push_back(greedy_return(cls, agent, asset_a_heldout(seed)));

    auto hs = std::make_shared<const CandleSeries>(make_sawtooth(asset_a_heldout(seed)));
    TradingEnv renv(hs, cls, EnvConfig{});
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 77);
    const auto rr = run_policy(renv, [&](const EnvState&) { return std::size_t(rng() % 3); });
    random_returns.push_back(rr.equity.back() - rr.equity.front());
    trained.agents.push_back(std::move(agent));
  }
  trained_agents = std::move(trained);

  const auto a = stats_of(agent_returns);
  const auto r = stats_of(random_returns);
  const double se_diff = std::sqrt(a.se * a.se + r.se * r.se);
  const double secs = elapsed(t0);
  Outcome o;
  o.pass = a.mean - 0.0 >= 3.0 * a.se && a.mean - r.mean >= 3.0 * se_diff && a.mean > 0.0 &&
           a.mean > r.mean && improved == kSeeds && secs < 900.0;
  std::ostringstream d;
  d << "greedy held-out return mean " << fmt("%.2f", a.mean) << " (SE " << fmt("%.2f", a.se)
    << ") vs hold 0: " << fmt("%.1f", a.mean / std::max(a.se, 1e-12)) << " SE; vs random mean "
    << fmt("%.2f", r.mean) << " (SE " << fmt("%.2f", r.se) << "): "
    << fmt("%.1f", (a.mean - r.mean) / std::max(se_diff, 1e-12))
    << " SE (need >= 3); last-decile > first-decile training return in " << improved << "/"
    << kSeeds << " seeds; runtime " << fmt("%.0f", secs) << "s (< 900s)";
  o.detail = d.str();
  return o;
}

Outcome transfer_mechanism() {
  const ClassifierModel cls = trained_classifier ? *trained_classifier : ClassifierModel(10, 42);
  if (!trained_agents) return {false, "no agents from the learning criterion"};
  std::vector<double> returns;
  for (int seed = 0; seed < kSeeds; ++seed) {
    auto s = std::make_shared<const CandleSeries>(make_sawtooth(asset_b(seed)));
    const auto r = transfer_eval(s, cls, trained_agents->agents[seed], {}, "sawtooth-a",
                                 "sawtooth-b");
    returns.push_back(r.equity.back() - r.equity.front());
  }
  const auto st = stats_of(returns);
  Outcome o;
  o.pass = st.mean > 0.0;
  std::ostringstream d;
  d << "agents trained on asset A (base 100), evaluated unchanged on asset B (base 250, "
       "phase 7, new noise path): mean return "
    << fmt("%.2f", st.mean) << " (SE " << fmt("%.2f", st.se) << ") over " << kSeeds
    << " seeds (need > 0)";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 6. Accounting conservation

Outcome accounting() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  int cap_violations = 0;
  PatternDistribution uniform;
  uniform.probabilities.fill(1.0 / kPatternClassCount);
  for (int trial = 0; trial < 1000; ++trial) {
    RandomWalkSpec spec;
    spec.bars = 20 + rng() % 200;
    spec.seed = rng();
    spec.volatility = 0.005 + 0.03 * static_cast<double>(rng() % 1000) / 1000.0;
    auto s = std::make_shared<const CandleSeries>(make_random_walk(spec));
    auto feed = std::make_shared<const PatternFeed>(s->size() - 10 + 1, uniform);
    EnvConfig cfg;
    cfg.fee_per_unit = (trial % 4 == 0) ? 0.05 : 0.0;
    TradingEnv env(s, feed, cfg);
    env.reset();
    double total = 0.0;
    while (!env.done()) {
      total += env.step(static_cast<std::size_t>(rng() % 3)).reward;
      if (std::abs(env.account().position) > kMaxPosition) ++cap_violations;
    }
    worst = std::max(worst, std::abs((env.account().equity - cfg.initial_equity) - total));
  }
  Outcome o;
  o.pass = worst <= 1e-9 && cap_violations == 0;
  std::ostringstream d;
  d << "1000 random episodes: max |(final - initial) - sum(rewards)| = " << worst
    << " (<= 1e-9); position cap violations " << cap_violations;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 7. Pipeline determinism

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Outcome pipeline_determinism(const std::string& cli) {
  if (cli.empty() || !std::filesystem::exists(cli)) return {false, "CLI binary not found: " + cli};
  testing::TempDir dir("acceptance");
  const auto q = [](const std::filesystem::path& p) { return "'" + p.string() + "'"; };
  const auto train = dir.path() / "train.csv";
  const auto eval = dir.path() / "eval.csv";
  const auto cls = dir.path() / "cls.txt";
  if (sh(cli + " gen-market --bars 400 --seed 1 --out " + q(train)) != 0 ||
      sh(cli + " gen-market --bars 200 --seed 2 --start 1600000000 --out " + q(eval)) != 0 ||
      sh(cli + " train-cnn --per-class 20 --epochs 3 --seed 5 --out " + q(cls)) != 0) {
    return {false, "setup commands failed"};
  }
  std::vector<std::string> digests;
  for (int run = 0; run < 2; ++run) {
    const auto agent = dir.path() / ("agent" + std::to_string(run) + ".txt");
    const auto out = dir.path() / ("report" + std::to_string(run));
    if (sh(cli + " train-agent --data " + q(train) + " --classifier " + q(cls) +
           " --episodes 6 --seed 13 --set ppo.update_timestep=512 --out " + q(agent)) != 0) {
      return {false, "train-agent failed"};
    }
    if (sh(cli + " backtest --data " + q(eval) + " --classifier " + q(cls) + " --agent " +
           q(agent) + " --out " + q(out)) != 0) {
      return {false, "backtest failed"};
    }
    std::string all;
    for (const char* f : {"report.csv", "equity.csv", "trades.csv", "trace.csv"}) {
      all += slurp(out / f);
      all += '\0';
    }
    digests.push_back(all);
  }
  Outcome o;
  o.pass = digests[0] == digests[1] && !digests[0].empty();
  o.detail = std::string("two train-agent + backtest runs (seed 13): report.csv, equity.csv, "
                         "trades.csv, trace.csv ") +
             (o.pass ? "byte-identical" : "differ");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  run_criterion(1, "GAF correctness", gaf_correctness);
  run_criterion(2, "gradient fidelity", gradient_fidelity);
  run_criterion(3, "classifier", classifier_accuracy);
  run_criterion(4, "PPO loss algebra", ppo_algebra);
  run_criterion(5, "PPO learning signal", sawtooth_learning);
  run_criterion(6, "accounting conservation", accounting);
  run_criterion(7, "pipeline determinism", [&] { return pipeline_determinism(cli); });
  run_criterion(8, "transfer mechanism", transfer_mechanism);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
