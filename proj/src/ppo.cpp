#include "gafrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gafrl/config.hpp"
#include "gafrl/errors.hpp"
#include "gafrl/market_data.hpp"

namespace gafrl {

namespace {

std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double lse = m + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
  return out;
}

double entropy_of(std::span<const double> probs, std::span<const double> log_probs) {
  double h = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) h -= probs[k] * log_probs[k];
  return h;
}

void require_aligned(std::size_t n, std::initializer_list<std::size_t> sizes) {
  if (n == 0) throw DimensionError("empty batch");
  for (std::size_t s : sizes) {
    if (s != n) throw DimensionError("misaligned batch vectors");
  }
}

void require_finite(double v, const char* component) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + component);
}

std::string stats_string(const LossTerms& l) {
  return "policy=" + format_double(l.policy) + " value=" + format_double(l.value) +
         " entropy=" + format_double(l.entropy) + " total=" + format_double(l.total);
}

}  // namespace

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo gamma must be in (0, 1]");
  if (!(clip > 0.0)) throw ConfigError("ppo clip must be positive");
  if (epochs < 1) throw ConfigError("ppo epochs must be at least 1");
  if (update_timestep < 1) throw ConfigError("ppo update timestep must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo learning rate must be positive");
  if (value_coef < 0.0 || entropy_coef < 0.0 || grad_clip < 0.0) {
    throw ConfigError("ppo coefficients must be non-negative");
  }
  if (hidden < 1) throw ConfigError("ppo hidden width must be at least 1");
}

void PpoConfig::apply(const KeyValueConfig& cfg) {
  gamma = cfg.get_double("ppo.gamma", gamma);
  clip = cfg.get_double("ppo.clip", clip);
  epochs = static_cast<std::size_t>(cfg.get_int("ppo.epochs", static_cast<std::int64_t>(epochs)));
  update_timestep = static_cast<std::size_t>(
      cfg.get_int("ppo.update_timestep", static_cast<std::int64_t>(update_timestep)));
  value_coef = cfg.get_double("ppo.value_coef", value_coef);
  entropy_coef = cfg.get_double("ppo.entropy_coef", entropy_coef);
  learning_rate = cfg.get_double("ppo.learning_rate", learning_rate);
  seed = static_cast<std::uint64_t>(cfg.get_int("ppo.seed", static_cast<std::int64_t>(seed)));
  normalize_returns = cfg.get_bool("ppo.normalize_returns", normalize_returns);
  grad_clip = cfg.get_double("ppo.grad_clip", grad_clip);
  hidden = static_cast<std::size_t>(cfg.get_int("ppo.hidden", static_cast<std::int64_t>(hidden)));
  validate();
}

void PpoConfig::write(std::ostream& out) const {
  out << "ppo.gamma=" << format_double(gamma) << '\n'
      << "ppo.clip=" << format_double(clip) << '\n'
      << "ppo.epochs=" << epochs << '\n'
      << "ppo.update_timestep=" << update_timestep << '\n'
      << "ppo.value_coef=" << format_double(value_coef) << '\n'
      << "ppo.entropy_coef=" << format_double(entropy_coef) << '\n'
      << "ppo.learning_rate=" << format_double(learning_rate) << '\n'
      << "ppo.seed=" << seed << '\n'
      << "ppo.normalize_returns=" << (normalize_returns ? "true" : "false") << '\n'
      << "ppo.grad_clip=" << format_double(grad_clip) << '\n'
      << "ppo.hidden=" << hidden << '\n';
}

// ---------------------------------------------------------------------------

ActorCritic::ActorCritic(std::size_t observation_size, std::size_t action_count,
                         std::size_t hidden, std::uint64_t seed)
    : trunk_({nn::Dense{observation_size, hidden}, nn::Relu{}, nn::Dense{hidden, hidden},
              nn::Relu{}},
             {observation_size}, seed),
      // Small action-head init keeps the initial policy near uniform.
      policy_({nn::Dense{hidden, action_count, 0.01}}, {hidden}, seed + 1),
      value_({nn::Dense{hidden, 1}}, {hidden}, seed + 2) {}

ActorCritic::ActorCritic(nn::Network trunk, nn::Network policy_head, nn::Network value_head)
    : trunk_(std::move(trunk)), policy_(std::move(policy_head)), value_(std::move(value_head)) {
  if (trunk_.output_shape() != policy_.input_shape() ||
      trunk_.output_shape() != value_.input_shape()) {
    throw DimensionError("actor-critic heads do not match the trunk output " +
                         nn::shape_string(trunk_.output_shape()));
  }
  if (value_.output_shape() != nn::Shape{1} || policy_.output_shape().size() != 1) {
    throw DimensionError("actor-critic heads must be rank-1 with a scalar value");
  }
}

ActorCritic::Pass ActorCritic::forward(std::span<const double> observation) const {
  nn::Tensor input({observation.size()}, std::vector<double>(observation.begin(), observation.end()));
  Pass p;
  p.trunk = trunk_.forward(input);
  p.policy = policy_.forward(p.trunk.output);
  p.value = value_.forward(p.trunk.output);
  p.probabilities = nn::softmax(p.policy.output.data());
  return p;
}

std::vector<double> ActorCritic::probabilities(std::span<const double> observation) const {
  nn::Tensor input({observation.size()}, std::vector<double>(observation.begin(), observation.end()));
  return nn::softmax(policy_.predict(trunk_.predict(input)).data());
}

double ActorCritic::value(std::span<const double> observation) const {
  nn::Tensor input({observation.size()}, std::vector<double>(observation.begin(), observation.end()));
  return value_.predict(trunk_.predict(input))[0];
}

nn::Tensor ActorCritic::backward(const Pass& pass, std::span<const double> logit_grad,
                                 double value_grad, std::span<nn::Tensor> grads) const {
  const std::size_t nt = trunk_.parameters().size();
  const std::size_t np = policy_.parameters().size();
  nn::Tensor dlogits({logit_grad.size()}, std::vector<double>(logit_grad.begin(), logit_grad.end()));
  nn::Tensor dv({1}, {value_grad});
  nn::Tensor dfeat = policy_.backward_accumulate(pass.policy.cache, dlogits, grads.subspan(nt, np));
  const nn::Tensor dfeat_v =
      value_.backward_accumulate(pass.value.cache, dv, grads.subspan(nt + np));
  for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dfeat_v[i];
  return trunk_.backward_accumulate(pass.trunk.cache, dfeat, grads.subspan(0, nt));
}

std::vector<nn::Tensor> ActorCritic::zero_gradients() const {
  auto g = trunk_.zero_gradients();
  for (auto& t : policy_.zero_gradients()) g.push_back(std::move(t));
  for (auto& t : value_.zero_gradients()) g.push_back(std::move(t));
  return g;
}

std::vector<const nn::Tensor*> ActorCritic::parameters() const {
  std::vector<const nn::Tensor*> out;
  for (const auto* net : {&trunk_, &policy_, &value_}) {
    for (const auto& t : net->parameters()) out.push_back(&t);
  }
  return out;
}

std::vector<nn::Tensor*> ActorCritic::mutable_parameters() {
  std::vector<nn::Tensor*> out;
  for (auto* net : {&trunk_, &policy_, &value_}) {
    for (auto& t : net->mutable_parameters()) out.push_back(&t);
  }
  return out;
}

std::size_t ActorCritic::parameter_count() const {
  return trunk_.parameter_count() + policy_.parameter_count() + value_.parameter_count();
}

// ---------------------------------------------------------------------------

void TrajectoryBuffer::push(Transition t) {
  if (!(t.log_prob_old <= 0.0) || !std::isfinite(t.reward)) {
    throw DomainError("transition needs a finite reward and log probability <= 0");
  }
  transitions_.push_back(std::move(t));
  episode_end_.push_back(false);
}

void TrajectoryBuffer::end_episode() {
  if (!episode_end_.empty()) episode_end_.back() = true;
}

void TrajectoryBuffer::clear() {
  transitions_.clear();
  episode_end_.clear();
}

std::vector<double> discounted_returns(const TrajectoryBuffer& buffer, double gamma) {
  const std::size_t n = buffer.size();
  std::vector<double> out(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 == n || buffer.ends_episode(i)) running = 0.0;
    running = buffer[i].reward + gamma * running;
    out[i] = running;
  }
  return out;
}

PolicyEvaluation evaluate(const ActorCritic& model, std::span<const Transition> batch) {
  PolicyEvaluation e;
  e.log_probs.reserve(batch.size());
  e.values.reserve(batch.size());
  e.entropies.reserve(batch.size());
  for (const auto& t : batch) {
    const auto pass = model.forward(t.state);
    const auto logp = log_softmax(pass.logits());
    e.log_probs.push_back(logp.at(t.action));
    e.values.push_back(pass.value_estimate());
    e.entropies.push_back(entropy_of(pass.probabilities, logp));
  }
  return e;
}

LossTerms ppo_objective(std::span<const double> log_probs, std::span<const double> log_probs_old,
                        std::span<const double> advantages, std::span<const double> values,
                        std::span<const double> returns, std::span<const double> entropies,
                        const PpoConfig& config) {
  const std::size_t n = log_probs.size();
  require_aligned(n, {log_probs_old.size(), advantages.size(), values.size(), returns.size(),
                      entropies.size()});
  LossTerms l;
  for (std::size_t t = 0; t < n; ++t) {
    const double ratio = std::exp(log_probs[t] - log_probs_old[t]);
    require_finite(ratio, "probability ratio");
    const double surr1 = ratio * advantages[t];
    const double surr2 = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip) * advantages[t];
    l.policy -= std::min(surr1, surr2);
    const double err = values[t] - returns[t];
    l.value += err * err;
    l.entropy += entropies[t];
  }
  const double inv = 1.0 / static_cast<double>(n);
  l.policy *= inv;
  l.value *= inv;
  l.entropy *= inv;
  require_finite(l.policy, "policy loss");
  require_finite(l.value, "value loss");
  require_finite(l.entropy, "entropy");
  l.total = l.policy + config.value_coef * l.value - config.entropy_coef * l.entropy;
  require_finite(l.total, "total loss");
  return l;
}

LossTerms ppo_loss(std::span<const double> log_probs, std::span<const double> log_probs_old,
                   std::span<const double> returns, std::span<const double> values,
                   std::span<const double> entropies, const PpoConfig& config) {
  require_aligned(returns.size(), {values.size()});
  std::vector<double> adv(returns.size());
  for (std::size_t t = 0; t < adv.size(); ++t) adv[t] = returns[t] - values[t];
  return ppo_objective(log_probs, log_probs_old, adv, values, returns, entropies, config);
}

LossGradient ppo_gradient(const ActorCritic& model, std::span<const Transition> batch,
                          std::span<const double> returns, std::span<const double> advantages,
                          const PpoConfig& config) {
  const std::size_t n = batch.size();
  require_aligned(n, {returns.size(), advantages.size()});
  const double inv = 1.0 / static_cast<double>(n);
  const std::size_t actions = model.action_count();

  std::vector<double> logp_new(n), logp_old(n), values(n), entropies(n);
  LossGradient out;
  out.grads = model.zero_gradients();
  std::vector<double> dlogits(actions);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& tr = batch[t];
    if (tr.action >= actions) throw DomainError("transition action out of range");
    const auto pass = model.forward(tr.state);
    const auto logp = log_softmax(pass.logits());
    const auto& probs = pass.probabilities;
    const double h = entropy_of(probs, logp);
    logp_new[t] = logp[tr.action];
    logp_old[t] = tr.log_prob_old;
    values[t] = pass.value_estimate();
    entropies[t] = h;

    const double ratio = std::exp(logp_new[t] - logp_old[t]);
    const double a = advantages[t];
    const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    // The unclipped branch carries the gradient whenever min selects it.
    const double dlogp = ratio * a <= clipped * a ? -ratio * a * inv : 0.0;
    for (std::size_t k = 0; k < actions; ++k) {
      const double dlogp_dz = (k == tr.action ? 1.0 : 0.0) - probs[k];
      const double dh_dz = -probs[k] * (logp[k] + h);
      dlogits[k] = dlogp * dlogp_dz - config.entropy_coef * inv * dh_dz;
    }
    const double dv = 2.0 * config.value_coef * (values[t] - returns[t]) * inv;
    model.backward(pass, dlogits, dv, out.grads);
  }
  out.loss = ppo_objective(logp_new, logp_old, advantages, values, returns, entropies, config);
  return out;
}

// ---------------------------------------------------------------------------

std::size_t sample_categorical(std::span<const double> probabilities, std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    acc += probabilities[k];
    if (u < acc) return k;
  }
  // Rounding left u above the final cumulative sum.
  for (std::size_t k = probabilities.size(); k-- > 0;) {
    if (probabilities[k] > 0.0) return k;
  }
  throw DomainError("cannot sample from an all-zero distribution");
}

PpoAgent::PpoAgent(std::size_t observation_size, std::size_t action_count, PpoConfig config)
    : PpoAgent(ActorCritic(observation_size, action_count, config.hidden, config.seed), config) {}

PpoAgent::PpoAgent(ActorCritic model, PpoConfig config)
    : config_(config), current_(std::move(model)), old_(current_) {
  config_.validate();
  nn::AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  optim_.emplace_back(adam, current_.trunk().parameters());
  optim_.emplace_back(adam, current_.policy_head().parameters());
  optim_.emplace_back(adam, current_.value_head().parameters());
}

PpoAgent::Sample PpoAgent::act(std::span<const double> observation, std::mt19937_64& rng) const {
  const auto pass = old_.forward(observation);
  const auto logp = log_softmax(pass.logits());
  const std::size_t a = sample_categorical(pass.probabilities, rng);
  return {a, logp[a]};
}

std::size_t PpoAgent::act_greedy(std::span<const double> observation) const {
  const auto p = current_.probabilities(observation);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

UpdateStats PpoAgent::update(TrajectoryBuffer& buffer) {
  if (buffer.size() != config_.update_timestep) {
    throw LifecycleError("update needs exactly " + std::to_string(config_.update_timestep) +
                         " transitions, buffer has " + std::to_string(buffer.size()));
  }
  auto returns = discounted_returns(buffer, config_.gamma);
  if (config_.normalize_returns && returns.size() > 1) {
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double var = 0.0;
    for (double r : returns) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / static_cast<double>(returns.size()));
    for (double& r : returns) r = (r - mean) / (sd + 1e-8);
  }

  UpdateStats stats;
  LossTerms last_finite;
  const auto batch = buffer.transitions();
  std::vector<double> adv(returns.size());
  try {
    for (std::size_t k = 0; k < config_.epochs; ++k) {
      // Advantages use the current value estimate and are held constant.
      for (std::size_t t = 0; t < batch.size(); ++t) {
        adv[t] = returns[t] - current_.value(batch[t].state);
      }
      auto g = ppo_gradient(current_, batch, returns, adv, config_);
      EpochStats es;
      es.loss = g.loss;
      es.grad_norm = config_.grad_clip > 0.0
                         ? nn::clip_grad_norm(g.grads, config_.grad_clip)
                         : nn::clip_grad_norm(g.grads, std::numeric_limits<double>::infinity());
      require_finite(es.grad_norm, "gradient norm");
      const std::size_t nt = current_.trunk().parameters().size();
      const std::size_t np = current_.policy_head().parameters().size();
      std::span<const nn::Tensor> all(g.grads);
      nn::adam_step(current_.mutable_trunk().mutable_parameters(), all.subspan(0, nt), optim_[0]);
      nn::adam_step(current_.mutable_policy_head().mutable_parameters(), all.subspan(nt, np),
                    optim_[1]);
      nn::adam_step(current_.mutable_value_head().mutable_parameters(), all.subspan(nt + np),
                    optim_[2]);
      stats.epochs.push_back(es);
      last_finite = es.loss;
    }
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + " (last finite " + stats_string(last_finite) +
                          ")");
  }
  old_ = current_;
  buffer.clear();
  return stats;
}

TrainResult train(Environment& env, PpoAgent& agent, std::size_t episodes, std::size_t max_steps) {
  TrainResult result;
  TrajectoryBuffer buffer;
  std::mt19937_64 rng(agent.config().seed ^ 0x5DEECE66DULL);
  const std::size_t u = agent.config().update_timestep;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    EpisodeLog log;
    log.episode = ep;
    auto state = env.reset();
    for (std::size_t s = 0; s < max_steps; ++s) {
      const auto sample = agent.act(state.observation, rng);
      auto step = env.step(sample.action);
      buffer.push({std::move(state.observation), sample.action, sample.log_prob, step.reward});
      log.total_return += step.reward;
      ++log.steps;
      if (step.done || s + 1 == max_steps) buffer.end_episode();
      if (buffer.size() == u) result.updates.push_back(agent.update(buffer));
      state = std::move(step.next_state);
      if (step.done) break;
    }
    log.updates_so_far = result.updates.size();
    if (!result.updates.empty()) {
      log.has_loss = true;
      log.last_loss = result.updates.back().epochs.back().loss;
    }
    result.episodes.push_back(log);
  }
  return result;
}

void write_training_log(const std::vector<EpisodeLog>& log, std::ostream& out) {
  out << "episode,return,steps,policy_loss,value_loss,entropy\n";
  for (const auto& e : log) {
    out << e.episode << ',' << format_double(e.total_return) << ',' << e.steps << ',';
    if (e.has_loss) {
      out << format_double(e.last_loss.policy) << ',' << format_double(e.last_loss.value) << ','
          << format_double(e.last_loss.entropy);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

void save_agent(const PpoAgent& agent, const std::string& path,
                const std::map<std::string, std::string>& extra) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write agent checkpoint " + path);
  nn::save_network(agent.policy().trunk(), out);
  nn::save_network(agent.policy().policy_head(), out);
  nn::save_network(agent.policy().value_head(), out);
  if (!out) throw IoError("failed writing agent checkpoint " + path);
  std::ofstream meta(path + ".meta");
  if (!meta) throw IoError("cannot write agent metadata " + path + ".meta");
  meta << "kind=agent\n";
  meta << "observation_size=" << agent.policy().observation_size() << '\n';
  meta << "actions=" << agent.policy().action_count() << '\n';
  agent.config().write(meta);
  for (const auto& [k, v] : extra) meta << k << '=' << v << '\n';
}

PpoAgent load_agent(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open agent checkpoint " + path);
  auto trunk = nn::load_network(in);
  auto policy = nn::load_network(in);
  auto value = nn::load_network(in);
  const auto meta = KeyValueConfig::load(path + ".meta");
  if (meta.get_string("kind", "") != "agent") {
    throw ConfigError(path + ".meta is not agent metadata");
  }
  PpoConfig cfg;
  cfg.apply(meta);
  ActorCritic model(std::move(trunk), std::move(policy), std::move(value));
  if (static_cast<std::size_t>(meta.get_int("observation_size", 0)) != model.observation_size()) {
    throw ConfigError("agent metadata disagrees with the checkpoint input size");
  }
  return PpoAgent(std::move(model), cfg);
}

}  // namespace gafrl
