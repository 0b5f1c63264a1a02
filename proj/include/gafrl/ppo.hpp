#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gafrl/environment.hpp"
#include "gafrl/neural.hpp"

namespace gafrl {

class KeyValueConfig;

struct PpoConfig {
  double gamma = 0.99;
  double clip = 0.2;
  std::size_t epochs = 4;             // gradient steps per update
  std::size_t update_timestep = 2048; // transitions per update
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 3e-4;
  std::uint64_t seed = 0;
  // Standardize returns per update batch before computing advantages.
  bool normalize_returns = true;
  // Global L2 bound on the gradient of each step; 0 disables.
  double grad_clip = 0.5;
  std::size_t hidden = 64;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  // Reads ppo.* keys; missing keys keep their current value.
  void apply(const KeyValueConfig& cfg);
  void write(std::ostream& out) const;
};

// Trunk (dense hidden + relu, twice) shared by a 3-logit action head and a
// scalar value head.
class ActorCritic {
 public:
  ActorCritic(std::size_t observation_size, std::size_t action_count, std::size_t hidden,
              std::uint64_t seed);
  ActorCritic(nn::Network trunk, nn::Network policy_head, nn::Network value_head);

  struct Pass {
    nn::ForwardResult trunk;
    nn::ForwardResult policy;
    nn::ForwardResult value;
    std::vector<double> probabilities;

    std::span<const double> logits() const { return policy.output.data(); }
    double value_estimate() const { return value.output[0]; }
  };

  std::size_t observation_size() const { return trunk_.input_shape()[0]; }
  std::size_t action_count() const { return policy_.output_shape()[0]; }

  Pass forward(std::span<const double> observation) const;
  std::vector<double> probabilities(std::span<const double> observation) const;
  double value(std::span<const double> observation) const;

  // Adds the gradients of a loss with the given dL/dlogits and dL/dV into
  // `grads` (layout of zero_gradients()); returns dL/dobservation.
  nn::Tensor backward(const Pass& pass, std::span<const double> logit_grad, double value_grad,
                      std::span<nn::Tensor> grads) const;

  // Trunk parameters, then action head, then value head.
  std::vector<nn::Tensor> zero_gradients() const;
  std::vector<const nn::Tensor*> parameters() const;
  std::vector<nn::Tensor*> mutable_parameters();
  std::size_t parameter_count() const;

  const nn::Network& trunk() const { return trunk_; }
  const nn::Network& policy_head() const { return policy_; }
  const nn::Network& value_head() const { return value_; }
  nn::Network& mutable_trunk() { return trunk_; }
  nn::Network& mutable_policy_head() { return policy_; }
  nn::Network& mutable_value_head() { return value_; }

  bool operator==(const ActorCritic&) const = default;

 private:
  nn::Network trunk_;
  nn::Network policy_;
  nn::Network value_;
};

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double log_prob_old = 0.0;
  double reward = 0.0;
};

// Rollout storage. An episode boundary is recorded after its last
// transition; returns never flow across a boundary or past the end.
class TrajectoryBuffer {
 public:
  void push(Transition t);
  void end_episode();
  void clear();

  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }
  const Transition& operator[](std::size_t i) const { return transitions_[i]; }
  std::span<const Transition> transitions() const { return transitions_; }
  bool ends_episode(std::size_t i) const { return episode_end_[i]; }

 private:
  std::vector<Transition> transitions_;
  std::vector<bool> episode_end_;
};

// R_t = r_t + gamma * R_{t+1}, restarted at every episode boundary.
std::vector<double> discounted_returns(const TrajectoryBuffer& buffer, double gamma);

struct PolicyEvaluation {
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> entropies;
};

PolicyEvaluation evaluate(const ActorCritic& model, std::span<const Transition> batch);

struct LossTerms {
  double policy = 0.0;   // mean(-min(surr1, surr2))
  double value = 0.0;    // mean((V - R)^2), before the coefficient
  double entropy = 0.0;  // mean(H)
  double total = 0.0;
};

// Clipped surrogate objective with explicit advantages. Throws
// DivergenceError naming the first non-finite component.
LossTerms ppo_objective(std::span<const double> log_probs, std::span<const double> log_probs_old,
                        std::span<const double> advantages, std::span<const double> values,
                        std::span<const double> returns, std::span<const double> entropies,
                        const PpoConfig& config);

// Same objective with advantages R - V.
LossTerms ppo_loss(std::span<const double> log_probs, std::span<const double> log_probs_old,
                   std::span<const double> returns, std::span<const double> values,
                   std::span<const double> entropies, const PpoConfig& config);

// Loss and parameter gradients for one batch at fixed advantages.
struct LossGradient {
  LossTerms loss;
  std::vector<nn::Tensor> grads;
};
LossGradient ppo_gradient(const ActorCritic& model, std::span<const Transition> batch,
                          std::span<const double> returns, std::span<const double> advantages,
                          const PpoConfig& config);

struct EpochStats {
  LossTerms loss;
  double grad_norm = 0.0;
};

struct UpdateStats {
  std::vector<EpochStats> epochs;
};

class PpoAgent {
 public:
  PpoAgent(std::size_t observation_size, std::size_t action_count, PpoConfig config);
  PpoAgent(ActorCritic model, PpoConfig config);

  const PpoConfig& config() const { return config_; }
  const ActorCritic& policy() const { return current_; }
  const ActorCritic& old_policy() const { return old_; }
  ActorCritic& mutable_policy() { return current_; }

  struct Sample {
    std::size_t action = 0;
    double log_prob = 0.0;
  };
  // Categorical draw from the rollout (old) policy.
  Sample act(std::span<const double> observation, std::mt19937_64& rng) const;
  // Argmax of the current policy; ties go to the lowest action index.
  std::size_t act_greedy(std::span<const double> observation) const;

  // K steps on the buffer, then old <- current and the buffer is cleared.
  // Requires buffer.size() == update_timestep.
  UpdateStats update(TrajectoryBuffer& buffer);

 private:
  PpoConfig config_;
  ActorCritic current_;
  ActorCritic old_;
  std::vector<nn::OptimState> optim_;  // trunk, action head, value head
};

struct EpisodeLog {
  std::size_t episode = 0;
  double total_return = 0.0;
  std::size_t steps = 0;
  std::size_t updates_so_far = 0;
  bool has_loss = false;  // false until the first update
  LossTerms last_loss;
};

struct TrainResult {
  std::vector<EpisodeLog> episodes;
  std::vector<UpdateStats> updates;
};

// M episodes of at most S steps each, updating every U timesteps.
TrainResult train(Environment& env, PpoAgent& agent, std::size_t episodes,
                  std::size_t max_steps);

// Header: episode,return,steps,policy_loss,value_loss,entropy
void write_training_log(const std::vector<EpisodeLog>& log, std::ostream& out);

// Network checkpoint at `path` (trunk, action head, value head) and the
// config at `path + ".meta"`, followed by any `extra` key=value lines.
void save_agent(const PpoAgent& agent, const std::string& path,
                const std::map<std::string, std::string>& extra = {});
PpoAgent load_agent(const std::string& path);

// Inverse-CDF draw from a probability vector using a 53-bit uniform.
std::size_t sample_categorical(std::span<const double> probabilities, std::mt19937_64& rng);

}  // namespace gafrl
