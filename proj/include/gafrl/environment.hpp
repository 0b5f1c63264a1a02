#pragma once

#include <cstddef>
#include <vector>

namespace gafrl {

struct EnvState {
  std::vector<double> observation;
  std::size_t step_index = 0;
};

struct StepResult {
  EnvState next_state;
  double reward = 0.0;
  bool done = false;
};

// Episodic environment with a discrete action set, as consumed by the PPO
// trainer. One instance is single-threaded.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t observation_size() const = 0;
  virtual std::size_t action_count() const = 0;

  virtual EnvState reset() = 0;
  // Throws LifecycleError when called before reset() or after done.
  virtual StepResult step(std::size_t action) = 0;
};

}  // namespace gafrl
