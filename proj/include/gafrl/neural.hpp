#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gafrl::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& s);
std::size_t shape_size(const Shape& s);

// Dense row-major buffer of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Valid (unpadded) stride-1 convolution on (C, H, W) inputs.
// Parameters: weight (out, in, k, k), bias (out).
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
};

// Parameters: weight (out, in), bias (out). init_gain scales the He init.
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  double init_gain = 1.0;
};

struct Relu {};
// 2x2 window, stride 2, on (C, H, W); odd trailing rows/columns are dropped.
struct MaxPool2x2 {};
struct Flatten {};
// Over a rank-1 input.
struct Softmax {};

using LayerSpec = std::variant<Conv2d, Dense, Relu, MaxPool2x2, Flatten, Softmax>;

std::string layer_name(const LayerSpec& layer);

// Activations recorded by a forward pass, tagged with the network instance
// and parameter generation that produced them.
struct ForwardCache {
  std::vector<Tensor> activations;  // input, then each evaluated layer's output
  std::uint64_t network_id = 0;
  std::uint64_t generation = 0;
  std::size_t layer_count = 0;
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

struct BackwardResult {
  std::vector<Tensor> parameter_grads;  // one per parameter tensor
  Tensor input_grad;
};

// A sequential stack of layers with owned parameters. Copies are
// independent networks with equal parameters.
class Network {
 public:
  // He-normal initialization (std = gain * sqrt(2 / fan_in)), zero biases.
  Network(std::vector<LayerSpec> layers, Shape input_shape, std::uint64_t seed);
  Network(std::vector<LayerSpec> layers, Shape input_shape,
          std::vector<Tensor> parameters);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape& input_shape() const { return input_shape_; }
  // Output shape after `layer_count` layers (default: all).
  const Shape& output_shape() const { return shapes_.back(); }
  const Shape& shape_after(std::size_t layer_count) const { return shapes_.at(layer_count); }

  std::span<const Tensor> parameters() const { return parameters_; }
  // Any mutable access invalidates outstanding forward caches.
  std::span<Tensor> mutable_parameters();
  std::size_t parameter_count() const;

  // Evaluates the first `layer_count` layers (all by default).
  ForwardResult forward(const Tensor& input, std::size_t layer_count = SIZE_MAX) const;
  Tensor predict(const Tensor& input, std::size_t layer_count = SIZE_MAX) const;

  // Gradients of a scalar loss w.r.t. every parameter and the input, given
  // dL/d(output). Throws LifecycleError if parameters changed since `cache`
  // was produced or it came from another network.
  BackwardResult backward(const ForwardCache& cache, const Tensor& output_grad) const;

  // Same as backward but adds parameter gradients into `grads`.
  Tensor backward_accumulate(const ForwardCache& cache, const Tensor& output_grad,
                             std::span<Tensor> grads) const;

  std::vector<Tensor> zero_gradients() const;

  bool operator==(const Network& other) const;

 private:
  void validate_shapes();
  std::vector<Shape> parameter_shapes() const;

  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  std::vector<Shape> shapes_;             // shapes_[i] = input shape of layer i
  std::vector<std::size_t> param_begin_;  // first parameter index per layer
  std::vector<Tensor> parameters_;
  std::uint64_t id_ = 0;
  std::uint64_t generation_ = 0;
};

// Numerically stable cross-entropy on rank-1 logits. The gradient is
// softmax(logits) - one_hot(target).
struct CrossEntropy {
  double loss = 0.0;
  Tensor logit_grad;
};
CrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t target);

std::vector<double> softmax(std::span<const double> logits);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  OptimState() = default;
  OptimState(AdamConfig cfg, std::span<const Tensor> params);
};

// Bias-corrected Adam. Throws DivergenceError if any gradient is non-finite
// (parameters and state are left untouched in that case).
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               OptimState& state);

// Rescales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::span<Tensor> grads, double max_norm);

// Versioned text checkpoint; values use shortest round-trip decimals so a
// save/load cycle is exact.
void save_network(const Network& net, std::ostream& out);
Network load_network(std::istream& in);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace gafrl::nn
