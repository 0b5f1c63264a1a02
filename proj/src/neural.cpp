#include "gafrl/neural.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "gafrl/errors.hpp"
#include "gafrl/market_data.hpp"

namespace gafrl::nn {

namespace {

std::uint64_t next_network_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string shape_string(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " given " +
                         std::to_string(data_.size()) + " values");
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string layer_name(const LayerSpec& layer) {
  return std::visit(overloaded{
                        [](const Conv2d&) { return std::string("conv2d"); },
                        [](const Dense&) { return std::string("dense"); },
                        [](const Relu&) { return std::string("relu"); },
                        [](const MaxPool2x2&) { return std::string("maxpool2x2"); },
                        [](const Flatten&) { return std::string("flatten"); },
                        [](const Softmax&) { return std::string("softmax"); },
                    },
                    layer);
}

// ---------------------------------------------------------------------------
// Layer kernels

namespace {

void conv_forward(const Conv2d& l, const Tensor& in, const Tensor& w, const Tensor& b,
                  Tensor& out) {
  const std::size_t h = in.shape()[1], wd = in.shape()[2], k = l.kernel;
  const std::size_t oh = h - k + 1, ow = wd - k + 1;
  for (std::size_t o = 0; o < l.out_channels; ++o) {
    double* dst = &out[o * oh * ow];
    std::fill(dst, dst + oh * ow, b[o]);
    for (std::size_t c = 0; c < l.in_channels; ++c) {
      const double* src = &in[c * h * wd];
      const double* ker = &w[((o * l.in_channels) + c) * k * k];
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = ker[ky * k + kx];
          for (std::size_t y = 0; y < oh; ++y) {
            const double* row = src + (y + ky) * wd + kx;
            double* orow = dst + y * ow;
            for (std::size_t x = 0; x < ow; ++x) orow[x] += wv * row[x];
          }
        }
      }
    }
  }
}

void conv_backward(const Conv2d& l, const Tensor& in, const Tensor& w,
                   const Tensor& gout, Tensor& gw, Tensor& gb, Tensor& gin) {
  const std::size_t h = in.shape()[1], wd = in.shape()[2], k = l.kernel;
  const std::size_t oh = h - k + 1, ow = wd - k + 1;
  for (std::size_t o = 0; o < l.out_channels; ++o) {
    const double* g = &gout[o * oh * ow];
    double bsum = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) bsum += g[i];
    gb[o] += bsum;
    for (std::size_t c = 0; c < l.in_channels; ++c) {
      const double* src = &in[c * h * wd];
      double* gsrc = &gin[c * h * wd];
      const std::size_t kbase = ((o * l.in_channels) + c) * k * k;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = w[kbase + ky * k + kx];
          double acc = 0.0;
          for (std::size_t y = 0; y < oh; ++y) {
            const double* row = src + (y + ky) * wd + kx;
            double* grow = gsrc + (y + ky) * wd + kx;
            const double* gr = g + y * ow;
            for (std::size_t x = 0; x < ow; ++x) {
              acc += gr[x] * row[x];
              grow[x] += gr[x] * wv;
            }
          }
          gw[kbase + ky * k + kx] += acc;
        }
      }
    }
  }
}

void dense_forward(const Dense& l, const Tensor& in, const Tensor& w, const Tensor& b,
                   Tensor& out) {
  for (std::size_t o = 0; o < l.out; ++o) {
    const double* row = &w[o * l.in];
    double acc = b[o];
    for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void dense_backward(const Dense& l, const Tensor& in, const Tensor& w, const Tensor& gout,
                    Tensor& gw, Tensor& gb, Tensor& gin) {
  for (std::size_t o = 0; o < l.out; ++o) {
    const double g = gout[o];
    gb[o] += g;
    if (g == 0.0) continue;
    const double* row = &w[o * l.in];
    double* grow = &gw[o * l.in];
    for (std::size_t i = 0; i < l.in; ++i) {
      grow[i] += g * in[i];
      gin[i] += g * row[i];
    }
  }
}

void maxpool_forward(const Tensor& in, Tensor& out) {
  const std::size_t c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t base = ch * h * w + 2 * y * w + 2 * x;
        out[ch * oh * ow + y * ow + x] =
            std::max({in[base], in[base + 1], in[base + w], in[base + w + 1]});
      }
    }
  }
}

void maxpool_backward(const Tensor& in, const Tensor& gout, Tensor& gin) {
  const std::size_t c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t base = ch * h * w + 2 * y * w + 2 * x;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (std::size_t idx : cand) {
          if (in[idx] > in[best]) best = idx;
        }
        gin[best] += gout[ch * oh * ow + y * ow + x];
      }
    }
  }
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax of empty vector");
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(std::vector<LayerSpec> layers, Shape input_shape, std::uint64_t seed)
    : layers_(std::move(layers)), input_shape_(std::move(input_shape)), id_(next_network_id()) {
  validate_shapes();
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit(overloaded{
                   [&](const Conv2d& l) {
                     const double fan_in = double(l.in_channels * l.kernel * l.kernel);
                     std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
                     Tensor w({l.out_channels, l.in_channels, l.kernel, l.kernel});
                     for (double& v : w.data()) v = dist(rng);
                     parameters_.push_back(std::move(w));
                     parameters_.emplace_back(Shape{l.out_channels});
                   },
                   [&](const Dense& l) {
                     std::normal_distribution<double> dist(
                         0.0, l.init_gain * std::sqrt(2.0 / double(l.in)));
                     Tensor w({l.out, l.in});
                     for (double& v : w.data()) v = dist(rng);
                     parameters_.push_back(std::move(w));
                     parameters_.emplace_back(Shape{l.out});
                   },
                   [](const auto&) {},
               },
               layers_[i]);
  }
}

Network::Network(std::vector<LayerSpec> layers, Shape input_shape,
                 std::vector<Tensor> parameters)
    : layers_(std::move(layers)),
      input_shape_(std::move(input_shape)),
      parameters_(std::move(parameters)),
      id_(next_network_id()) {
  validate_shapes();
  const auto expected = parameter_shapes();
  if (expected.size() != parameters_.size()) {
    throw DimensionError("network expects " + std::to_string(expected.size()) +
                         " parameter tensors, got " + std::to_string(parameters_.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i] != parameters_[i].shape()) {
      throw DimensionError("parameter " + std::to_string(i) + " has shape " +
                           shape_string(parameters_[i].shape()) + ", expected " +
                           shape_string(expected[i]));
    }
  }
}

Network::Network(const Network& other)
    : layers_(other.layers_),
      input_shape_(other.input_shape_),
      shapes_(other.shapes_),
      param_begin_(other.param_begin_),
      parameters_(other.parameters_),
      id_(next_network_id()),
      generation_(0) {}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    layers_ = other.layers_;
    input_shape_ = other.input_shape_;
    shapes_ = other.shapes_;
    param_begin_ = other.param_begin_;
    parameters_ = other.parameters_;
    ++generation_;
  }
  return *this;
}

void Network::validate_shapes() {
  shapes_.clear();
  param_begin_.clear();
  shapes_.push_back(input_shape_);
  std::size_t params = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Shape& in = shapes_.back();
    const std::string where = "layer " + std::to_string(i) + " (" + layer_name(layers_[i]) + ")";
    auto fail = [&](const std::string& why) {
      throw DimensionError(where + ": " + why + ", input shape " + shape_string(in));
    };
    param_begin_.push_back(params);
    Shape out = std::visit(
        overloaded{
            [&](const Conv2d& l) -> Shape {
              if (in.size() != 3) fail("expects (C, H, W)");
              if (in[0] != l.in_channels) fail("channel mismatch");
              if (l.kernel == 0 || in[1] < l.kernel || in[2] < l.kernel) fail("kernel too large");
              if (l.out_channels == 0) fail("no filters");
              params += 2;
              return {l.out_channels, in[1] - l.kernel + 1, in[2] - l.kernel + 1};
            },
            [&](const Dense& l) -> Shape {
              if (in.size() != 1 || in[0] != l.in) fail("expects a vector of " + std::to_string(l.in));
              if (l.out == 0) fail("zero outputs");
              params += 2;
              return {l.out};
            },
            [&](const Relu&) -> Shape { return in; },
            [&](const MaxPool2x2&) -> Shape {
              if (in.size() != 3 || in[1] < 2 || in[2] < 2) fail("expects (C, H>=2, W>=2)");
              return {in[0], in[1] / 2, in[2] / 2};
            },
            [&](const Flatten&) -> Shape { return {shape_size(in)}; },
            [&](const Softmax&) -> Shape {
              if (in.size() != 1) fail("expects a vector");
              return in;
            },
        },
        layers_[i]);
    shapes_.push_back(std::move(out));
  }
  param_begin_.push_back(params);
}

std::vector<Shape> Network::parameter_shapes() const {
  std::vector<Shape> out;
  for (const auto& layer : layers_) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      out.push_back({c->out_channels, c->in_channels, c->kernel, c->kernel});
      out.push_back({c->out_channels});
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      out.push_back({d->out, d->in});
      out.push_back({d->out});
    }
  }
  return out;
}

std::span<Tensor> Network::mutable_parameters() {
  ++generation_;
  return parameters_;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters_) n += p.size();
  return n;
}

ForwardResult Network::forward(const Tensor& input, std::size_t layer_count) const {
  if (layer_count > layers_.size()) layer_count = layers_.size();
  if (input.shape() != input_shape_) {
    throw DimensionError("network input shape " + shape_string(input.shape()) +
                         " does not match expected " + shape_string(input_shape_));
  }
  ForwardResult r;
  r.cache.network_id = id_;
  r.cache.generation = generation_;
  r.cache.layer_count = layer_count;
  r.cache.activations.reserve(layer_count + 1);
  r.cache.activations.push_back(input);
  for (std::size_t i = 0; i < layer_count; ++i) {
    const Tensor& in = r.cache.activations.back();
    Tensor out(shapes_[i + 1]);
    const std::size_t p = param_begin_[i];
    std::visit(overloaded{
                   [&](const Conv2d& l) {
                     conv_forward(l, in, parameters_[p], parameters_[p + 1], out);
                   },
                   [&](const Dense& l) {
                     dense_forward(l, in, parameters_[p], parameters_[p + 1], out);
                   },
                   [&](const Relu&) {
                     for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
                   },
                   [&](const MaxPool2x2&) { maxpool_forward(in, out); },
                   [&](const Flatten&) {
                     std::copy(in.data().begin(), in.data().end(), out.data().begin());
                   },
                   [&](const Softmax&) { softmax_into(in.data(), out.data()); },
               },
               layers_[i]);
    r.cache.activations.push_back(std::move(out));
  }
  r.output = r.cache.activations.back();
  return r;
}

Tensor Network::predict(const Tensor& input, std::size_t layer_count) const {
  return forward(input, layer_count).output;
}

std::vector<Tensor> Network::zero_gradients() const {
  std::vector<Tensor> g;
  g.reserve(parameters_.size());
  for (const auto& p : parameters_) g.emplace_back(p.shape());
  return g;
}

Tensor Network::backward_accumulate(const ForwardCache& cache, const Tensor& output_grad,
                                    std::span<Tensor> grads) const {
  if (cache.network_id != id_ || cache.generation != generation_) {
    throw LifecycleError("stale forward cache: parameters changed since the forward pass");
  }
  if (cache.activations.size() != cache.layer_count + 1) {
    throw LifecycleError("incomplete forward cache");
  }
  if (grads.size() != parameters_.size()) {
    throw DimensionError("gradient buffer has " + std::to_string(grads.size()) +
                         " tensors, network has " + std::to_string(parameters_.size()));
  }
  if (output_grad.shape() != cache.activations.back().shape()) {
    throw DimensionError("output gradient shape " + shape_string(output_grad.shape()) +
                         " does not match output " +
                         shape_string(cache.activations.back().shape()));
  }
  Tensor g = output_grad;
  for (std::size_t i = cache.layer_count; i-- > 0;) {
    const Tensor& in = cache.activations[i];
    const Tensor& out = cache.activations[i + 1];
    Tensor gin(in.shape());
    const std::size_t p = param_begin_[i];
    std::visit(overloaded{
                   [&](const Conv2d& l) {
                     conv_backward(l, in, parameters_[p], g, grads[p], grads[p + 1], gin);
                   },
                   [&](const Dense& l) {
                     dense_backward(l, in, parameters_[p], g, grads[p], grads[p + 1], gin);
                   },
                   [&](const Relu&) {
                     for (std::size_t j = 0; j < in.size(); ++j) gin[j] = in[j] > 0.0 ? g[j] : 0.0;
                   },
                   [&](const MaxPool2x2&) { maxpool_backward(in, g, gin); },
                   [&](const Flatten&) {
                     std::copy(g.data().begin(), g.data().end(), gin.data().begin());
                   },
                   [&](const Softmax&) {
                     double dot = 0.0;
                     for (std::size_t j = 0; j < out.size(); ++j) dot += g[j] * out[j];
                     for (std::size_t j = 0; j < out.size(); ++j) gin[j] = out[j] * (g[j] - dot);
                   },
               },
               layers_[i]);
    g = std::move(gin);
  }
  return g;
}

BackwardResult Network::backward(const ForwardCache& cache, const Tensor& output_grad) const {
  BackwardResult r;
  r.parameter_grads = zero_gradients();
  r.input_grad = backward_accumulate(cache, output_grad, r.parameter_grads);
  return r;
}

bool Network::operator==(const Network& other) const {
  return input_shape_ == other.input_shape_ && layers_.size() == other.layers_.size() &&
         parameters_ == other.parameters_ &&
         std::equal(layers_.begin(), layers_.end(), other.layers_.begin(),
                    [](const LayerSpec& a, const LayerSpec& b) {
                      return layer_name(a) == layer_name(b);
                    });
}

// ---------------------------------------------------------------------------
// Losses and optimization

CrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1 || logits.size() == 0) {
    throw DimensionError("cross-entropy expects rank-1 logits");
  }
  if (target >= logits.size()) {
    throw DomainError("target class " + std::to_string(target) + " out of range for " +
                      std::to_string(logits.size()) + " logits");
  }
  const auto x = logits.data();
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - m);
  const double log_sum = m + std::log(sum);
  CrossEntropy r;
  r.loss = log_sum - x[target];
  r.logit_grad = Tensor(logits.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.logit_grad[i] = std::exp(x[i] - log_sum) - (i == target ? 1.0 : 0.0);
  }
  return r;
}

OptimState::OptimState(AdamConfig cfg, std::span<const Tensor> params) : config(cfg) {
  for (const auto& p : params) {
    first_moment.emplace_back(p.shape());
    second_moment.emplace_back(p.shape());
  }
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, OptimState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam: parameter and gradient counts differ");
  }
  if (state.first_moment.empty() && !params.empty()) {
    state = OptimState(state.config, params);
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam: optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() ||
        params[i].shape() != state.first_moment[i].shape()) {
      throw DimensionError("adam: shape mismatch for parameter " + std::to_string(i));
    }
    if (!grads[i].all_finite()) {
      throw DivergenceError("adam: non-finite gradient for parameter " + std::to_string(i));
    }
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].data();
    const auto g = grads[i].data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

double clip_grad_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& g : grads) {
      for (double& v : g.data()) v *= s;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kMagic = "gafrl-network";
constexpr int kVersion = 1;

void write_shape(std::ostream& out, const Shape& s) {
  out << s.size();
  for (auto d : s) out << ' ' << d;
}

Shape read_shape(std::istream& in) {
  std::size_t rank = 0;
  if (!(in >> rank) || rank > 8) throw ParseError(0, "bad tensor rank in checkpoint");
  Shape s(rank);
  for (auto& d : s) {
    if (!(in >> d)) throw ParseError(0, "bad tensor dimension in checkpoint");
  }
  return s;
}

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) {
    throw ParseError(0, "checkpoint: expected '" + word + "', got '" + got + "'");
  }
}

}  // namespace

void save_network(const Network& net, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "input ";
  write_shape(out, net.input_shape());
  out << "\nlayers " << net.layers().size() << '\n';
  for (const auto& layer : net.layers()) {
    out << layer_name(layer);
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      out << ' ' << c->in_channels << ' ' << c->out_channels << ' ' << c->kernel;
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      out << ' ' << d->in << ' ' << d->out;
    }
    out << '\n';
  }
  out << "parameters " << net.parameters().size() << '\n';
  for (const auto& p : net.parameters()) {
    write_shape(out, p.shape());
    out << '\n';
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) out << ' ';
      out << format_double(p[i]);
    }
    out << '\n';
  }
  out << "end\n";
}

Network load_network(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) {
    throw ParseError(1, "not a network checkpoint");
  }
  if (version != kVersion) {
    throw ParseError(1, "unsupported checkpoint version " + std::to_string(version));
  }
  expect_word(in, "input");
  Shape input = read_shape(in);
  expect_word(in, "layers");
  std::size_t n = 0;
  in >> n;
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < n; ++i) {
    std::string kind;
    in >> kind;
    if (kind == "conv2d") {
      Conv2d c;
      in >> c.in_channels >> c.out_channels >> c.kernel;
      layers.emplace_back(c);
    } else if (kind == "dense") {
      Dense d;
      in >> d.in >> d.out;
      layers.emplace_back(d);
    } else if (kind == "relu") {
      layers.emplace_back(Relu{});
    } else if (kind == "maxpool2x2") {
      layers.emplace_back(MaxPool2x2{});
    } else if (kind == "flatten") {
      layers.emplace_back(Flatten{});
    } else if (kind == "softmax") {
      layers.emplace_back(Softmax{});
    } else {
      throw ParseError(0, "checkpoint: unknown layer kind '" + kind + "'");
    }
  }
  if (!in) throw ParseError(0, "checkpoint: truncated layer table");
  expect_word(in, "parameters");
  std::size_t m = 0;
  in >> m;
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < m; ++i) {
    Shape s = read_shape(in);
    std::vector<double> data(shape_size(s));
    for (double& v : data) {
      std::string tok;
      if (!(in >> tok)) throw ParseError(0, "checkpoint: truncated tensor data");
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(0, "checkpoint: bad value '" + tok + "'");
      }
    }
    params.emplace_back(std::move(s), std::move(data));
  }
  expect_word(in, "end");
  return Network(std::move(layers), std::move(input), std::move(params));
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  save_network(net, out);
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  return load_network(in);
}

}  // namespace gafrl::nn
