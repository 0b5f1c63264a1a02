#include "gafrl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gafrl/config.hpp"
#include "gafrl/errors.hpp"

namespace gafrl {

PatternClass PatternDistribution::argmax() const {
  const auto it = std::max_element(probabilities.begin(), probabilities.end());
  return static_cast<PatternClass>(it - probabilities.begin());
}

std::vector<nn::LayerSpec> classifier_layers(std::size_t window) {
  if (window < 6) throw DimensionError("classifier needs a window of at least 6");
  const std::size_t after_convs = window - 4;
  const std::size_t pooled = after_convs / 2;
  return {nn::Conv2d{kGafChannels, 16, 3},
          nn::Relu{},
          nn::Conv2d{16, 32, 3},
          nn::Relu{},
          nn::MaxPool2x2{},
          nn::Flatten{},
          nn::Dense{32 * pooled * pooled, 64},
          nn::Relu{},
          nn::Dense{64, kPatternClassCount},
          nn::Softmax{}};
}

ClassifierModel::ClassifierModel(std::size_t window, std::uint64_t seed)
    : net_(classifier_layers(window), {kGafChannels, window, window}, seed),
      window_(window) {
  meta_.seed = seed;
}

ClassifierModel::ClassifierModel(nn::Network net, std::size_t window, TrainingMetadata meta)
    : net_(std::move(net)), window_(window), meta_(meta) {
  if (net_.input_shape() != nn::Shape{kGafChannels, window, window}) {
    throw DimensionError("classifier network input " + nn::shape_string(net_.input_shape()) +
                         " does not match window " + std::to_string(window));
  }
  if (net_.output_shape() != nn::Shape{kPatternClassCount}) {
    throw DimensionError("classifier must output " + std::to_string(kPatternClassCount) +
                         " classes");
  }
}

nn::ForwardResult ClassifierModel::logits(const nn::Tensor& input) const {
  return net_.forward(input, net_.layers().size() - 1);
}

PatternDistribution ClassifierModel::predict(const nn::Tensor& input) const {
  const auto out = net_.predict(input);
  PatternDistribution d;
  std::copy(out.data().begin(), out.data().end(), d.probabilities.begin());
  return d;
}

PatternDistribution ClassifierModel::predict(const GafTensor& x) const {
  if (x.size() != window_) {
    throw DimensionError("GAF window " + std::to_string(x.size()) +
                         " does not match classifier window " + std::to_string(window_));
  }
  return predict(to_input(x));
}

nn::Tensor to_input(const GafTensor& g) {
  return nn::Tensor({kGafChannels, g.size(), g.size()}, g.flatten());
}

std::vector<LabeledTensor> encode_corpus(std::span<const LabeledWindow> windows) {
  std::vector<LabeledTensor> out;
  out.reserve(windows.size());
  for (const auto& lw : windows) out.push_back({to_input(encode_window(lw.window)), lw.label});
  return out;
}

std::uint64_t corpus_hash(std::span<const LabeledTensor> corpus) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& ex : corpus) {
    const int code = pattern_code(ex.label);
    mix(&code, sizeof(code));
    mix(ex.input.data().data(), ex.input.size() * sizeof(double));
  }
  return h;
}

double accuracy(const ClassifierModel& model, std::span<const LabeledTensor> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : data) hits += model.predict(ex.input).argmax() == ex.label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

void per_class_accuracy(const ClassifierModel& model, std::span<const LabeledTensor> data,
                        std::span<const std::size_t> idx,
                        std::array<double, kPatternClassCount>& out) {
  std::array<std::size_t, kPatternClassCount> hits{}, totals{};
  for (std::size_t i : idx) {
    const auto c = static_cast<std::size_t>(data[i].label);
    ++totals[c];
    hits[c] += model.predict(data[i].input).argmax() == data[i].label;
  }
  for (std::size_t c = 0; c < kPatternClassCount; ++c) {
    out[c] = totals[c] ? static_cast<double>(hits[c]) / static_cast<double>(totals[c]) : 0.0;
  }
}

double subset_accuracy(const ClassifierModel& model, std::span<const LabeledTensor> data,
                       std::span<const std::size_t> idx) {
  if (idx.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : idx) hits += model.predict(data[i].input).argmax() == data[i].label;
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

}  // namespace

ClassifierTrainResult train_classifier(std::span<const LabeledTensor> corpus,
                                       const ClassifierConfig& config) {
  if (corpus.empty()) throw CorpusError("empty corpus");
  if (config.batch_size == 0 || config.max_epochs == 0) {
    throw ConfigError("batch size and epochs must be positive");
  }
  const auto window = corpus.front().input.shape().back();
  std::array<std::vector<std::size_t>, kPatternClassCount> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].input.shape() != nn::Shape{kGafChannels, window, window}) {
      throw DimensionError("corpus example " + std::to_string(i) + " has shape " +
                           nn::shape_string(corpus[i].input.shape()));
    }
    by_class[static_cast<std::size_t>(corpus[i].label)].push_back(i);
  }
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  const bool holdout = config.validation_fraction > 0.0;
  const std::size_t min_per_class = holdout ? 2 : 1;
  for (std::size_t c = 0; c < kPatternClassCount; ++c) {
    if (by_class[c].size() < min_per_class) {
      throw CorpusError("class " + std::string(pattern_name(kAllPatternClasses[c])) +
                        " has " + std::to_string(by_class[c].size()) + " examples; at least " +
                        std::to_string(min_per_class) + " required");
    }
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    auto n_val = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(members.size())));
    if (holdout) n_val = std::clamp<std::size_t>(n_val, 1, members.size() - 1);
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + static_cast<long>(n_val));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<long>(n_val), members.end());
  }

  ClassifierModel model(window, config.seed);
  nn::Network& net = model.mutable_network();
  nn::OptimState opt(nn::AdamConfig{config.learning_rate}, net.parameters());

  ClassifierTrainResult result{model, {}, {}};
  nn::Network best = net;
  double best_val = -1.0;
  std::size_t since_best = 0;
  std::size_t epochs_run = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + config.batch_size);
      auto grads = net.zero_gradients();
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = corpus[train_idx[b]];
        const auto fwd = model.logits(ex.input);
        const auto ce = nn::softmax_cross_entropy(fwd.output, static_cast<std::size_t>(ex.label));
        if (!std::isfinite(ce.loss)) {
          throw DivergenceError("non-finite classifier loss in epoch " + std::to_string(epoch));
        }
        loss_sum += ce.loss;
        net.backward_accumulate(fwd.cache, ce.logit_grad, grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) {
        for (double& v : g.data()) v *= inv;
      }
      nn::clip_grad_norm(grads, config.grad_clip);
      try {
        nn::adam_step(net.mutable_parameters(), grads, opt);
      } catch (const DivergenceError&) {
        throw DivergenceError("non-finite classifier gradient in epoch " +
                              std::to_string(epoch));
      }
    }
    ++epochs_run;
    // Without a holdout the training split drives model selection.
    const double val = subset_accuracy(model, corpus, holdout ? val_idx : train_idx);
    result.train_loss_per_epoch.push_back(loss_sum / static_cast<double>(train_idx.size()));
    result.validation_accuracy_per_epoch.push_back(val);
    if (val > best_val) {
      best_val = val;
      best = net;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }

  net = best;
  TrainingMetadata meta;
  meta.epochs_run = epochs_run;
  meta.seed = config.seed;
  meta.corpus_hash = corpus_hash(corpus);
  meta.validation_accuracy = best_val;
  meta.train_accuracy = subset_accuracy(model, corpus, train_idx);
  per_class_accuracy(model, corpus, holdout ? val_idx : train_idx, meta.per_class_accuracy);
  model.set_metadata(meta);
  result.model = model;
  return result;
}

void save_classifier(const ClassifierModel& model, const std::string& path) {
  nn::save_network(model.network(), path);
  std::ofstream meta(path + ".meta");
  if (!meta) throw IoError("cannot write classifier metadata " + path + ".meta");
  const auto& m = model.metadata();
  meta << "kind=classifier\n";
  meta << "window=" << model.window() << '\n';
  meta << "classes=" << kPatternClassCount << '\n';
  meta << "seed=" << m.seed << '\n';
  meta << "epochs=" << m.epochs_run << '\n';
  meta << "corpus_hash=" << m.corpus_hash << '\n';
  meta << "train_accuracy=" << format_double(m.train_accuracy) << '\n';
  meta << "validation_accuracy=" << format_double(m.validation_accuracy) << '\n';
  for (std::size_t c = 0; c < kPatternClassCount; ++c) {
    meta << "accuracy." << pattern_name(kAllPatternClasses[c]) << '='
         << format_double(m.per_class_accuracy[c]) << '\n';
  }
}

ClassifierModel load_classifier(const std::string& path) {
  auto net = nn::load_network(path);
  const auto meta_cfg = KeyValueConfig::load(path + ".meta");
  if (meta_cfg.get_string("kind", "") != "classifier") {
    throw ConfigError(path + ".meta is not classifier metadata");
  }
  const auto window = static_cast<std::size_t>(meta_cfg.get_int("window", 0));
  TrainingMetadata m;
  m.seed = static_cast<std::uint64_t>(meta_cfg.get_int("seed", 0));
  m.epochs_run = static_cast<std::size_t>(meta_cfg.get_int("epochs", 0));
  m.corpus_hash = std::stoull(meta_cfg.get_string("corpus_hash", "0"));
  m.train_accuracy = meta_cfg.get_double("train_accuracy", 0.0);
  m.validation_accuracy = meta_cfg.get_double("validation_accuracy", 0.0);
  for (std::size_t c = 0; c < kPatternClassCount; ++c) {
    m.per_class_accuracy[c] = meta_cfg.get_double(
        "accuracy." + std::string(pattern_name(kAllPatternClasses[c])), 0.0);
  }
  return ClassifierModel(std::move(net), window, m);
}

void write_corpus_csv(std::span<const LabeledWindow> corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus " + path);
  if (corpus.empty()) throw CorpusError("refusing to write an empty corpus");
  const std::size_t w = corpus.front().window.size();
  out << "label";
  for (std::size_t i = 0; i < w; ++i) out << ",o" << i << ",h" << i << ",l" << i << ",c" << i;
  out << '\n';
  for (const auto& lw : corpus) {
    if (lw.window.size() != w) throw CorpusError("corpus windows differ in length");
    out << pattern_code(lw.label);
    for (const auto& c : lw.window.bars()) {
      out << ',' << format_double(c.open) << ',' << format_double(c.high) << ','
          << format_double(c.low) << ',' << format_double(c.close);
    }
    out << '\n';
  }
}

std::vector<LabeledWindow> read_corpus_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "corpus missing header");
  const auto header = split_csv_record(line, 1);
  if (header.empty() || trim(header[0]) != "label" || (header.size() - 1) % 4 != 0) {
    throw ParseError(1, "corpus header must be label followed by OHLC column groups");
  }
  const std::size_t w = (header.size() - 1) / 4;
  std::vector<LabeledWindow> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_record(line, line_no);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong field count");
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string t = trim(f[i]);
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v[i]);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError(line_no, "malformed value '" + f[i] + "'");
      }
    }
    const double code = v[0];
    if (code != std::floor(code)) throw ParseError(line_no, "label must be an integer");
    std::vector<Candle> bars;
    for (std::size_t b = 0; b < w; ++b) {
      Candle c{static_cast<std::int64_t>(b), v[1 + 4 * b], v[2 + 4 * b], v[3 + 4 * b],
               v[4 + 4 * b], 0.0};
      validate_candle(c, "line " + std::to_string(line_no));
      bars.push_back(c);
    }
    out.push_back({Window(std::move(bars), 0), pattern_from_code(static_cast<int>(code))});
  }
  if (out.empty()) throw CorpusError("corpus has no rows");
  return out;
}

}  // namespace gafrl
