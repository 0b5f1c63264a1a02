#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gafrl/gaf.hpp"
#include "gafrl/neural.hpp"
#include "gafrl/patterns.hpp"

namespace gafrl {

// Softmax output of the GAF-CNN, one probability per PatternClass code.
struct PatternDistribution {
  std::array<double, kPatternClassCount> probabilities{};

  PatternClass argmax() const;
  double operator[](PatternClass c) const {
    return probabilities[static_cast<std::size_t>(c)];
  }
};

struct ClassifierConfig {
  std::size_t max_epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  // Stop when validation accuracy has not improved for this many epochs;
  // 0 disables early stopping.
  std::size_t patience = 5;
  // 0 trains on everything and selects epochs by training accuracy.
  double validation_fraction = 0.2;
  double grad_clip = 5.0;
};

struct TrainingMetadata {
  std::size_t epochs_run = 0;
  std::uint64_t seed = 0;
  std::uint64_t corpus_hash = 0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  std::array<double, kPatternClassCount> per_class_accuracy{};  // validation
};

// Input (4, W, W) -> conv 16@3x3 -> relu -> conv 32@3x3 -> relu -> maxpool
// -> flatten -> dense 64 -> relu -> dense 9 -> softmax.
std::vector<nn::LayerSpec> classifier_layers(std::size_t window);

class ClassifierModel {
 public:
  ClassifierModel(std::size_t window, std::uint64_t seed);
  ClassifierModel(nn::Network net, std::size_t window, TrainingMetadata meta);

  std::size_t window() const { return window_; }
  const nn::Network& network() const { return net_; }
  nn::Network& mutable_network() { return net_; }
  const TrainingMetadata& metadata() const { return meta_; }
  void set_metadata(TrainingMetadata m) { meta_ = m; }

  // Throws DimensionError if the tensor's window differs from the model's.
  PatternDistribution predict(const GafTensor& x) const;
  PatternDistribution predict(const nn::Tensor& input) const;

  // Forward through everything except the final softmax.
  nn::ForwardResult logits(const nn::Tensor& input) const;

 private:
  nn::Network net_;
  std::size_t window_;
  TrainingMetadata meta_;
};

struct LabeledTensor {
  nn::Tensor input;  // (4, W, W) GAF stack
  PatternClass label;
};

nn::Tensor to_input(const GafTensor& g);
std::vector<LabeledTensor> encode_corpus(std::span<const LabeledWindow> windows);

// FNV-1a over labels and input bytes.
std::uint64_t corpus_hash(std::span<const LabeledTensor> corpus);

struct ClassifierTrainResult {
  ClassifierModel model;
  std::vector<double> train_loss_per_epoch;
  std::vector<double> validation_accuracy_per_epoch;
};

// Stratified 80/20 split by seed, mini-batch Adam on cross-entropy, keeps
// the parameters of the best validation epoch. Throws CorpusError if any
// class has fewer than 2 examples (1 without a holdout) and DivergenceError
// on a non-finite loss.
ClassifierTrainResult train_classifier(std::span<const LabeledTensor> corpus,
                                       const ClassifierConfig& config);

double accuracy(const ClassifierModel& model, std::span<const LabeledTensor> data);

// Checkpoint at `path` plus a key=value sidecar at `path + ".meta"`.
void save_classifier(const ClassifierModel& model, const std::string& path);
ClassifierModel load_classifier(const std::string& path);

// Corpus CSV: header "label,o0,h0,l0,c0,...", one labeled window per row.
void write_corpus_csv(std::span<const LabeledWindow> corpus, const std::string& path);
std::vector<LabeledWindow> read_corpus_csv(const std::string& path);

}  // namespace gafrl
