#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scope_refine/minic/ast.hpp"

namespace scope_refine::model {

enum class ModelErrorKind {
  InvalidSpec,
  EmptyCorpus,
  LabelOutOfRange,
  EmptyTokenList,
  KTooSmall,
  NonpositiveTemperature,
  ProbesMissing,
  BadModelFile,
};

std::string_view to_string(ModelErrorKind kind);

class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrorKind kind, const std::string& detail);
  ModelErrorKind kind() const { return kind_; }

 private:
  ModelErrorKind kind_;
};

struct ModelSpec {
  std::size_t num_layers = 4;
  std::size_t hidden_dim = 64;
  std::size_t num_classes = 2;
  std::size_t vocab_hash_dim = 2048;
  double dropout_rate = 0.1;

  // Throws ModelError(InvalidSpec): L >= 2, C >= 2, H >= 1, V >= 1, p in [0,1).
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double l2 = 1e-4;
  std::size_t probe_epochs = 30;
  double probe_learning_rate = 0.02;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Lexer tokens of canonical source plus their hashed feature indices:
// every token and every adjacent token pair, each reduced mod V.
struct TokenizedInput {
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> features;
};

// Texts of the lexer tokens of print_source(unit).
std::vector<std::string> source_tokens(const minic::SourceUnit& unit);
TokenizedInput tokenize(const std::vector<std::string>& tokens, std::size_t vocab_hash_dim);
TokenizedInput tokenize(const minic::SourceUnit& unit, std::size_t vocab_hash_dim);

struct ModelOutput {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<std::vector<double>> layer_snapshots;  // L vectors of size H
  std::vector<std::vector<double>> probe_logits;     // L vectors of size C

  std::size_t predicted() const;

  friend bool operator==(const ModelOutput&, const ModelOutput&) = default;
};

struct SubmodelSample {
  std::uint64_t dropout_seed = 0;
  ModelOutput output;

  friend bool operator==(const SubmodelSample&, const SubmodelSample&) = default;
};

struct TrainingExample {
  TokenizedInput input;
  std::size_t label = 0;
};

// Offsets into ModelHandle::params. Blocks are row-major:
// embedding V x H, then per layer W (H x H) and b (H), then head W (C x H)
// and b (C). Probes live in their own vector: per layer W (C x H), b (C).
struct ParamLayout {
  std::size_t embedding = 0;
  std::vector<std::size_t> layer_w;
  std::vector<std::size_t> layer_b;
  std::size_t head_w = 0;
  std::size_t head_b = 0;
  std::size_t total = 0;

  std::vector<std::size_t> probe_w;
  std::vector<std::size_t> probe_b;
  std::size_t probe_total = 0;

  explicit ParamLayout(const ModelSpec& spec);
};

struct ModelHandle {
  ModelSpec spec;
  std::uint64_t train_seed = 0;
  double train_accuracy = 0;
  std::vector<double> params;
  std::vector<double> probes;  // empty until fit_layer_probes

  bool has_probes() const { return !probes.empty(); }

  friend bool operator==(const ModelHandle&, const ModelHandle&) = default;
};

// Seeded initialization without training.
ModelHandle init_surrogate(const ModelSpec& spec, std::uint64_t seed);

// Mean-pooled hashed embedding, L rectified dense layers (each snapshot is a
// layer's activation), linear head. Adam on mean cross-entropy plus L2.
// Deterministic in (corpus order, spec, cfg, seed).
ModelHandle train_surrogate(const std::vector<TrainingExample>& corpus, const ModelSpec& spec,
                            const TrainConfig& cfg, std::uint64_t seed);

// Softmax regression per layer on frozen snapshots, seeded by train_seed.
ModelHandle fit_layer_probes(const ModelHandle& handle, const std::vector<TrainingExample>& corpus,
                             const TrainConfig& cfg = {});

// Dropout off. probe_logits is empty when the handle has no probes.
ModelOutput infer(const ModelHandle& handle, const TokenizedInput& input);

// Sample k in [0, K) runs with dropout_seed = base_seed + k.
std::vector<SubmodelSample> infer_submodels(const ModelHandle& handle, const TokenizedInput& input,
                                            std::size_t k, std::uint64_t base_seed);

// Forward pass with a dropout mask drawn from `dropout_seed` at rate `p`.
ModelOutput infer_with_dropout(const ModelHandle& handle, const TokenizedInput& input, double p,
                               std::uint64_t dropout_seed);

std::vector<double> softmax_with_temperature(const std::vector<double>& logits, double temperature);

// Mean cross-entropy over `batch` plus (l2/2)·|W|² over dense weight
// matrices, and its gradient laid out like ModelHandle::params.
double loss_and_gradient(const ModelHandle& handle, const std::vector<TrainingExample>& batch,
                         double l2, std::vector<double>& gradient);

double accuracy(const ModelHandle& handle, const std::vector<TrainingExample>& corpus);

// Per-layer probe accuracy on the corpus.
std::vector<double> probe_accuracy(const ModelHandle& handle,
                                   const std::vector<TrainingExample>& corpus);

// SRM1 container, little-endian. Throws ModelError(BadModelFile) on read.
std::string serialize(const ModelHandle& handle);
ModelHandle deserialize(const std::string& bytes);
void save_model(const ModelHandle& handle, const std::string& path);
ModelHandle load_model(const std::string& path);

}  // namespace scope_refine::model
