#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vaxsurge/corpus.h"
#include "vaxsurge/encoder.h"
#include "vaxsurge/tokenizer.h"

namespace vaxsurge {

using ClassWeights = std::array<double, kNumCategories>;

// Defaults: Adam, lr 5e-6, 25 epochs, batch 16.
struct TrainConfig {
  double learning_rate = 5e-6;
  int epochs = 25;
  int batch_size = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t dropout_seed = 0;
  std::optional<ClassWeights> class_weights;
  // Update only the pooler and classifier.
  bool head_only = false;

  void validate() const;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t t = 0;

  static AdamState zeros(const EncoderConfig& config);
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
  ModelParams params;

  // "epoch\tmean_loss\ttrain_accuracy" table with a header row.
  std::string table() const;
};

// Mean over rows of -w_y * log softmax(logits)_y.
double cross_entropy(const Matrix& logits, std::span<const Category> labels,
                     const std::optional<ClassWeights>& weights = std::nullopt);

// Exact gradient of cross_entropy(forward(params, batch)) with dropout off.
// Writes the loss to `loss` when given. Throws NumericalError naming the
// first tensor with a non-finite gradient.
ModelParams gradients(const ModelParams& params, std::span<const Encoding> batch,
                      std::span<const Category> labels, const TrainConfig& config,
                      double* loss = nullptr);

// One bias-corrected Adam update without weight decay.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& config);

// True for tensors that head-only training updates.
bool is_head_tensor(std::string_view name);

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains from init_params(model_config, config.init_seed) on split.train.
// Throws NumericalError with the epoch and batch index if the loss stops
// being finite.
TrainTrace train(const DatasetSplit& split, const Vocabulary& vocab,
                 const EncoderConfig& model_config, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

// Same loop from explicit starting parameters and pre-encoded examples.
TrainTrace train_from(ModelParams params, std::span<const Encoding> inputs,
                      std::span<const Category> labels, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

}  // namespace vaxsurge
