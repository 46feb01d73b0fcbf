#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vaxsurge/category.h"
#include "vaxsurge/tokenizer.h"

namespace vaxsurge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 128;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 512;
  int max_len = kDefaultMaxLen;
  int n_classes = kNumCategories;
  double dropout_rate = 0.1;

  // Throws UsageError naming the offending field.
  void validate() const;
  int head_dim() const { return d_model / n_heads; }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// How a tensor is initialized and which optimizer group it belongs to.
enum class TensorKind { kWeight, kBias, kGain };

struct LayerParams {
  // Row-vector convention: projections map x (1 x in) to x * W (1 x out).
  Matrix query_w, query_b;
  Matrix key_w, key_b;
  Matrix value_w, value_b;
  Matrix attn_out_w, attn_out_b;
  Matrix attn_ln_g, attn_ln_b;
  Matrix ff_in_w, ff_in_b;    // d_model x d_ff
  Matrix ff_out_w, ff_out_b;  // d_ff x d_model
  Matrix ff_ln_g, ff_ln_b;
};

// All learnable tensors. Biases and layer-norm parameters are 1 x n rows.
// The pooler (d x d) and classifier (n_classes x d) are stored out x in.
struct ModelParams {
  EncoderConfig config;
  Matrix token_emb;     // V x d
  Matrix position_emb;  // max_len x d
  Matrix segment_emb;   // 2 x d; only segment 0 is used
  Matrix emb_ln_g, emb_ln_b;
  std::vector<LayerParams> layers;
  Matrix pooler_w, pooler_b;
  Matrix classifier_w, classifier_b;

  // Correctly shaped, all zeros.
  static ModelParams zeros(const EncoderConfig& config);

  // Calls fn(name, kind, tensor) for every tensor in the fixed
  // serialization order.
  template <typename Fn>
  void visit(Fn&& fn);
  template <typename Fn>
  void visit(Fn&& fn) const;

  std::size_t parameter_count() const;
  // Throws NumericalError naming the first tensor with a non-finite entry.
  void check_finite(std::string_view what) const;
};

// Weights ~ N(0, 0.02^2) truncated at 2 sigma; biases 0; layer-norm gains 1.
ModelParams init_params(const EncoderConfig& config, std::uint64_t seed);

inline constexpr double kInitStddev = 0.02;
inline constexpr double kLayerNormEps = 1e-12;
inline constexpr double kMaskValue = -1e9;

struct ForwardOptions {
  bool train_mode = false;
  std::uint64_t dropout_seed = 0;
};

// B x n_classes logits. Throws NumericalError when an encoding's length
// differs from config.max_len or a token id is out of range.
Matrix forward(const ModelParams& params, std::span<const Encoding> batch,
               const ForwardOptions& options = {});

// Row-wise softmax with max subtraction.
Matrix predict_proba(const Matrix& logits);

// Index of the largest entry; ties go to the lowest index.
int argmax_row(const Matrix& m, Eigen::Index row);

// Forward and backward pass for one example. `dlogits_fn` receives the
// example's logits (1 x n_classes) and returns d(loss)/d(logits); the
// parameter gradients are added to `grads`. Uses the dropout stream that
// `forward` uses for batch position `batch_index`. Returns the logits.
Eigen::RowVectorXd forward_backward(
    const ModelParams& params, const Encoding& encoding, const ForwardOptions& options,
    std::size_t batch_index,
    const std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)>& dlogits_fn,
    ModelParams& grads);

// --- implementation details below ---

template <typename Fn>
void ModelParams::visit(Fn&& fn) {
  fn("embeddings.token", TensorKind::kWeight, token_emb);
  fn("embeddings.position", TensorKind::kWeight, position_emb);
  fn("embeddings.segment", TensorKind::kWeight, segment_emb);
  fn("embeddings.norm.gain", TensorKind::kGain, emb_ln_g);
  fn("embeddings.norm.bias", TensorKind::kBias, emb_ln_b);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    fn(p + "attention.query.weight", TensorKind::kWeight, l.query_w);
    fn(p + "attention.query.bias", TensorKind::kBias, l.query_b);
    fn(p + "attention.key.weight", TensorKind::kWeight, l.key_w);
    fn(p + "attention.key.bias", TensorKind::kBias, l.key_b);
    fn(p + "attention.value.weight", TensorKind::kWeight, l.value_w);
    fn(p + "attention.value.bias", TensorKind::kBias, l.value_b);
    fn(p + "attention.output.weight", TensorKind::kWeight, l.attn_out_w);
    fn(p + "attention.output.bias", TensorKind::kBias, l.attn_out_b);
    fn(p + "attention.norm.gain", TensorKind::kGain, l.attn_ln_g);
    fn(p + "attention.norm.bias", TensorKind::kBias, l.attn_ln_b);
    fn(p + "ffn.in.weight", TensorKind::kWeight, l.ff_in_w);
    fn(p + "ffn.in.bias", TensorKind::kBias, l.ff_in_b);
    fn(p + "ffn.out.weight", TensorKind::kWeight, l.ff_out_w);
    fn(p + "ffn.out.bias", TensorKind::kBias, l.ff_out_b);
    fn(p + "ffn.norm.gain", TensorKind::kGain, l.ff_ln_g);
    fn(p + "ffn.norm.bias", TensorKind::kBias, l.ff_ln_b);
  }
  fn("pooler.weight", TensorKind::kWeight, pooler_w);
  fn("pooler.bias", TensorKind::kBias, pooler_b);
  fn("classifier.weight", TensorKind::kWeight, classifier_w);
  fn("classifier.bias", TensorKind::kBias, classifier_b);
}

template <typename Fn>
void ModelParams::visit(Fn&& fn) const {
  const_cast<ModelParams*>(this)->visit(
      [&](const std::string& name, TensorKind kind, Matrix& m) {
        fn(name, kind, static_cast<const Matrix&>(m));
      });
}

}  // namespace vaxsurge
