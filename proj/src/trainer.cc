#include "vaxsurge/trainer.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "vaxsurge/error.h"
#include "vaxsurge/random.h"

namespace vaxsurge {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be finite and non-negative");
  }
  if (epochs < 1) throw UsageError("epochs must be at least 1");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw UsageError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw UsageError("adam_eps must be positive");
  if (class_weights) {
    for (double w : *class_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("class weights must be finite and >= 0");
    }
  }
}

AdamState AdamState::zeros(const EncoderConfig& config) {
  return AdamState{ModelParams::zeros(config), ModelParams::zeros(config), 0};
}

std::string TrainTrace::table() const {
  std::ostringstream out;
  out << "epoch\tmean_loss\ttrain_accuracy\n";
  char buf[96];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%d\t%.10f\t%.6f\n", e.epoch, e.mean_loss, e.train_accuracy);
    out << buf;
  }
  return out.str();
}

namespace {

double weight_of(const std::optional<ClassWeights>& w, Category c) {
  return w ? (*w)[index_of(c)] : 1.0;
}

// -log softmax(row)_y via a stable log-sum-exp.
double row_nll(const Eigen::RowVectorXd& row, int y) {
  double mx = row.maxCoeff();
  double lse = mx + std::log((row.array() - mx).exp().sum());
  return lse - row(y);
}

Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& row) {
  Eigen::RowVectorXd p = (row.array() - row.maxCoeff()).exp();
  return p / p.sum();
}

void set_zero(ModelParams& p) {
  p.visit([](const std::string&, TensorKind, Matrix& m) { m.setZero(); });
}

}  // namespace

double cross_entropy(const Matrix& logits, std::span<const Category> labels,
                     const std::optional<ClassWeights>& weights) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw NumericalError("cross_entropy: " + std::to_string(logits.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += weight_of(weights, labels[i]) *
             row_nll(logits.row(static_cast<Eigen::Index>(i)), index_of(labels[i]));
  }
  return total / static_cast<double>(labels.size());
}

ModelParams gradients(const ModelParams& params, std::span<const Encoding> batch,
                      std::span<const Category> labels, const TrainConfig& config,
                      double* loss) {
  if (batch.size() != labels.size() || batch.empty()) {
    throw NumericalError("gradients: need one label per batch item and a non-empty batch");
  }
  ModelParams grads = ModelParams::zeros(params.config);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  ForwardOptions eval{false, 0};
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const int y = index_of(labels[b]);
    const double w = weight_of(config.class_weights, labels[b]);
    forward_backward(params, batch[b], eval, b,
                     [&](const Eigen::RowVectorXd& logits) {
                       total += w * row_nll(logits, y);
                       Eigen::RowVectorXd d = softmax_row(logits);
                       d(y) -= 1.0;
                       return Eigen::RowVectorXd(d * (w * inv_b));
                     },
                     grads);
  }
  grads.check_finite("gradients");
  if (loss) *loss = total * inv_b;
  return grads;
}

bool is_head_tensor(std::string_view name) {
  return name.starts_with("pooler.") || name.starts_with("classifier.");
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& config) {
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);

  std::vector<const Matrix*> g_list;
  grads.visit([&](const std::string&, TensorKind, const Matrix& g) { g_list.push_back(&g); });
  std::vector<Matrix*> m_list, v_list;
  state.m.visit([&](const std::string&, TensorKind, Matrix& m) { m_list.push_back(&m); });
  state.v.visit([&](const std::string&, TensorKind, Matrix& v) { v_list.push_back(&v); });

  std::size_t k = 0;
  params.visit([&](const std::string& name, TensorKind, Matrix& theta) {
    const Matrix& g = *g_list[k];
    Matrix& m = *m_list[k];
    Matrix& v = *v_list[k];
    ++k;
    if (g.rows() != theta.rows() || g.cols() != theta.cols()) {
      throw NumericalError("adam_step: gradient shape mismatch for " + name);
    }
    if (config.head_only && !is_head_tensor(name)) return;
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    theta.array() -= config.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + config.adam_eps);
  });
}

TrainTrace train_from(ModelParams params, std::span<const Encoding> inputs,
                      std::span<const Category> labels, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  config.validate();
  if (inputs.empty()) throw DataError("train: empty training set");
  if (inputs.size() != labels.size()) throw DataError("train: inputs and labels differ in length");

  TrainTrace trace;
  AdamState state = AdamState::zeros(params.config);
  ModelParams grads = ModelParams::zeros(params.config);
  std::vector<std::size_t> order(inputs.size());
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.shuffle_seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      ForwardOptions opts{true, mix_seed(config.dropout_seed, step)};
      set_zero(grads);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const int y = index_of(labels[i]);
        const double w = weight_of(config.class_weights, labels[i]);
        forward_backward(params, inputs[i], opts, k - start,
                         [&](const Eigen::RowVectorXd& logits) {
                           batch_loss += w * row_nll(logits, y);
                           Eigen::Index pred;
                           logits.maxCoeff(&pred);
                           if (pred == y) ++correct;
                           Eigen::RowVectorXd d = softmax_row(logits);
                           d(y) -= 1.0;
                           return Eigen::RowVectorXd(d * (w * inv_b));
                         },
                         grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_no));
      }
      grads.check_finite("train: epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch_no));
      adam_step(params, grads, state, config);
      loss_sum += batch_loss;
      ++step;
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()),
                     static_cast<double>(correct) / static_cast<double>(order.size())};
    trace.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  trace.params = std::move(params);
  return trace;
}

TrainTrace train(const DatasetSplit& split, const Vocabulary& vocab,
                 const EncoderConfig& model_config, const TrainConfig& config,
                 const EpochCallback& on_epoch) {
  if (split.train.empty()) throw DataError("train: empty training set");
  if (static_cast<std::size_t>(model_config.vocab_size) != vocab.size()) {
    throw UsageError("train: model vocab_size " + std::to_string(model_config.vocab_size) +
                     " differs from vocabulary size " + std::to_string(vocab.size()));
  }
  std::vector<Encoding> inputs;
  std::vector<Category> labels;
  inputs.reserve(split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    inputs.push_back(encode(vocab, split.train.examples()[i].text, model_config.max_len));
    labels.push_back(split.train.label(i));
  }
  return train_from(init_params(model_config, config.init_seed), inputs, labels, config, on_epoch);
}

}  // namespace vaxsurge
