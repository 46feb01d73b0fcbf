#include "vaxsurge/encoder.h"

#include <cmath>
#include <numbers>

#include "vaxsurge/error.h"
#include "vaxsurge/random.h"

namespace vaxsurge {

void EncoderConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("encoder config: ") + what);
  };
  require(vocab_size > Vocabulary::kNumSpecials, "vocab_size must exceed the 4 special tokens");
  require(d_model > 0, "d_model must be positive");
  require(n_layers > 0, "n_layers must be positive");
  require(n_heads > 0, "n_heads must be positive");
  require(d_model % n_heads == 0, "n_heads must divide d_model");
  require(d_ff > 0, "d_ff must be positive");
  require(max_len >= 2, "max_len must be at least 2");
  require(n_classes == kNumCategories, "n_classes must be 4");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
}

ModelParams ModelParams::zeros(const EncoderConfig& c) {
  c.validate();
  ModelParams p;
  p.config = c;
  auto z = [](int r, int k) { return Matrix::Zero(r, k); };
  const int d = c.d_model;
  p.token_emb = z(c.vocab_size, d);
  p.position_emb = z(c.max_len, d);
  p.segment_emb = z(2, d);
  p.emb_ln_g = z(1, d);
  p.emb_ln_b = z(1, d);
  p.layers.resize(static_cast<std::size_t>(c.n_layers));
  for (auto& l : p.layers) {
    l.query_w = l.key_w = l.value_w = l.attn_out_w = z(d, d);
    l.query_b = l.key_b = l.value_b = l.attn_out_b = z(1, d);
    l.attn_ln_g = l.attn_ln_b = l.ff_ln_g = l.ff_ln_b = z(1, d);
    l.ff_in_w = z(d, c.d_ff);
    l.ff_in_b = z(1, c.d_ff);
    l.ff_out_w = z(c.d_ff, d);
    l.ff_out_b = z(1, d);
  }
  p.pooler_w = z(d, d);
  p.pooler_b = z(1, d);
  p.classifier_w = z(c.n_classes, d);
  p.classifier_b = z(1, c.n_classes);
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, TensorKind, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

void ModelParams::check_finite(std::string_view what) const {
  visit([&](const std::string& name, TensorKind, const Matrix& m) {
    if (!m.allFinite()) {
      throw NumericalError(std::string(what) + ": non-finite value in " + name);
    }
  });
}

ModelParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  Rng rng(seed);
  p.visit([&](const std::string&, TensorKind kind, Matrix& m) {
    switch (kind) {
      case TensorKind::kWeight:
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.truncated_normal(kInitStddev);
        break;
      case TensorKind::kGain:
        m.setOnes();
        break;
      case TensorKind::kBias:
        m.setZero();
        break;
    }
  });
  return p;
}

namespace {

struct NormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, NormCache& cache) {
  const auto cols = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.rstd.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mean = x.row(i).sum() / cols;
    double var = (x.row(i).array() - mean).square().sum() / cols;
    double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd(i) = rstd;
    cache.xhat.row(i) = (x.row(i).array() - mean) * rstd;
  }
  Matrix y = cache.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const NormCache& cache, const Matrix& gain,
                           Matrix& dgain, Matrix& dbias) {
  dgain += dy.cwiseProduct(cache.xhat).colwise().sum();
  dbias += dy.colwise().sum();
  const auto cols = static_cast<double>(dy.cols());
  Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    double m1 = dxhat.row(i).sum() / cols;
    double m2 = dxhat.row(i).dot(cache.xhat.row(i)) / cols;
    dx.row(i) = cache.rstd(i) *
                (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2).matrix();
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

// Inverted dropout. An empty mask means identity.
class Dropout {
 public:
  Dropout(const ForwardOptions& options, double rate, std::size_t batch_index)
      : active_(options.train_mode && rate > 0.0),
        rate_(rate),
        rng_(mix_seed(options.dropout_seed, batch_index)) {}

  Matrix mask(Eigen::Index rows, Eigen::Index cols) {
    if (!active_) return {};
    Matrix m(rows, cols);
    const double keep_scale = 1.0 / (1.0 - rate_);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng_.uniform() < rate_ ? 0.0 : keep_scale;
    }
    return m;
  }

 private:
  bool active_;
  double rate_;
  Rng rng_;
};

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

struct LayerTrace {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;       // softmax output per head
  std::vector<Matrix> probs_mask;  // dropout per head
  Matrix context;
  Matrix attn_mask;
  NormCache attn_norm;
  Matrix hidden;  // after the attention block
  Matrix ff_pre;
  Matrix ff_act;
  Matrix ff_mask;
  NormCache ff_norm;
};

struct Trace {
  std::vector<int> ids;
  std::vector<int> positions;
  NormCache emb_norm;
  Matrix emb_mask;
  std::vector<LayerTrace> layers;
  Matrix cls;     // 1 x d
  Matrix pooled;  // 1 x d, before dropout
  Matrix pooled_mask;
  Matrix pooled_out;  // 1 x d, after dropout
};

void validate_encoding(const EncoderConfig& c, const Encoding& e, std::size_t index) {
  auto where = [&] { return "batch item " + std::to_string(index) + ": "; };
  if (static_cast<int>(e.ids.size()) != c.max_len) {
    throw NumericalError(where() + "sequence length " + std::to_string(e.ids.size()) +
                         " does not match max_len " + std::to_string(c.max_len));
  }
  if (e.mask.size() != e.ids.size()) {
    throw NumericalError(where() + "mask length " + std::to_string(e.mask.size()) +
                         " does not match sequence length " + std::to_string(e.ids.size()));
  }
  if (e.mask.empty() || e.mask[0] == 0) throw NumericalError(where() + "position 0 is masked");
  for (TokenId id : e.ids) {
    if (id < 0 || id >= c.vocab_size) {
      throw NumericalError(where() + "token id " + std::to_string(id) +
                           " outside vocab_size " + std::to_string(c.vocab_size));
    }
  }
}

// Only unmasked positions are materialized. With the additive -1e9 mask the
// masked keys get exactly zero attention weight in double precision, and
// masked query rows never reach the [CLS] output, so dropping them is exact.
Eigen::RowVectorXd run_forward(const ModelParams& p, const Encoding& enc,
                               const ForwardOptions& options, std::size_t batch_index,
                               Trace& t) {
  const EncoderConfig& c = p.config;
  Dropout dropout(options, c.dropout_rate, batch_index);

  t.ids.clear();
  t.positions.clear();
  for (std::size_t i = 0; i < enc.ids.size(); ++i) {
    if (enc.mask[i] != 0) {
      t.ids.push_back(enc.ids[i]);
      t.positions.push_back(static_cast<int>(i));
    }
  }
  const auto n = static_cast<Eigen::Index>(t.ids.size());
  const int d = c.d_model;
  const int dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix emb(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    emb.row(i) = p.token_emb.row(t.ids[i]) + p.position_emb.row(t.positions[i]) +
                 p.segment_emb.row(0);
  }
  Matrix h = layer_norm(emb, p.emb_ln_g, p.emb_ln_b, t.emb_norm);
  t.emb_mask = dropout.mask(n, d);
  apply_mask(h, t.emb_mask);

  t.layers.resize(p.layers.size());
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const LayerParams& l = p.layers[li];
    LayerTrace& lt = t.layers[li];
    lt.input = h;
    lt.q = h * l.query_w;
    lt.q.rowwise() += l.query_b.row(0);
    lt.k = h * l.key_w;
    lt.k.rowwise() += l.key_b.row(0);
    lt.v = h * l.value_w;
    lt.v.rowwise() += l.value_b.row(0);

    lt.probs.resize(static_cast<std::size_t>(c.n_heads));
    lt.probs_mask.resize(static_cast<std::size_t>(c.n_heads));
    lt.context.resize(n, d);
    for (int head = 0; head < c.n_heads; ++head) {
      auto qh = lt.q.middleCols(head * dh, dh);
      auto kh = lt.k.middleCols(head * dh, dh);
      auto vh = lt.v.middleCols(head * dh, dh);
      Matrix scores = (qh * kh.transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        double mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      Matrix& probs = lt.probs[static_cast<std::size_t>(head)];
      probs = std::move(scores);
      Matrix& pm = lt.probs_mask[static_cast<std::size_t>(head)];
      pm = dropout.mask(n, n);
      if (pm.size() != 0) {
        lt.context.middleCols(head * dh, dh) = probs.cwiseProduct(pm) * vh;
      } else {
        lt.context.middleCols(head * dh, dh) = probs * vh;
      }
    }
    Matrix attn = lt.context * l.attn_out_w;
    attn.rowwise() += l.attn_out_b.row(0);
    lt.attn_mask = dropout.mask(n, d);
    apply_mask(attn, lt.attn_mask);
    lt.hidden = layer_norm(h + attn, l.attn_ln_g, l.attn_ln_b, lt.attn_norm);

    lt.ff_pre = lt.hidden * l.ff_in_w;
    lt.ff_pre.rowwise() += l.ff_in_b.row(0);
    lt.ff_act = lt.ff_pre.unaryExpr(&gelu);
    Matrix ff = lt.ff_act * l.ff_out_w;
    ff.rowwise() += l.ff_out_b.row(0);
    lt.ff_mask = dropout.mask(n, d);
    apply_mask(ff, lt.ff_mask);
    h = layer_norm(lt.hidden + ff, l.ff_ln_g, l.ff_ln_b, lt.ff_norm);
  }

  t.cls = h.row(0);
  Matrix pre = t.cls * p.pooler_w.transpose() + p.pooler_b;
  t.pooled = pre.array().tanh();
  t.pooled_mask = dropout.mask(1, d);
  t.pooled_out = t.pooled;
  apply_mask(t.pooled_out, t.pooled_mask);
  Matrix logits = t.pooled_out * p.classifier_w.transpose() + p.classifier_b;
  return logits.row(0);
}

void run_backward(const ModelParams& p, const Trace& t, const Eigen::RowVectorXd& dlogits,
                  ModelParams& g) {
  const EncoderConfig& c = p.config;
  const auto n = static_cast<Eigen::Index>(t.ids.size());
  const int d = c.d_model;
  const int dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dl = dlogits;  // 1 x classes
  g.classifier_w += dl.transpose() * t.pooled_out;
  g.classifier_b += dl;
  Matrix dpooled = dl * p.classifier_w;
  apply_mask(dpooled, t.pooled_mask);
  Matrix dpre = dpooled.array() * (1.0 - t.pooled.array().square());
  g.pooler_w += dpre.transpose() * t.cls;
  g.pooler_b += dpre;

  Matrix dh_mat = Matrix::Zero(n, d);
  dh_mat.row(0) = dpre * p.pooler_w;

  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const LayerParams& l = p.layers[li];
    LayerParams& gl = g.layers[li];
    const LayerTrace& lt = t.layers[li];

    Matrix dres2 = layer_norm_backward(dh_mat, lt.ff_norm, l.ff_ln_g, gl.ff_ln_g, gl.ff_ln_b);
    Matrix dff = dres2;
    apply_mask(dff, lt.ff_mask);
    gl.ff_out_w += lt.ff_act.transpose() * dff;
    gl.ff_out_b += dff.colwise().sum();
    Matrix dact = dff * l.ff_out_w.transpose();
    Matrix dpre_ff = dact.cwiseProduct(lt.ff_pre.unaryExpr(&gelu_grad));
    gl.ff_in_w += lt.hidden.transpose() * dpre_ff;
    gl.ff_in_b += dpre_ff.colwise().sum();
    Matrix dhidden = dres2 + dpre_ff * l.ff_in_w.transpose();

    Matrix dres1 =
        layer_norm_backward(dhidden, lt.attn_norm, l.attn_ln_g, gl.attn_ln_g, gl.attn_ln_b);
    Matrix dattn = dres1;
    apply_mask(dattn, lt.attn_mask);
    gl.attn_out_w += lt.context.transpose() * dattn;
    gl.attn_out_b += dattn.colwise().sum();
    Matrix dcontext = dattn * l.attn_out_w.transpose();

    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (int head = 0; head < c.n_heads; ++head) {
      const Matrix& probs = lt.probs[static_cast<std::size_t>(head)];
      const Matrix& pm = lt.probs_mask[static_cast<std::size_t>(head)];
      auto qh = lt.q.middleCols(head * dh, dh);
      auto kh = lt.k.middleCols(head * dh, dh);
      auto vh = lt.v.middleCols(head * dh, dh);
      auto dch = dcontext.middleCols(head * dh, dh);
      Matrix used = pm.size() != 0 ? Matrix(probs.cwiseProduct(pm)) : probs;
      dv.middleCols(head * dh, dh) = used.transpose() * dch;
      Matrix dprobs = dch * vh.transpose();
      apply_mask(dprobs, pm);
      Matrix dscores(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double dot = dprobs.row(i).dot(probs.row(i));
        dscores.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
      }
      dscores *= scale;
      dq.middleCols(head * dh, dh) = dscores * kh;
      dk.middleCols(head * dh, dh) = dscores.transpose() * qh;
    }
    gl.query_w += lt.input.transpose() * dq;
    gl.query_b += dq.colwise().sum();
    gl.key_w += lt.input.transpose() * dk;
    gl.key_b += dk.colwise().sum();
    gl.value_w += lt.input.transpose() * dv;
    gl.value_b += dv.colwise().sum();
    dh_mat = dres1 + dq * l.query_w.transpose() + dk * l.key_w.transpose() +
             dv * l.value_w.transpose();
  }

  apply_mask(dh_mat, t.emb_mask);
  Matrix demb = layer_norm_backward(dh_mat, t.emb_norm, p.emb_ln_g, g.emb_ln_g, g.emb_ln_b);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.token_emb.row(t.ids[i]) += demb.row(i);
    g.position_emb.row(t.positions[i]) += demb.row(i);
  }
  g.segment_emb.row(0) += demb.colwise().sum();
}

}  // namespace

Matrix forward(const ModelParams& params, std::span<const Encoding> batch,
               const ForwardOptions& options) {
  const EncoderConfig& c = params.config;
  Matrix logits(static_cast<Eigen::Index>(batch.size()), c.n_classes);
  Trace trace;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    validate_encoding(c, batch[b], b);
    logits.row(static_cast<Eigen::Index>(b)) = run_forward(params, batch[b], options, b, trace);
  }
  return logits;
}

Eigen::RowVectorXd forward_backward(
    const ModelParams& params, const Encoding& encoding, const ForwardOptions& options,
    std::size_t batch_index,
    const std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)>& dlogits_fn,
    ModelParams& grads) {
  validate_encoding(params.config, encoding, batch_index);
  Trace trace;
  Eigen::RowVectorXd logits = run_forward(params, encoding, options, batch_index, trace);
  Eigen::RowVectorXd dlogits = dlogits_fn(logits);
  if (dlogits.size() != logits.size()) {
    throw NumericalError("forward_backward: dlogits has " + std::to_string(dlogits.size()) +
                         " entries, expected " + std::to_string(logits.size()));
  }
  run_backward(params, trace, dlogits, grads);
  return logits;
}

Matrix predict_proba(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

int argmax_row(const Matrix& m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace vaxsurge
