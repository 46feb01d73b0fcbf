#include "vaxsurge/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "vaxsurge/error.h"

namespace vaxsurge {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (int c = 0; c < kNumCategories; ++c) n += counts[c][c];
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (int g = 0; g < kNumCategories; ++g) {
    for (int p = 0; p < kNumCategories; ++p) counts[g][p] += other.counts[g][p];
  }
  return *this;
}

ConfusionMatrix confusion(std::span<const Category> preds, std::span<const Category> golds) {
  if (preds.size() != golds.size()) {
    throw UsageError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(golds.size()) + " gold labels");
  }
  if (preds.empty()) throw UsageError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) ++cm.counts[index_of(golds[i])][index_of(preds[i])];
  return cm;
}

PrfSummary prf(const ConfusionMatrix& cm) {
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  PrfSummary s;
  const double total = static_cast<double>(cm.total());
  for (int c = 0; c < kNumCategories; ++c) {
    double tp = static_cast<double>(cm.counts[c][c]);
    double predicted = 0.0, support = 0.0;
    for (int k = 0; k < kNumCategories; ++k) {
      predicted += static_cast<double>(cm.counts[k][c]);
      support += static_cast<double>(cm.counts[c][k]);
    }
    ClassScores& cs = s.per_class[c];
    cs.precision = ratio(tp, predicted);
    cs.recall = ratio(tp, support);
    cs.f1 = ratio(2.0 * cs.precision * cs.recall, cs.precision + cs.recall);
    cs.support = static_cast<std::uint64_t>(support);
    s.macro_f1 += cs.f1 / kNumCategories;
    s.weighted_f1 += ratio(support, total) * cs.f1;
  }
  s.accuracy = ratio(static_cast<double>(cm.trace()), total);
  return s;
}

RocCurve roc_points(std::span<const double> scores, std::span<const std::uint8_t> golds) {
  if (scores.size() != golds.size()) throw UsageError("roc_points: length mismatch");
  std::size_t positives = 0;
  for (auto g : golds) positives += g != 0;
  const std::size_t negatives = golds.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("roc_points: both classes must be present (AUC undefined)");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (golds[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
    curve.thresholds.push_back(threshold);
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

EvalReport evaluate_probabilities(const Matrix& proba, std::span<const Category> golds) {
  if (static_cast<std::size_t>(proba.rows()) != golds.size() || proba.cols() != kNumCategories) {
    throw UsageError("evaluate: probability matrix shape does not match the gold labels");
  }
  EvalReport r;
  r.n_examples = golds.size();
  std::vector<Category> preds(golds.size());
  for (std::size_t i = 0; i < golds.size(); ++i) {
    preds[i] = static_cast<Category>(argmax_row(proba, static_cast<Eigen::Index>(i)));
  }
  r.confusion = confusion(preds, golds);
  r.scores = prf(r.confusion);

  std::vector<double> column(golds.size());
  std::vector<std::uint8_t> binary(golds.size());
  for (int c = 0; c < kNumCategories; ++c) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      column[i] = proba(static_cast<Eigen::Index>(i), c);
      binary[i] = index_of(golds[i]) == c;
      positives += binary[i];
    }
    if (positives == 0 || positives == golds.size()) continue;
    r.roc[c] = roc_points(column, binary);
    r.auc[c] = auc(r.roc[c]);
  }
  return r;
}

EvalReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                    const LabeledDataset& testset) {
  if (testset.empty()) throw DataError("evaluate: empty test set");
  std::vector<Encoding> inputs;
  std::vector<Category> golds;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    inputs.push_back(encode(vocab, testset.examples()[i].text, params.config.max_len));
    golds.push_back(testset.label(i));
  }
  return evaluate_probabilities(predict_proba(forward(params, inputs)), golds);
}

std::string report_json(const EvalReport& r) {
  using nlohmann::ordered_json;
  ordered_json classes = ordered_json::array();
  for (int c = 0; c < kNumCategories; ++c) {
    const auto& s = r.scores.per_class[c];
    ordered_json entry = {{"name", category_name(static_cast<Category>(c))},
                          {"precision", s.precision},
                          {"recall", s.recall},
                          {"f1", s.f1},
                          {"support", s.support}};
    entry["auc"] = r.auc[c] ? ordered_json(*r.auc[c]) : ordered_json(nullptr);
    classes.push_back(entry);
  }
  ordered_json doc = {{"n_examples", r.n_examples},
                      {"accuracy", r.scores.accuracy},
                      {"macro_f1", r.scores.macro_f1},
                      {"weighted_f1", r.scores.weighted_f1},
                      {"headline_f1", r.scores.macro_f1},
                      {"classes", classes},
                      {"confusion", {{"axes", "rows=gold,columns=predicted"},
                                     {"counts", r.confusion.counts}}}};
  return doc.dump(2) + "\n";
}

std::string roc_csv(const EvalReport& r) {
  std::string out = "class,threshold,fpr,tpr\n";
  char buf[160];
  for (int c = 0; c < kNumCategories; ++c) {
    const auto& curve = r.roc[c];
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      const double th = curve.thresholds[i];
      char th_buf[40] = "inf";
      if (!std::isinf(th)) std::snprintf(th_buf, sizeof th_buf, "%.12g", th);
      std::snprintf(buf, sizeof buf, "%s,%s,%.12g,%.12g\n",
                    std::string(category_name(static_cast<Category>(c))).c_str(), th_buf,
                    curve.points[i].fpr, curve.points[i].tpr);
      out += buf;
    }
  }
  return out;
}

}  // namespace vaxsurge
