#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vaxsurge/category.h"
#include "vaxsurge/corpus.h"
#include "vaxsurge/encoder.h"
#include "vaxsurge/tokenizer.h"

namespace vaxsurge {

// Rows are gold classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumCategories>, kNumCategories> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  // Adds another matrix; used to merge shards.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws UsageError on empty input or a length mismatch.
ConfusionMatrix confusion(std::span<const Category> preds, std::span<const Category> golds);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct PrfSummary {
  std::array<ClassScores, kNumCategories> per_class{};
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
};

// A zero denominator yields 0 for that precision, recall or F1.
PrfSummary prf(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  // thresholds[i] is the score cut producing points[i]; the first is +inf.
  std::vector<double> thresholds;
};

// Step curve from a descending sweep over distinct scores; tied scores move
// together. Throws DataError unless both gold classes are present.
RocCurve roc_points(std::span<const double> scores, std::span<const std::uint8_t> golds);

// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

struct EvalReport {
  std::size_t n_examples = 0;
  ConfusionMatrix confusion;
  PrfSummary scores;
  std::array<RocCurve, kNumCategories> roc;
  // Empty when the class is absent from (or the only class in) the gold set.
  std::array<std::optional<double>, kNumCategories> auc;
};

// Report from class probabilities (n x 4). Predictions are argmax with ties
// to the lowest class id; AUC is one-vs-rest on each probability column.
EvalReport evaluate_probabilities(const Matrix& proba, std::span<const Category> golds);

EvalReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                    const LabeledDataset& testset);

// JSON document. Keys: n_examples, accuracy, macro_f1, weighted_f1,
// headline_f1 (= macro_f1), classes[] {name, precision, recall, f1, support,
// auc}, confusion {axes, counts}.
std::string report_json(const EvalReport& report);

// CSV "class,threshold,fpr,tpr" covering all four curves.
std::string roc_csv(const EvalReport& report);

}  // namespace vaxsurge
