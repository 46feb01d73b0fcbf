#pragma once

#include <string>

#include "vaxsurge/metrics.h"
#include "vaxsurge/timeline.h"

namespace vaxsurge::figures {

// Self-contained SVG documents. Output depends only on the inputs, so
// re-running a command reproduces the files byte for byte.

// 4x4 heatmap, rows gold and columns predicted, counts printed in cells.
std::string confusion_heatmap(const ConfusionMatrix& cm);

// All four one-vs-rest curves on one axis with AUC values in the legend.
std::string roc_curves(const EvalReport& report);

// Grouped precision / recall / F1 bars per class.
std::string prf_bars(const PrfSummary& scores);

// Three stacked panels: (a) daily volume, (b) stacked per-category counts,
// (c) share of `peaks.category` in percent with detected peak dates marked.
std::string timeline_panels(const TimelineSeries& series, const PeakReport& peaks);

}  // namespace vaxsurge::figures
