#include "vaxsurge/figures.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace vaxsurge::figures {

namespace {

constexpr const char* kPalette[kNumCategories] = {"#1f77b4", "#7f7f7f", "#d62728", "#2ca02c"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(double width, double height) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
         << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
         << "\" fill=\"white\"/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view extra = {}) {
    out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
         << "\" height=\"" << num(h) << "\" fill=\"" << fill << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << "/>\n";
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0, std::string_view extra = {}) {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
         << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << num(width) << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << "/>\n";
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "start",
            std::string_view extra = {}) {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
         << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << '>' << escape(s) << "</text>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke,
                double width = 1.5) {
    out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
         << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out_ << ' ';
      out_ << num(pts[i].first) << ',' << num(pts[i].second);
    }
    out_ << "\"/>\n";
  }

  void circle(double cx, double cy, double r, std::string_view fill) {
    out_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
         << "\" fill=\"" << fill << "\"/>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

// Axis frame with y ticks at 0, 1/4, ..., 1 of `y_max`.
void frame(Svg& svg, double x, double y, double w, double h, double y_max,
           std::string_view y_fmt_suffix = {}) {
  svg.rect(x, y, w, h, "none", "stroke=\"black\"");
  for (int i = 0; i <= 4; ++i) {
    double frac = i / 4.0;
    double yy = y + h - frac * h;
    svg.line(x - 4, yy, x, yy, "black");
    char buf[32];
    double v = frac * y_max;
    if (y_max >= 10) {
      std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
      std::snprintf(buf, sizeof buf, "%.2f", v);
    }
    svg.text(x - 6, yy + 4, std::string(buf) + std::string(y_fmt_suffix), "end");
  }
}

double nice_max(double v) {
  if (v <= 0) return 1.0;
  double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * p >= v) return m * p;
  }
  return 10.0 * p;
}

}  // namespace

std::string confusion_heatmap(const ConfusionMatrix& cm) {
  const double cell = 80, left = 120, top = 60;
  Svg svg(left + 4 * cell + 40, top + 4 * cell + 70);
  svg.text(left + 2 * cell, 30, "Confusion matrix", "middle", "font-size=\"16\"");
  std::uint64_t peak = 1;
  for (const auto& row : cm.counts) {
    for (auto v : row) peak = std::max(peak, v);
  }
  for (int g = 0; g < kNumCategories; ++g) {
    for (int p = 0; p < kNumCategories; ++p) {
      const double frac = static_cast<double>(cm.counts[g][p]) / static_cast<double>(peak);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      const double x = left + p * cell, y = top + g * cell;
      svg.rect(x, y, cell, cell, fill, "stroke=\"white\"");
      svg.text(x + cell / 2, y + cell / 2 + 5, std::to_string(cm.counts[g][p]), "middle",
               frac > 0.5 ? "fill=\"white\"" : "fill=\"black\"");
    }
    const auto name = std::string(category_name(static_cast<Category>(g)));
    svg.text(left - 8, top + g * cell + cell / 2 + 4, name, "end");
    svg.text(left + g * cell + cell / 2, top + 4 * cell + 18, name, "middle");
  }
  svg.text(left + 2 * cell, top + 4 * cell + 45, "Predicted label", "middle");
  svg.text(20, top + 2 * cell, "True label", "middle",
           "transform=\"rotate(-90 20 " + num(top + 2 * cell) + ")\"");
  return svg.finish();
}

std::string roc_curves(const EvalReport& report) {
  const double left = 70, top = 50, size = 360;
  Svg svg(left + size + 220, top + size + 60);
  svg.text(left + size / 2, 30, "ROC curves (one-vs-rest)", "middle", "font-size=\"16\"");
  frame(svg, left, top, size, size, 1.0);
  for (int i = 0; i <= 4; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%.2f", i / 4.0);
    svg.text(left + i * size / 4, top + size + 18, buf, "middle");
  }
  svg.line(left, top + size, left + size, top, "#bbbbbb", 1.0, "stroke-dasharray=\"4 4\"");
  svg.text(left + size / 2, top + size + 40, "False positive rate", "middle");
  svg.text(20, top + size / 2, "True positive rate", "middle",
           "transform=\"rotate(-90 20 " + num(top + size / 2) + ")\"");
  for (int c = 0; c < kNumCategories; ++c) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : report.roc[c].points) {
      pts.emplace_back(left + p.fpr * size, top + size - p.tpr * size);
    }
    if (!pts.empty()) svg.polyline(pts, kPalette[c]);
    const double ly = top + 20 + c * 22;
    svg.line(left + size + 20, ly - 4, left + size + 45, ly - 4, kPalette[c], 3.0);
    char label[64];
    if (report.auc[c]) {
      std::snprintf(label, sizeof label, "%s (AUC = %.2f)",
                    std::string(category_name(static_cast<Category>(c))).c_str(), *report.auc[c]);
    } else {
      std::snprintf(label, sizeof label, "%s (AUC n/a)",
                    std::string(category_name(static_cast<Category>(c))).c_str());
    }
    svg.text(left + size + 52, ly, label);
  }
  return svg.finish();
}

std::string prf_bars(const PrfSummary& scores) {
  const double left = 70, top = 50, width = 480, height = 280;
  Svg svg(left + width + 150, top + height + 70);
  svg.text(left + width / 2, 30, "Per-class precision, recall and F1", "middle",
           "font-size=\"16\"");
  frame(svg, left, top, width, height, 1.0);
  const char* names[3] = {"precision", "recall", "f1-score"};
  const char* colors[3] = {"#4c72b0", "#dd8452", "#55a868"};
  const double group = width / kNumCategories;
  const double bar = group / 4.5;
  for (int c = 0; c < kNumCategories; ++c) {
    const auto& s = scores.per_class[c];
    const double values[3] = {s.precision, s.recall, s.f1};
    for (int k = 0; k < 3; ++k) {
      const double x = left + c * group + bar * (0.75 + k);
      const double h = values[k] * height;
      svg.rect(x, top + height - h, bar * 0.9, h, colors[k]);
      svg.text(x + bar * 0.45, top + height - h - 4, num(values[k]), "middle",
               "font-size=\"9\"");
    }
    svg.text(left + c * group + group / 2, top + height + 18,
             std::string(category_name(static_cast<Category>(c))), "middle");
  }
  for (int k = 0; k < 3; ++k) {
    const double ly = top + 20 + k * 22;
    svg.rect(left + width + 20, ly - 10, 14, 14, colors[k]);
    svg.text(left + width + 40, ly + 1, names[k]);
  }
  char footer[96];
  std::snprintf(footer, sizeof footer, "macro F1 = %.3f   weighted F1 = %.3f   accuracy = %.3f",
                scores.macro_f1, scores.weighted_f1, scores.accuracy);
  svg.text(left + width / 2, top + height + 48, footer, "middle");
  return svg.finish();
}

std::string timeline_panels(const TimelineSeries& series, const PeakReport& peaks) {
  const double left = 80, width = 720, panel = 170, gap = 60, top = 50;
  const std::size_t n = series.bins.size();
  Svg svg(left + width + 170, top + 3 * panel + 2 * gap + 70);
  auto x_of = [&](std::size_t i) {
    return n <= 1 ? left + width / 2 : left + width * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto x_labels = [&](double base) {
    const std::size_t step = std::max<std::size_t>(1, (n + 7) / 8);
    for (std::size_t i = 0; i < n; i += step) {
      svg.line(x_of(i), base, x_of(i), base + 4, "black");
      svg.text(x_of(i), base + 17, format_date(series.bins[i].date), "middle", "font-size=\"10\"");
    }
  };

  // (a) volume
  double y0 = top;
  std::uint64_t max_total = 0;
  for (const auto& b : series.bins) max_total = std::max(max_total, b.total);
  const double vmax = nice_max(static_cast<double>(max_total));
  svg.text(left, y0 - 12, "(a) Tweets per day", "start", "font-size=\"14\"");
  frame(svg, left, y0, width, panel, vmax);
  {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      pts.emplace_back(x_of(i), y0 + panel - panel * static_cast<double>(series.bins[i].total) / vmax);
    }
    svg.polyline(pts, "black");
  }
  x_labels(y0 + panel);

  // (b) stacked per-category counts
  y0 += panel + gap;
  svg.text(left, y0 - 12, "(b) Tweets per day by predicted category", "start",
           "font-size=\"14\"");
  frame(svg, left, y0, width, panel, vmax);
  const double bw = std::max(1.0, width / static_cast<double>(std::max<std::size_t>(n, 1)) * 0.8);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (int c = 0; c < kNumCategories; ++c) {
      const double h = panel * static_cast<double>(series.bins[i].counts[c]) / vmax;
      if (h > 0) svg.rect(x_of(i) - bw / 2, y0 + panel - acc - h, bw, h, kPalette[c]);
      acc += h;
    }
  }
  for (int c = 0; c < kNumCategories; ++c) {
    const double ly = y0 + 14 + c * 20;
    svg.rect(left + width + 20, ly - 10, 12, 12, kPalette[c]);
    svg.text(left + width + 38, ly, std::string(category_name(static_cast<Category>(c))));
  }
  x_labels(y0 + panel);

  // (c) share with peaks
  y0 += panel + gap;
  auto shares = share(series, peaks.category);
  auto shown = smooth(shares, peaks.settings.smoothing_window);
  double smax = 0;
  for (const auto& s : shown) smax = std::max(smax, s.percent);
  smax = std::min(100.0, nice_max(std::max(smax, 1.0)));
  std::string title = "(c) " + std::string(category_name(peaks.category)) + " share (%)";
  if (peaks.settings.smoothing_window > 1) {
    title += ", moving average over " + std::to_string(peaks.settings.smoothing_window) + " days";
  }
  svg.text(left, y0 - 12, title, "start", "font-size=\"14\"");
  frame(svg, left, y0, width, panel, smax);
  {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      pts.emplace_back(x_of(i), y0 + panel - panel * shown[i].percent / smax);
    }
    svg.polyline(pts, kPalette[index_of(peaks.category)]);
  }
  for (const auto& e : peaks.local_maxima) {
    const auto i = static_cast<std::size_t>((e.date - series.bins.front().date).count());
    const double px = x_of(i), py = y0 + panel - panel * e.share / smax;
    svg.circle(px, py, 4, "black");
    svg.text(px, py - 8, format_date(e.date), "middle", "font-size=\"10\"");
  }
  x_labels(y0 + panel);
  return svg.finish();
}

}  // namespace vaxsurge::figures
