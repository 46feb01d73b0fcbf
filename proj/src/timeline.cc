#include "vaxsurge/timeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "json.hpp"
#include "vaxsurge/error.h"

namespace vaxsurge {

std::vector<ClassifiedTweet> classify_tweets(const ModelParams& params, const Vocabulary& vocab,
                                             std::span<const Tweet> tweets,
                                             const ClassifyOptions& options) {
  std::vector<ClassifiedTweet> out(tweets.size());
  if (tweets.empty()) return out;
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t n_batches = (tweets.size() + batch - 1) / batch;
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, n_batches));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<Encoding> inputs;
    for (std::size_t b; (b = next.fetch_add(1)) < n_batches;) {
      const std::size_t start = b * batch;
      const std::size_t end = std::min(tweets.size(), start + batch);
      inputs.clear();
      for (std::size_t i = start; i < end; ++i) {
        inputs.push_back(encode(vocab, tweets[i].text, params.config.max_len));
      }
      Matrix proba = predict_proba(forward(params, inputs));
      for (std::size_t i = start; i < end; ++i) {
        const auto row = static_cast<Eigen::Index>(i - start);
        ClassifiedTweet& ct = out[i];
        ct.id = tweets[i].id;
        ct.created_at = tweets[i].created_at;
        ct.predicted = static_cast<Category>(argmax_row(proba, row));
        for (int c = 0; c < kNumCategories; ++c) ct.proba[c] = proba(row, c);
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return out;
}

std::vector<ClassifiedTweet> classify_corpus(const Checkpoint& checkpoint,
                                             const Vocabulary& vocab,
                                             std::span<const Tweet> tweets,
                                             const ClassifyOptions& options) {
  const std::string hash = vocab.sha256();
  if (checkpoint.meta.vocab_sha256 != hash) {
    throw DataError("checkpoint was trained with vocabulary " + checkpoint.meta.vocab_sha256 +
                    " but the supplied vocabulary hashes to " + hash);
  }
  if (static_cast<std::size_t>(checkpoint.params.config.vocab_size) != vocab.size()) {
    throw DataError("checkpoint vocab_size does not match the vocabulary");
  }
  return classify_tweets(checkpoint.params, vocab, tweets, options);
}

std::string classified_jsonl(std::span<const ClassifiedTweet> items) {
  std::string out;
  for (const auto& ct : items) {
    nlohmann::ordered_json obj = {{"id", ct.id},
                                  {"created_at", format_utc(ct.created_at)},
                                  {"predicted", index_of(ct.predicted)},
                                  {"proba", ct.proba}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<ClassifiedTweet> parse_classified_jsonl(std::string_view content) {
  std::vector<ClassifiedTweet> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError("classified record line " + std::to_string(line_no) + ": " + why);
    };
    auto obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw fail("malformed JSON");
    try {
      ClassifiedTweet ct;
      ct.id = obj.at("id").get<std::string>();
      auto t = parse_iso8601(obj.at("created_at").get<std::string>());
      if (!t) throw fail("bad created_at");
      ct.created_at = *t;
      auto c = category_from_index(obj.at("predicted").get<long long>());
      if (!c) throw fail("predicted out of range");
      ct.predicted = *c;
      ct.proba = obj.at("proba").get<std::array<double, kNumCategories>>();
      out.push_back(std::move(ct));
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    }
  }
  return out;
}

TimelineSeries aggregate_daily(std::span<const ClassifiedTweet> classified,
                               int utc_offset_minutes) {
  if (classified.empty()) throw DataError("aggregate_daily: no classified tweets");
  Date first = local_date(classified.front().created_at, utc_offset_minutes);
  Date last = first;
  for (const auto& ct : classified) {
    Date d = local_date(ct.created_at, utc_offset_minutes);
    first = std::min(first, d);
    last = std::max(last, d);
  }
  TimelineSeries s;
  s.utc_offset_minutes = utc_offset_minutes;
  const auto n_days = static_cast<std::size_t>((last - first).count()) + 1;
  s.bins.resize(n_days);
  for (std::size_t i = 0; i < n_days; ++i) s.bins[i].date = first + std::chrono::days(i);
  for (const auto& ct : classified) {
    auto& bin = s.bins[static_cast<std::size_t>(
        (local_date(ct.created_at, utc_offset_minutes) - first).count())];
    ++bin.counts[index_of(ct.predicted)];
    ++bin.total;
  }
  return s;
}

std::vector<DailyShare> share(const TimelineSeries& series, Category category) {
  std::vector<DailyShare> out;
  out.reserve(series.bins.size());
  for (const auto& bin : series.bins) {
    if (bin.total == 0) {
      out.push_back({0.0, true});
    } else {
      out.push_back({100.0 * static_cast<double>(bin.counts[index_of(category)]) /
                         static_cast<double>(bin.total),
                     false});
    }
  }
  return out;
}

std::vector<DailyShare> smooth(std::span<const DailyShare> shares, int window) {
  if (window < 1 || window % 2 == 0) throw UsageError("smoothing window must be a positive odd number");
  std::vector<DailyShare> out(shares.begin(), shares.end());
  if (window == 1) return out;
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto n = static_cast<std::ptrdiff_t>(shares.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    // A day without tweets stays empty; smoothing never invents a share.
    if (shares[static_cast<std::size_t>(i)].empty) continue;
    double sum = 0.0;
    int count = 0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half);
         j <= std::min(n - 1, i + half); ++j) {
      if (!shares[static_cast<std::size_t>(j)].empty) {
        sum += shares[static_cast<std::size_t>(j)].percent;
        ++count;
      }
    }
    out[static_cast<std::size_t>(i)] = DailyShare{sum / count, false};
  }
  return out;
}

PeakDetection detect_peaks(std::span<const DailyShare> shares, double min_prominence,
                           std::size_t top_k) {
  std::vector<std::size_t> where;
  std::vector<double> v;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (!shares[i].empty) {
      where.push_back(i);
      v.push_back(shares[i].percent);
    }
  }
  PeakDetection result;
  if (v.empty()) {
    result.degenerate = true;
    return result;
  }
  const std::size_t n = v.size();
  const auto max_it = std::max_element(v.begin(), v.end());
  const double lowest = *std::min_element(v.begin(), v.end());
  result.global_max_index = where[static_cast<std::size_t>(max_it - v.begin())];
  result.global_max_share = *max_it;

  std::vector<Peak> found;
  for (std::size_t j = 0; j < n;) {
    std::size_t k = j;
    while (k + 1 < n && v[k + 1] == v[j]) ++k;
    const bool has_left = j > 0, has_right = k + 1 < n;
    const bool is_max = (has_left || has_right) && (!has_left || v[j - 1] < v[j]) &&
                        (!has_right || v[k + 1] < v[j]);
    if (is_max) {
      const double h = v[j];
      bool left_ok = false, right_ok = false;
      double left_min = h, right_min = h;
      for (std::size_t i = j; i-- > 0;) {
        if (v[i] > h) {
          left_ok = true;
          break;
        }
        left_min = std::min(left_min, v[i]);
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        if (v[i] > h) {
          right_ok = true;
          break;
        }
        right_min = std::min(right_min, v[i]);
      }
      double saddle = lowest;
      if (left_ok && right_ok) {
        saddle = std::max(left_min, right_min);
      } else if (left_ok) {
        saddle = left_min;
      } else if (right_ok) {
        saddle = right_min;
      }
      const double prominence = h - saddle;
      const bool is_global = where[j] == result.global_max_index;
      if (is_global || prominence >= min_prominence) found.push_back({where[j], h, prominence});
    }
    j = k + 1;
  }
  result.degenerate = found.empty();
  std::stable_sort(found.begin(), found.end(), [](const Peak& a, const Peak& b) {
    return a.share > b.share || (a.share == b.share && a.index < b.index);
  });
  if (found.size() > top_k) found.resize(top_k);
  result.peaks = std::move(found);
  return result;
}

PeakReport find_peaks(const TimelineSeries& series, Category category,
                      const PeakSettings& settings) {
  if (series.bins.empty()) throw DataError("find_peaks: empty series");
  auto shares = smooth(share(series, category), settings.smoothing_window);
  PeakDetection det = detect_peaks(shares, settings.min_prominence, settings.top_k);
  PeakReport r;
  r.category = category;
  r.settings = settings;
  r.utc_offset_minutes = series.utc_offset_minutes;
  r.global_max_date = series.bins[det.global_max_index].date;
  r.global_max_share = det.global_max_share;
  r.degenerate = det.degenerate;
  for (const Peak& p : det.peaks) {
    r.local_maxima.push_back({series.bins[p.index].date, p.share, p.prominence});
  }
  return r;
}

std::string peak_report_json(const PeakReport& r) {
  using nlohmann::ordered_json;
  ordered_json maxima = ordered_json::array();
  for (const auto& e : r.local_maxima) {
    maxima.push_back({{"date", format_date(e.date)},
                      {"share_pct", e.share},
                      {"prominence_pct", e.prominence}});
  }
  ordered_json doc = {
      {"category", category_name(r.category)},
      {"parameters",
       {{"min_prominence_pct", r.settings.min_prominence},
        {"top_k", r.settings.top_k},
        {"smoothing_window", r.settings.smoothing_window},
        {"smoothed", r.settings.smoothing_window > 1},
        {"utc_offset_minutes", r.utc_offset_minutes}}},
      {"global_max_date", format_date(r.global_max_date)},
      {"global_max_share_pct", r.global_max_share},
      {"degenerate", r.degenerate},
      {"local_maxima", maxima}};
  return doc.dump(2) + "\n";
}

std::string timeline_csv(const TimelineSeries& series) {
  std::string out =
      "date,count_news,count_irrelevant,count_anti,count_pro,total,share_anti_pct,empty_flag\n";
  auto shares = share(series, Category::kAntiVaccine);
  char buf[192];
  for (std::size_t i = 0; i < series.bins.size(); ++i) {
    const auto& b = series.bins[i];
    std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%llu,%llu,%llu,%.6f,%d\n",
                  format_date(b.date).c_str(), static_cast<unsigned long long>(b.counts[0]),
                  static_cast<unsigned long long>(b.counts[1]),
                  static_cast<unsigned long long>(b.counts[2]),
                  static_cast<unsigned long long>(b.counts[3]),
                  static_cast<unsigned long long>(b.total), shares[i].percent,
                  shares[i].empty ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace vaxsurge
