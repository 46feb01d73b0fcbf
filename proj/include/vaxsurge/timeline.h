#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vaxsurge/category.h"
#include "vaxsurge/checkpoint.h"
#include "vaxsurge/corpus.h"
#include "vaxsurge/tokenizer.h"

namespace vaxsurge {

struct ClassifiedTweet {
  std::string id;
  Instant created_at;
  Category predicted = Category::kNews;
  std::array<double, kNumCategories> proba{};

  friend bool operator==(const ClassifiedTweet&, const ClassifiedTweet&) = default;
};

struct ClassifyOptions {
  std::size_t batch_size = 256;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

// Inference-mode classification; output order matches input order and does
// not depend on batch size or thread count.
std::vector<ClassifiedTweet> classify_tweets(const ModelParams& params, const Vocabulary& vocab,
                                             std::span<const Tweet> tweets,
                                             const ClassifyOptions& options = {});

// As above, after checking that the checkpoint was trained with `vocab`.
// Throws DataError on a vocabulary hash mismatch.
std::vector<ClassifiedTweet> classify_corpus(const Checkpoint& checkpoint,
                                             const Vocabulary& vocab,
                                             std::span<const Tweet> tweets,
                                             const ClassifyOptions& options = {});

// One record per line: id, created_at, predicted, proba[4].
std::string classified_jsonl(std::span<const ClassifiedTweet> items);
std::vector<ClassifiedTweet> parse_classified_jsonl(std::string_view content);

struct DailyBin {
  Date date;
  std::array<std::uint64_t, kNumCategories> counts{};
  std::uint64_t total = 0;
};

struct TimelineSeries {
  std::vector<DailyBin> bins;  // consecutive days, gaps zero-filled
  int utc_offset_minutes = 0;
};

inline constexpr int kDefaultUtcOffsetMinutes = 180;

// Bins by calendar day of created_at + offset. Throws DataError on empty input.
TimelineSeries aggregate_daily(std::span<const ClassifiedTweet> classified,
                               int utc_offset_minutes = kDefaultUtcOffsetMinutes);

struct DailyShare {
  double percent = 0.0;
  bool empty = false;  // the day had no tweets
};

std::vector<DailyShare> share(const TimelineSeries& series, Category category);

// Centered moving average over an odd window, averaging the non-empty days
// that fall inside it; empty days stay empty. Window 1 returns the input.
std::vector<DailyShare> smooth(std::span<const DailyShare> shares, int window);

struct Peak {
  std::size_t index = 0;
  double share = 0.0;
  double prominence = 0.0;
};

struct PeakDetection {
  std::size_t global_max_index = 0;
  double global_max_share = 0.0;
  // No local maximum exists (constant, single-day or all-empty series).
  bool degenerate = false;
  // Sorted by share descending, then by index.
  std::vector<Peak> peaks;
};

inline constexpr double kDefaultMinProminence = 2.0;
inline constexpr std::size_t kDefaultTopK = 5;

// Local maxima are strictly above both neighbours; a plateau counts once at
// its leftmost index when it is above both flanking values, and endpoints
// compare one-sided. Prominence is the height above the highest minimum on a
// path to a strictly higher point, or above the series minimum when no
// higher point exists. Empty days are skipped. The global maximum is always
// kept; other maxima need prominence >= min_prominence.
PeakDetection detect_peaks(std::span<const DailyShare> shares,
                           double min_prominence = kDefaultMinProminence,
                           std::size_t top_k = kDefaultTopK);

struct PeakSettings {
  double min_prominence = kDefaultMinProminence;
  std::size_t top_k = kDefaultTopK;
  int smoothing_window = 1;
};

struct PeakReport {
  Category category = Category::kAntiVaccine;
  PeakSettings settings;
  int utc_offset_minutes = 0;
  Date global_max_date;
  double global_max_share = 0.0;
  bool degenerate = false;
  struct Entry {
    Date date;
    double share;
    double prominence;
  };
  std::vector<Entry> local_maxima;
};

PeakReport find_peaks(const TimelineSeries& series, Category category,
                      const PeakSettings& settings = {});

// JSON document: category, parameters, global maximum and the maxima list.
std::string peak_report_json(const PeakReport& report);

// date,count_news,count_irrelevant,count_anti,count_pro,total,share_anti_pct,empty_flag
std::string timeline_csv(const TimelineSeries& series);

}  // namespace vaxsurge
