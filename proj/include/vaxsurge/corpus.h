#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vaxsurge/category.h"
#include "vaxsurge/timeutil.h"

namespace vaxsurge {

struct Tweet {
  std::string id;
  Instant created_at;
  std::string text;
  std::optional<Category> gold_label;

  friend bool operator==(const Tweet&, const Tweet&) = default;
};

// A line that failed validation. `raw` is the line as read.
struct Reject {
  std::size_t line = 0;
  std::string raw;
  std::string reason;
};

struct IngestResult {
  std::vector<Tweet> tweets;
  std::vector<Reject> rejects;
};

// Reads newline-delimited JSON records (".gz" files are decompressed).
// Canonical fields are id, created_at, text, label; the scraper-style names
// date and content are accepted as aliases. Invalid records are collected in
// `rejects`. Throws UsageError if the file cannot be read and DataError on a
// duplicate id.
IngestResult ingest_jsonl(const std::filesystem::path& path);

// Same rules applied to in-memory content; `source` names it in diagnostics.
IngestResult ingest_jsonl_text(std::string_view content, std::string_view source = "<memory>");

// One canonical record per line: id, created_at (UTC, "Z"), text, and label when present.
std::string to_jsonl(const std::vector<Tweet>& tweets);
void write_jsonl(const std::filesystem::path& path, const std::vector<Tweet>& tweets);

// Each rejected record with an added "reason" field. Lines that were not
// valid JSON are wrapped as {"line", "raw", "reason"}.
void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

class LabeledDataset {
 public:
  LabeledDataset() = default;
  // Throws DataError if any tweet lacks a gold label.
  explicit LabeledDataset(std::vector<Tweet> examples);

  const std::vector<Tweet>& examples() const { return examples_; }
  const std::array<std::size_t, kNumCategories>& class_counts() const { return counts_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  Category label(std::size_t i) const { return *examples_[i].gold_label; }

 private:
  std::vector<Tweet> examples_;
  std::array<std::size_t, kNumCategories> counts_{};
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset test;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

// Per class: seeded shuffle, then the first floor(fraction * n_c) go to train.
// Throws UsageError for a fraction outside (0, 1) and DataError when a class
// has fewer than two examples.
DatasetSplit split_dataset(const LabeledDataset& data, double train_fraction, std::uint64_t seed);

// JSON document with the seed, fraction, per-class counts and the test ids.
std::string split_manifest(const DatasetSplit& split);

}  // namespace vaxsurge
