#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaxsurge/encoder.h"
#include "vaxsurge/timeline.h"
#include "vaxsurge/trainer.h"

namespace vaxsurge {

inline constexpr std::string_view kVersion = "1.0.0";

struct PipelineConfig {
  // paths
  std::filesystem::path labeled;
  std::filesystem::path corpus;
  std::filesystem::path out_dir = "out";
  // Default to <out_dir>/vocab.txt and <out_dir>/model.ckpt when empty.
  std::filesystem::path vocab;
  std::filesystem::path checkpoint;
  // Timeline input; when set, classification is skipped.
  std::filesystem::path classified;

  // tokenizer
  std::size_t vocab_max_size = 4000;
  std::uint64_t min_pair_freq = 2;
  int max_len = kDefaultMaxLen;

  // encoder
  int d_model = 128;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 512;
  double dropout_rate = 0.1;

  // training
  double train_fraction = 0.8;
  double learning_rate = 5e-6;
  int epochs = 25;
  int batch_size = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool head_only = false;
  std::optional<ClassWeights> class_weights;

  // classification and timeline
  std::size_t classify_batch = 256;
  unsigned threads = 0;
  int utc_offset_minutes = kDefaultUtcOffsetMinutes;
  double min_prominence = kDefaultMinProminence;
  std::size_t top_k = kDefaultTopK;
  int smoothing_window = 1;
  Category peak_category = Category::kAntiVaccine;

  // synthetic generator
  std::size_t synth_labeled = 400;
  int synth_days = 30;
  std::size_t synth_per_day = 500;
  std::vector<int> synth_spike_days = {20, 28};
  double synth_spike_share = 0.70;
  std::string synth_start = "2021-07-22";
  bool synth_gzip = false;

  // seeds
  std::uint64_t seed_split = 42;
  std::uint64_t seed_init = 42;
  std::uint64_t seed_shuffle = 42;
  std::uint64_t seed_dropout = 42;
  std::uint64_t seed_synthetic = 7;

  bool quiet = false;

  std::filesystem::path vocab_path() const;
  std::filesystem::path checkpoint_path() const;
  EncoderConfig encoder_config(std::size_t vocab_size) const;
  TrainConfig train_config() const;
  PeakSettings peak_settings() const;
  // Throws UsageError on inconsistent settings.
  void validate() const;
};

// Exclusive lock file in the output directory, released on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& out_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Collects what a command read, wrote and how long each stage took, then
// writes manifest_<command>.json. Everything except "timings_seconds" is a
// function of the inputs.
class RunManifest {
 public:
  RunManifest(std::string command, const PipelineConfig& config);

  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  void count(const std::string& key, std::uint64_t value);
  // Runs fn and records its wall-clock duration under `stage`.
  void timed(const std::string& stage, const std::function<void()>& fn);
  double seconds(const std::string& stage) const;

  std::filesystem::path write() const;

 private:
  std::string command_;
  const PipelineConfig& config_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::map<std::string, std::uint64_t> counts_;
  std::vector<std::pair<std::string, double>> timings_;
};

// Config snapshot as JSON text (used in manifests).
std::string config_json(const PipelineConfig& config);

// Commands. Each writes its artifacts plus a manifest into out_dir and
// returns the manifest path. Errors surface as UsageError / DataError /
// NumericalError.
std::filesystem::path cmd_build_vocab(const PipelineConfig& config);
std::filesystem::path cmd_train(const PipelineConfig& config);
std::filesystem::path cmd_evaluate(const PipelineConfig& config);
std::filesystem::path cmd_classify(const PipelineConfig& config);
std::filesystem::path cmd_timeline(const PipelineConfig& config);
std::filesystem::path cmd_gen_synthetic(const PipelineConfig& config);

}  // namespace vaxsurge
