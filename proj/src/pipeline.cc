#include "vaxsurge/pipeline.h"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "vaxsurge/checkpoint.h"
#include "vaxsurge/corpus.h"
#include "vaxsurge/error.h"
#include "vaxsurge/figures.h"
#include "vaxsurge/hash.h"
#include "vaxsurge/metrics.h"
#include "vaxsurge/synthetic.h"
#include "vaxsurge/tokenizer.h"

namespace vaxsurge {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path PipelineConfig::vocab_path() const {
  return vocab.empty() ? out_dir / "vocab.txt" : vocab;
}

fs::path PipelineConfig::checkpoint_path() const {
  return checkpoint.empty() ? out_dir / "model.ckpt" : checkpoint;
}

EncoderConfig PipelineConfig::encoder_config(std::size_t vocab_size) const {
  EncoderConfig c;
  c.vocab_size = static_cast<int>(vocab_size);
  c.d_model = d_model;
  c.n_layers = n_layers;
  c.n_heads = n_heads;
  c.d_ff = d_ff;
  c.max_len = max_len;
  c.dropout_rate = dropout_rate;
  return c;
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.beta1 = beta1;
  t.beta2 = beta2;
  t.adam_eps = adam_eps;
  t.init_seed = seed_init;
  t.shuffle_seed = seed_shuffle;
  t.dropout_seed = seed_dropout;
  t.class_weights = class_weights;
  t.head_only = head_only;
  return t;
}

PeakSettings PipelineConfig::peak_settings() const {
  return PeakSettings{min_prominence, top_k, smoothing_window};
}

void PipelineConfig::validate() const {
  if (max_len < 2) throw UsageError("max_len must be at least 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train_fraction must lie strictly between 0 and 1");
  }
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    throw UsageError("smoothing_window must be a positive odd number");
  }
  if (top_k < 1) throw UsageError("top_k must be at least 1");
  if (classify_batch < 1) throw UsageError("classify_batch must be at least 1");
  if (!(min_prominence >= 0.0)) throw UsageError("min_prominence must be non-negative");
  if (utc_offset_minutes <= -24 * 60 || utc_offset_minutes >= 24 * 60) {
    throw UsageError("utc_offset_minutes must lie within one day");
  }
  train_config().validate();
}

OutputLock::OutputLock(const fs::path& out_dir) : path_(out_dir / ".vaxsurge.lock") {
  fs::create_directories(out_dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw UsageError("output directory " + out_dir.string() +
                     " is locked by another run (remove " + path_.string() + " if stale)");
  }
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string config_json(const PipelineConfig& c) {
  ordered_json weights = nullptr;
  if (c.class_weights) weights = *c.class_weights;
  ordered_json doc = {
      {"paths",
       {{"labeled", c.labeled.string()},
        {"corpus", c.corpus.string()},
        {"out_dir", c.out_dir.string()},
        {"vocab", c.vocab_path().string()},
        {"checkpoint", c.checkpoint_path().string()},
        {"classified", c.classified.string()}}},
      {"tokenizer",
       {{"vocab_max_size", c.vocab_max_size},
        {"min_pair_freq", c.min_pair_freq},
        {"max_len", c.max_len}}},
      {"encoder",
       {{"d_model", c.d_model},
        {"n_layers", c.n_layers},
        {"n_heads", c.n_heads},
        {"d_ff", c.d_ff},
        {"dropout_rate", c.dropout_rate}}},
      {"training",
       {{"train_fraction", c.train_fraction},
        {"learning_rate", c.learning_rate},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"adam_eps", c.adam_eps},
        {"head_only", c.head_only},
        {"class_weights", weights}}},
      {"timeline",
       {{"classify_batch", c.classify_batch},
        {"utc_offset_minutes", c.utc_offset_minutes},
        {"min_prominence", c.min_prominence},
        {"top_k", c.top_k},
        {"smoothing_window", c.smoothing_window},
        {"peak_category", category_name(c.peak_category)}}},
      {"synthetic",
       {{"labeled", c.synth_labeled},
        {"days", c.synth_days},
        {"per_day", c.synth_per_day},
        {"spike_days", c.synth_spike_days},
        {"spike_share", c.synth_spike_share},
        {"start", c.synth_start},
        {"gzip", c.synth_gzip}}},
      {"seeds",
       {{"split", c.seed_split},
        {"init", c.seed_init},
        {"shuffle", c.seed_shuffle},
        {"dropout", c.seed_dropout},
        {"synthetic", c.seed_synthetic}}}};
  return doc.dump(2);
}

RunManifest::RunManifest(std::string command, const PipelineConfig& config)
    : command_(std::move(command)), config_(config) {}

void RunManifest::input(const fs::path& path) { inputs_[path.string()] = sha256_file(path); }
void RunManifest::output(const fs::path& path) { outputs_[path.string()] = sha256_file(path); }
void RunManifest::count(const std::string& key, std::uint64_t value) { counts_[key] = value; }

void RunManifest::timed(const std::string& stage, const std::function<void()>& fn) {
  auto start = std::chrono::steady_clock::now();
  fn();
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  timings_.emplace_back(stage, elapsed.count());
}

double RunManifest::seconds(const std::string& stage) const {
  for (const auto& [name, s] : timings_) {
    if (name == stage) return s;
  }
  return 0.0;
}

fs::path RunManifest::write() const {
  ordered_json timings = ordered_json::object();
  for (const auto& [stage, s] : timings_) timings[stage] = s;
  ordered_json doc = {{"command", command_},
                      {"versions",
                       {{"vaxsurge", kVersion},
                        {"checkpoint_format", kCheckpointVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION)}}},
                      {"config", ordered_json::parse(config_json(config_))},
                      {"inputs", inputs_},
                      {"outputs", outputs_},
                      {"counts", counts_},
                      {"timings_seconds", timings}};
  fs::path path = config_.out_dir / ("manifest_" + command_ + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  return path;
}

namespace {

void log(const PipelineConfig& c, const std::string& msg) {
  if (!c.quiet) std::cerr << "[vaxsurge] " << msg << '\n';
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << content;
}

void write_gzip(const fs::path& path, std::string_view content) {
  gzFile f = gzopen(path.c_str(), "wb9");
  if (!f) throw UsageError("cannot write " + path.string());
  const bool ok = content.empty() ||
                  gzwrite(f, content.data(), static_cast<unsigned>(content.size())) > 0;
  gzclose(f);
  if (!ok) throw UsageError("gzip write failed for " + path.string());
}

void require_file(const fs::path& path, std::string_view what) {
  if (path.empty()) throw UsageError(std::string(what) + " path not set");
  if (!fs::is_regular_file(path)) {
    throw UsageError(std::string(what) + " not found: " + path.string());
  }
}

IngestResult ingest_logged(const PipelineConfig& c, RunManifest& m, const fs::path& path,
                           const std::string& rejects_name) {
  m.input(path);
  IngestResult r;
  m.timed("ingest", [&] { r = ingest_jsonl(path); });
  fs::path rejects = c.out_dir / rejects_name;
  write_rejects(rejects, r.rejects);
  m.output(rejects);
  m.count("records_accepted", r.tweets.size());
  m.count("records_rejected", r.rejects.size());
  if (!r.rejects.empty()) {
    log(c, std::to_string(r.rejects.size()) + " record(s) rejected; see " + rejects.string());
  }
  return r;
}

DatasetSplit load_split(const PipelineConfig& c, RunManifest& m) {
  require_file(c.labeled, "labeled file");
  IngestResult r = ingest_logged(c, m, c.labeled, "rejects_labeled.jsonl");
  LabeledDataset data(std::move(r.tweets));
  DatasetSplit split = split_dataset(data, c.train_fraction, c.seed_split);
  m.count("train_examples", split.train.size());
  m.count("test_examples", split.test.size());
  return split;
}

Vocabulary load_vocab(const PipelineConfig& c, RunManifest& m) {
  require_file(c.vocab_path(), "vocabulary");
  m.input(c.vocab_path());
  return Vocabulary::load(c.vocab_path());
}

Checkpoint load_checked_checkpoint(const PipelineConfig& c, RunManifest& m,
                                   const Vocabulary& vocab) {
  require_file(c.checkpoint_path(), "checkpoint");
  m.input(c.checkpoint_path());
  Checkpoint ck = load_checkpoint(c.checkpoint_path());
  if (ck.meta.vocab_sha256 != vocab.sha256()) {
    throw DataError("checkpoint " + c.checkpoint_path().string() +
                    " was trained with a different vocabulary (hash " + ck.meta.vocab_sha256 +
                    ", have " + vocab.sha256() + ")");
  }
  return ck;
}

std::vector<ClassifiedTweet> classify_stage(const PipelineConfig& c, RunManifest& m) {
  Vocabulary vocab = load_vocab(c, m);
  Checkpoint ck = load_checked_checkpoint(c, m, vocab);
  require_file(c.corpus, "corpus file");
  IngestResult r = ingest_logged(c, m, c.corpus, "rejects_corpus.jsonl");
  std::vector<ClassifiedTweet> out;
  m.timed("classify", [&] {
    out = classify_corpus(ck, vocab, r.tweets, ClassifyOptions{c.classify_batch, c.threads});
  });
  m.count("tweets_classified", out.size());
  log(c, "classified " + std::to_string(out.size()) + " tweets in " +
             std::to_string(m.seconds("classify")) + " s");
  return out;
}

fs::path emit(RunManifest& m, const fs::path& path, std::string_view content) {
  write_file(path, content);
  m.output(path);
  return path;
}

}  // namespace

fs::path cmd_build_vocab(const PipelineConfig& c) {
  c.validate();
  require_file(c.labeled, "labeled file");
  OutputLock lock(c.out_dir);
  RunManifest m("build-vocab", c);
  DatasetSplit split = load_split(c, m);
  std::vector<std::string> texts;
  for (const Tweet& t : split.train.examples()) texts.push_back(t.text);
  Vocabulary vocab;
  m.timed("build_vocab", [&] { vocab = build_vocab(texts, c.vocab_max_size, c.min_pair_freq); });
  if (c.vocab_path().has_parent_path()) fs::create_directories(c.vocab_path().parent_path());
  vocab.save(c.vocab_path());
  m.output(c.vocab_path());
  emit(m, c.out_dir / "split_manifest.json", split_manifest(split));
  m.count("vocab_size", vocab.size());
  log(c, "vocabulary of " + std::to_string(vocab.size()) + " tokens -> " +
             c.vocab_path().string());
  return m.write();
}

fs::path cmd_train(const PipelineConfig& c) {
  c.validate();
  require_file(c.labeled, "labeled file");
  OutputLock lock(c.out_dir);
  RunManifest m("train", c);
  DatasetSplit split = load_split(c, m);
  Vocabulary vocab = load_vocab(c, m);
  EncoderConfig ec = c.encoder_config(vocab.size());
  TrainTrace trace;
  m.timed("train", [&] {
    trace = train(split, vocab, ec, c.train_config(), [&](const EpochStats& e) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "epoch %d/%d  loss %.6f  train acc %.4f", e.epoch, c.epochs,
                    e.mean_loss, e.train_accuracy);
      log(c, buf);
    });
  });
  if (c.checkpoint_path().has_parent_path()) fs::create_directories(c.checkpoint_path().parent_path());
  save_checkpoint(c.checkpoint_path(), trace.params, CheckpointMeta{vocab.sha256(), c.seed_init});
  m.output(c.checkpoint_path());
  emit(m, c.out_dir / "train_trace.tsv", trace.table());
  m.count("parameters", trace.params.parameter_count());
  return m.write();
}

fs::path cmd_evaluate(const PipelineConfig& c) {
  c.validate();
  require_file(c.labeled, "labeled file");
  OutputLock lock(c.out_dir);
  RunManifest m("evaluate", c);
  DatasetSplit split = load_split(c, m);
  Vocabulary vocab = load_vocab(c, m);
  Checkpoint ck = load_checked_checkpoint(c, m, vocab);
  EvalReport report;
  m.timed("evaluate", [&] { report = evaluate(ck.params, vocab, split.test); });
  emit(m, c.out_dir / "eval_report.json", report_json(report));
  emit(m, c.out_dir / "roc_points.csv", roc_csv(report));
  emit(m, c.out_dir / "confusion_matrix.svg", figures::confusion_heatmap(report.confusion));
  emit(m, c.out_dir / "roc_curves.svg", figures::roc_curves(report));
  emit(m, c.out_dir / "prf_scores.svg", figures::prf_bars(report.scores));
  char buf[160];
  std::snprintf(buf, sizeof buf, "test macro F1 %.4f  weighted F1 %.4f  accuracy %.4f",
                report.scores.macro_f1, report.scores.weighted_f1, report.scores.accuracy);
  log(c, buf);
  return m.write();
}

fs::path cmd_classify(const PipelineConfig& c) {
  c.validate();
  OutputLock lock(c.out_dir);
  RunManifest m("classify", c);
  auto classified = classify_stage(c, m);
  emit(m, c.out_dir / "classified.jsonl", classified_jsonl(classified));
  return m.write();
}

fs::path cmd_timeline(const PipelineConfig& c) {
  c.validate();
  OutputLock lock(c.out_dir);
  RunManifest m("timeline", c);
  std::vector<ClassifiedTweet> classified;
  if (!c.classified.empty()) {
    require_file(c.classified, "classified file");
    m.input(c.classified);
    std::ifstream in(c.classified, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    classified = parse_classified_jsonl(content);
  } else {
    classified = classify_stage(c, m);
    emit(m, c.out_dir / "classified.jsonl", classified_jsonl(classified));
  }
  TimelineSeries series;
  PeakReport peaks;
  m.timed("timeline", [&] {
    series = aggregate_daily(classified, c.utc_offset_minutes);
    peaks = find_peaks(series, c.peak_category, c.peak_settings());
  });
  emit(m, c.out_dir / "timeline.csv", timeline_csv(series));
  emit(m, c.out_dir / "peaks.json", peak_report_json(peaks));
  emit(m, c.out_dir / "timeline.svg", figures::timeline_panels(series, peaks));
  m.count("days", series.bins.size());
  std::string dates;
  for (const auto& e : peaks.local_maxima) dates += " " + format_date(e.date);
  log(c, "peak dates:" + (dates.empty() ? std::string(" none") : dates));
  return m.write();
}

fs::path cmd_gen_synthetic(const PipelineConfig& c) {
  auto start = parse_date(c.synth_start);
  if (!start) throw UsageError("synthetic start date must be YYYY-MM-DD: " + c.synth_start);
  if (c.synth_days < 1) throw UsageError("synthetic days must be positive");
  OutputLock lock(c.out_dir);
  RunManifest m("gen-synthetic", c);
  SyntheticSpec spec;
  spec.seed = c.seed_synthetic;
  spec.labeled_examples = c.synth_labeled;
  spec.start_date = *start;
  spec.days = c.synth_days;
  spec.tweets_per_day = c.synth_per_day;
  spec.spike_days = c.synth_spike_days;
  spec.spike_anti_share = c.synth_spike_share;
  spec.utc_offset_minutes = c.utc_offset_minutes;
  std::vector<Tweet> labeled, corpus;
  m.timed("generate", [&] {
    labeled = synthetic_labeled(spec);
    corpus = synthetic_corpus(spec);
  });
  emit(m, c.out_dir / "labeled.jsonl", synthetic_jsonl(labeled, spec.utc_offset_minutes));
  if (c.synth_gzip) {
    fs::path p = c.out_dir / "corpus.jsonl.gz";
    write_gzip(p, synthetic_jsonl(corpus, spec.utc_offset_minutes));
    m.output(p);
  } else {
    emit(m, c.out_dir / "corpus.jsonl", synthetic_jsonl(corpus, spec.utc_offset_minutes));
  }
  m.count("labeled", labeled.size());
  m.count("corpus", corpus.size());
  log(c, "wrote " + std::to_string(labeled.size()) + " labeled and " +
             std::to_string(corpus.size()) + " corpus records to " + c.out_dir.string());
  return m.write();
}

}  // namespace vaxsurge
