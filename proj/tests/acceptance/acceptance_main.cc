// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Long-running checks drive the real CLI binary.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "auc_oracle.h"
#include "grad_check.h"
#include "json.hpp"
#include "reference_model.h"
#include "vaxsurge/corpus.h"
#include "vaxsurge/encoder.h"
#include "vaxsurge/metrics.h"
#include "vaxsurge/random.h"
#include "vaxsurge/timeline.h"
#include "vaxsurge/checkpoint.h"
#include "vaxsurge/tokenizer.h"
#include "vaxsurge/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vaxsurge;

namespace {

const fs::path kWork = fs::temp_directory_path() / "vaxsurge_acceptance";

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

// Runs the CLI inside kWork; throws with the captured stderr on failure.
void cli(const std::string& args) {
  const fs::path log = kWork / "cli_stderr.txt";
  const std::string cmd = "cd " + kWork.string() + " && " VAXSURGE_CLI " -q " + args + " 2> " +
                          log.string();
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("`vaxsurge " + args + "` failed: " + slurp(log));
  }
}

// File contents by name, with the wall-clock section removed from manifests.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    std::string content = slurp(e.path());
    if (name.rfind("manifest_", 0) == 0) {
      json doc = json::parse(content);
      doc.erase("timings_seconds");
      content = doc.dump();
    }
    out[name] = std::move(content);
  }
  return out;
}

EncoderConfig oracle_config(int max_len) {
  EncoderConfig c;
  c.vocab_size = 16;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_len = max_len;
  return c;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  Stopwatch clock;
  ModelParams p = init_params(oracle_config(8), 101);
  Rng rng(202);
  reference::perturb(p, rng, 0.5);
  std::vector<Encoding> batch;
  std::vector<Category> labels;
  for (int i = 0; i < 4; ++i) {
    batch.push_back(reference::random_encoding(rng, 16, 8));
    labels.push_back(static_cast<Category>(i));
  }
  auto r = reference::gradient_check(p, batch, labels, 240, 303);
  std::size_t n_tensors = 0;
  p.visit([&](const std::string&, TensorKind, const Matrix&) { ++n_tensors; });
  const double secs = clock.seconds();
  const bool pass = r.coordinates >= 200 && r.tensors.size() == n_tensors &&
                    r.max_rel_error < 1e-5 && secs < 60;
  return {pass, std::to_string(r.coordinates) + " coordinates over " +
                    std::to_string(r.tensors.size()) + "/" + std::to_string(n_tensors) +
                    " tensors, max rel err " + fmt("%.3g", r.max_rel_error) + " at " + r.worst +
                    " (< 1e-5), " + fmt("%.2f", secs) + " s (< 60 s)"};
}

Outcome forward_oracle() {
  const int cases = 120;
  double worst_ref = 0, worst_pad = 0;
  for (int k = 0; k < cases; ++k) {
    Rng rng(mix_seed(404, static_cast<std::uint64_t>(k)));
    EncoderConfig c = oracle_config(16);
    c.n_heads = 1 + static_cast<int>(rng.uniform_index(2));
    c.n_layers = 1 + static_cast<int>(rng.uniform_index(2));
    ModelParams p16 = init_params(c, static_cast<std::uint64_t>(k));
    reference::perturb(p16, rng, 0.6);
    ModelParams p8 = p16;
    p8.config.max_len = 8;
    p8.position_emb = p16.position_emb.topRows(8);

    Encoding e8 = reference::random_encoding(rng, c.vocab_size, 8);
    Encoding e16 = reference::repad(e8, 16);
    Matrix got8 = forward(p8, std::span<const Encoding>(&e8, 1));
    Matrix got16 = forward(p16, std::span<const Encoding>(&e16, 1));
    auto want = reference::reference_logits(p8, e8);
    for (int j = 0; j < 4; ++j) {
      worst_ref = std::max(worst_ref, std::abs(got8(0, j) - want[static_cast<std::size_t>(j)]));
      worst_pad = std::max(worst_pad, std::abs(got8(0, j) - got16(0, j)));
    }
  }
  return {worst_ref <= 1e-10 && worst_pad <= 1e-6,
          std::to_string(cases) + " fuzz cases, max |optimized - reference| " +
              fmt("%.3g", worst_ref) + " (<= 1e-10), max padding drift " +
              fmt("%.3g", worst_pad) + " (<= 1e-6)"};
}

Outcome auc_oracle() {
  Rng rng(505);
  const int instances = 1200;
  double worst = 0;
  for (int k = 0; k < instances; ++k) {
    const std::size_t n = 2 + rng.uniform_index(199);
    // A third of the instances use at most three score levels (heavy ties).
    const std::uint64_t levels = k % 3 == 0 ? 1 + rng.uniform_index(3) : 2 + rng.uniform_index(500);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_index(levels)) / static_cast<double>(levels);
      y[i] = static_cast<std::uint8_t>(rng.uniform_index(2));
    }
    // Both classes must be present.
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(auc(roc_points(s, y)) - reference::mann_whitney_auc(s, y)));
  }
  const std::vector<double> s = {0.9, 0.8, 0.3, 0.1};
  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  const std::vector<std::uint8_t> sorted = {1, 1, 0, 0}, mixed = {1, 0, 1, 0};
  const double a1 = auc(roc_points(s, sorted));
  const double a2 = auc(roc_points(s, mixed));
  const double a3 = auc(roc_points(flat, mixed));
  const bool hand = a1 == 1.0 && a2 == 0.75 && a3 == 0.5;
  return {worst <= 1e-9 && hand,
          std::to_string(instances) + " random instances (size <= 200, ties included), max |trapezoid - "
          "Mann-Whitney| " + fmt("%.3g", worst) + " (<= 1e-9); hand cases " + fmt("%.17g", a1) +
              " / " + fmt("%.17g", a2) + " / " + fmt("%.17g", a3)};
}

Outcome metrics_hand_cases() {
  const std::vector<Category> labels = {Category::kNews, Category::kAntiVaccine};
  const double ce = cross_entropy(Matrix::Zero(2, 4), labels);
  const double ce_err = std::abs(ce - std::log(4.0));

  const std::vector<Category> preds = {Category::kAntiVaccine, Category::kAntiVaccine,
                                       Category::kAntiVaccine, Category::kProVaccine};
  const std::vector<Category> golds = {Category::kAntiVaccine, Category::kAntiVaccine,
                                       Category::kNews, Category::kAntiVaccine};
  const ClassScores c2 = prf(confusion(preds, golds)).per_class[2];
  const bool two_thirds =
      c2.precision == 2.0 / 3.0 && c2.recall == 2.0 / 3.0 && c2.f1 == 2.0 / 3.0;

  EncoderConfig cfg = oracle_config(8);
  ModelParams theta = ModelParams::zeros(cfg);
  ModelParams grad = ModelParams::zeros(cfg);
  grad.visit([](const std::string&, TensorKind, Matrix& m) { m.setConstant(0.5); });
  AdamState state = AdamState::zeros(cfg);
  adam_step(theta, grad, state, TrainConfig{});
  const double expected = -5e-6 * 0.5 / (0.5 + 1e-8);
  double adam_err = 0;
  theta.visit([&](const std::string&, TensorKind, const Matrix& m) {
    adam_err = std::max(adam_err, (m.array() - expected).abs().maxCoeff());
  });
  return {ce_err <= 1e-12 && two_thirds && adam_err <= 1e-12,
          "|CE - ln 4| " + fmt("%.3g", ce_err) + " (<= 1e-12); P/R/F1 = 2/3 " +
              (two_thirds ? "exact" : "MISMATCH") + "; Adam first step error " +
              fmt("%.3g", adam_err) + " (<= 1e-12)"};
}

Outcome split_fidelity() {
  const std::array<std::size_t, 4> counts = {93, 406, 583, 424};
  std::vector<Tweet> tweets;
  const Instant t = *parse_iso8601("2021-07-01T00:00:00Z");
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
      tweets.push_back({std::to_string(c) + "-" + std::to_string(i), t, "x", category_from_index(c)});
    }
  }
  const LabeledDataset data(std::move(tweets));
  const DatasetSplit a = split_dataset(data, 0.8, 42);
  const DatasetSplit b = split_dataset(data, 0.8, 42);
  const std::array<std::size_t, 4> train = {74, 324, 466, 339}, test = {19, 82, 117, 85};
  const bool sizes = a.train.class_counts() == train && a.test.class_counts() == test &&
                     a.train.size() == 1203 && a.test.size() == 303;
  const bool deterministic = split_manifest(a) == split_manifest(b) &&
                             a.train.examples() == b.train.examples();
  std::string detail = "train/test " + std::to_string(a.train.size()) + "/" +
                       std::to_string(a.test.size()) + ", per class";
  for (int c = 0; c < 4; ++c) {
    detail += " " + std::to_string(a.train.class_counts()[static_cast<std::size_t>(c)]) + "+" +
              std::to_string(a.test.class_counts()[static_cast<std::size_t>(c)]);
  }
  detail += deterministic ? ", identical on rerun" : ", NOT deterministic";
  return {sizes && deterministic, detail};
}

Outcome synthetic_training() {
  fs::create_directories(kWork);
  cli("gen-synthetic --out train_syn");
  const std::string common = " --labeled train_syn/labeled.jsonl --out train_fast";
  Stopwatch clock;
  cli("build-vocab" + common);
  cli("train --lr 1e-3" + common);
  cli("evaluate" + common);
  const double secs = clock.seconds();
  const json report = json::parse(slurp(kWork / "train_fast" / "eval_report.json"));
  const double macro = report["macro_f1"].get<double>();
  const std::size_t n_test = report["n_examples"].get<std::size_t>();

  // Default learning rate, otherwise identical settings.
  cli("build-vocab --labeled train_syn/labeled.jsonl --out train_default_lr");
  cli("train --labeled train_syn/labeled.jsonl --out train_default_lr");
  std::ifstream trace(kWork / "train_default_lr" / "train_trace.tsv");
  std::string line;
  std::vector<double> losses;
  std::getline(trace, line);
  while (std::getline(trace, line)) {
    std::istringstream row(line);
    int epoch;
    double loss;
    row >> epoch >> loss;
    losses.push_back(loss);
  }
  const bool decreasing = losses.size() == 25 && losses.back() < losses.front();
  return {macro >= 0.9 && secs < 300 && decreasing,
          "400 examples, d=128 L=2 H=4, lr 1e-3, 25 epochs: held-out macro F1 " +
              fmt("%.4f", macro) + " on " + std::to_string(n_test) + " examples (>= 0.9) in " +
              fmt("%.1f", secs) + " s (< 300 s); lr 5e-6: loss " +
              (losses.empty() ? std::string("n/a")
                              : fmt("%.6f", losses.front()) + " -> " + fmt("%.6f", losses.back())) +
              (decreasing ? " (decreased)" : " (NOT decreased)")};
}

Outcome end_to_end_surge() {
  fs::remove_all(kWork / "e2e");
  Stopwatch clock;
  const std::string common = " --labeled e2e/syn/labeled.jsonl --out e2e/run --lr 1e-3";
  cli("gen-synthetic --out e2e/syn");
  cli("build-vocab" + common);
  cli("train" + common);
  cli("evaluate" + common);
  cli("classify --corpus e2e/syn/corpus.jsonl" + common);
  cli("timeline --corpus e2e/syn/corpus.jsonl" + common);
  const double secs = clock.seconds();
  const json peaks = json::parse(slurp(kWork / "e2e" / "run" / "peaks.json"));
  std::vector<std::string> top;
  for (const auto& m : peaks["local_maxima"]) {
    if (top.size() < 2) top.push_back(m["date"].get<std::string>());
  }
  std::vector<std::string> sorted = top;
  std::sort(sorted.begin(), sorted.end());
  const bool dates = sorted == std::vector<std::string>{"2021-08-11", "2021-08-19"};
  const std::size_t tweets = count_lines(kWork / "e2e" / "syn" / "corpus.jsonl");
  std::string shown;
  for (const auto& d : top) shown += (shown.empty() ? "" : ", ") + d;
  return {dates && secs < 600,
          std::to_string(tweets) + " tweets over 30 days, spikes on days 20 and 28: top-2 peaks [" +
              shown + "] (want 2021-08-11, 2021-08-19) in " + fmt("%.1f", secs) +
              " s (< 600 s)"};
}

Outcome reproducibility() {
  // Re-runs every command of the end-to-end pipeline in place.
  const auto syn_before = snapshot(kWork / "e2e" / "syn");
  const auto run_before = snapshot(kWork / "e2e" / "run");
  end_to_end_surge();
  const auto syn_after = snapshot(kWork / "e2e" / "syn");
  const auto run_after = snapshot(kWork / "e2e" / "run");
  std::vector<std::string> differing;
  auto compare = [&](const auto& before, const auto& after) {
    for (const auto& [name, content] : before) {
      auto it = after.find(name);
      if (it == after.end() || it->second != content) differing.push_back(name);
    }
    if (before.size() != after.size()) differing.push_back("<file set>");
  };
  compare(syn_before, syn_after);
  compare(run_before, run_after);
  std::string detail = std::to_string(syn_before.size() + run_before.size()) +
                       " files from gen-synthetic, build-vocab, train, evaluate, classify and "
                       "timeline compared after a rerun (manifest timings excluded): ";
  if (differing.empty()) {
    detail += "all byte-identical";
  } else {
    detail += "differing:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty(), detail};
}

Outcome scale_check() {
  const fs::path dir = kWork / "scale";
  fs::remove_all(dir);
  // 30 days x 21,700 base tweets; spike days add volume on top.
  cli("gen-synthetic --out scale/syn --synth-per-day 21700 --synth-labeled 40");
  const std::size_t n_corpus = count_lines(dir / "syn" / "corpus.jsonl");
  Stopwatch clock;
  cli("classify --corpus scale/syn/corpus.jsonl --out scale/run --vocab e2e/run/vocab.txt "
      "--checkpoint e2e/run/model.ckpt");
  const double secs = clock.seconds();
  const std::size_t n_classified = count_lines(dir / "run" / "classified.jsonl");
  const json manifest = json::parse(slurp(dir / "run" / "manifest_classify.json"));
  const bool timed = manifest.contains("timings_seconds") &&
                     manifest["timings_seconds"].contains("classify");
  const double manifest_secs = timed ? manifest["timings_seconds"]["classify"].get<double>() : -1;

  // Batch-size independence on a seeded 1,000-tweet sample.
  const IngestResult corpus = ingest_jsonl(dir / "syn" / "corpus.jsonl");
  std::vector<std::size_t> order(corpus.tweets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(606);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<Tweet> sample;
  for (std::size_t i = 0; i < 1000 && i < order.size(); ++i) sample.push_back(corpus.tweets[order[i]]);
  const Checkpoint ck = load_checkpoint(kWork / "e2e" / "run" / "model.ckpt");
  const Vocabulary vocab = Vocabulary::load(kWork / "e2e" / "run" / "vocab.txt");
  const auto one = classify_corpus(ck, vocab, sample, {1, 1});
  const auto mid = classify_corpus(ck, vocab, sample, {37, 1});
  const auto all = classify_corpus(ck, vocab, sample, {1000, 1});
  const bool independent = one == mid && one == all;

  // The same tweets inside the full CLI run (batch 256) got identical results.
  const auto full = parse_classified_jsonl(slurp(dir / "run" / "classified.jsonl"));
  std::map<std::string, const ClassifiedTweet*> by_id;
  for (const auto& c : full) by_id[c.id] = &c;
  bool matches_full = true;
  for (const auto& c : one) {
    auto it = by_id.find(c.id);
    matches_full = matches_full && it != by_id.end() && *it->second == c;
  }
  const bool pass = n_corpus >= 650000 && n_classified == n_corpus && timed && independent &&
                    matches_full;
  return {pass, std::to_string(n_classified) + "/" + std::to_string(n_corpus) +
                    " tweets classified (>= 650000) in " + fmt("%.1f", secs) +
                    " s; manifest classify timing " + fmt("%.1f", manifest_secs) +
                    " s; 1,000-tweet sample identical for batch sizes 1/37/1000 " +
                    (independent ? "yes" : "NO") + ", identical to the full run " +
                    (matches_full ? "yes" : "NO")};
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Gradient oracle", gradient_oracle},
      {"Forward oracle", forward_oracle},
      {"AUC oracle", auc_oracle},
      {"Metrics hand cases", metrics_hand_cases},
      {"Split fidelity", split_fidelity},
      {"Synthetic training", synthetic_training},
      {"End-to-end surge recovery", end_to_end_surge},
      {"Reproducibility", reproducibility},
      {"Scale check", scale_check},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
