#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "vaxsurge/checkpoint.h"
#include "vaxsurge/text.h"
#include "vaxsurge/tokenizer.h"

using namespace vaxsurge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "vaxsurge_pipeline_test";

const char* kSmallModel =
    " --d-model 16 --layers 1 --heads 2 --d-ff 32 --max-len 24 --vocab-size 300"
    " --seed-split 3 --seed-init 4 --seed-shuffle 5 --seed-dropout 6";

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args) {
  const fs::path err = kRoot / "stderr.txt";
  const std::string cmd =
      "cd " + kRoot.string() + " && " VAXSURGE_CLI " " + args + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

// File contents keyed by name; manifests lose their wall-clock timings.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    std::string content = slurp(e.path());
    if (name.rfind("manifest_", 0) == 0) {
      json doc = json::parse(content);
      CHECK(doc.contains("timings_seconds"));
      doc.erase("timings_seconds");
      content = doc.dump();
    }
    out[name] = content;
  }
  return out;
}

void fresh() {
  fs::remove_all(kRoot);
  fs::create_directories(kRoot);
}

void full_run(const std::string& out) {
  const std::string common = std::string(" --labeled syn/labeled.jsonl --out ") + out + kSmallModel;
  REQUIRE(cli("build-vocab -q" + common).code == 0);
  REQUIRE(cli("train -q --epochs 2 --lr 1e-3" + common).code == 0);
  REQUIRE(cli("evaluate -q" + common).code == 0);
  REQUIRE(cli("timeline -q --corpus syn/corpus.jsonl" + common).code == 0);
}

}  // namespace

TEST_CASE("missing inputs are usage errors naming the path") {
  fresh();
  Run r = cli("build-vocab --labeled does_not_exist.jsonl --out run");
  CHECK(r.code == 2);
  CHECK(r.err.find("does_not_exist.jsonl") != std::string::npos);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("train --labeled x.jsonl --epochs nope").code == 2);
}

TEST_CASE("invalid data exits with code 3") {
  fresh();
  write(kRoot / "dup.jsonl",
        R"({"id":"1","created_at":"2021-08-01T10:00:00Z","text":"a","label":0})"
        "\n"
        R"({"id":"1","created_at":"2021-08-01T10:00:00Z","text":"b","label":1})"
        "\n");
  Run r = cli("build-vocab --labeled dup.jsonl --out run");
  CHECK(r.code == 3);
  CHECK(r.err.find("lines 1 and 2") != std::string::npos);
}

TEST_CASE("a stale lock file blocks the output directory") {
  fresh();
  REQUIRE(cli("gen-synthetic -q --out syn --synth-labeled 40 --synth-days 3 --synth-per-day 20").code == 0);
  write(kRoot / "run" / ".vaxsurge.lock", "");
  Run r = cli("build-vocab --labeled syn/labeled.jsonl --out run");
  CHECK(r.code == 2);
  CHECK(r.err.find("locked") != std::string::npos);
}

TEST_CASE("full pipeline outputs are complete and byte-identical on rerun") {
  fresh();
  REQUIRE(cli("gen-synthetic -q --out syn --synth-labeled 80 --synth-days 8 --synth-per-day 40 "
              "--synth-spike-days 2,5")
              .code == 0);
  full_run("run");
  for (const char* f : {"vocab.txt", "split_manifest.json", "model.ckpt", "train_trace.tsv",
                        "eval_report.json", "roc_points.csv", "confusion_matrix.svg",
                        "roc_curves.svg", "prf_scores.svg", "classified.jsonl", "timeline.csv",
                        "peaks.json", "timeline.svg", "manifest_build-vocab.json",
                        "manifest_train.json", "manifest_evaluate.json", "manifest_timeline.json"}) {
    CHECK_MESSAGE(fs::exists(kRoot / "run" / f), f);
  }
  CHECK_FALSE(fs::exists(kRoot / "run" / ".vaxsurge.lock"));

  // Vocabulary budget.
  const std::string vocab = slurp(kRoot / "run" / "vocab.txt");
  CHECK(std::count(vocab.begin(), vocab.end(), '\n') <= 300);

  // Manifest contents.
  json m = json::parse(slurp(kRoot / "run" / "manifest_train.json"));
  CHECK(m["inputs"].size() >= 2);
  CHECK(m["config"]["seeds"]["init"] == 4);

  // Panel conservation: per-day category counts add up to the day's volume,
  // and the volumes add up to the classified corpus.
  std::istringstream csv(slurp(kRoot / "run" / "timeline.csv"));
  std::string line;
  std::getline(csv, line);
  std::uint64_t volume = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 8);
    const std::uint64_t sum = std::stoull(cells[1]) + std::stoull(cells[2]) +
                              std::stoull(cells[3]) + std::stoull(cells[4]);
    CHECK(sum == std::stoull(cells[5]));
    volume += sum;
  }
  const std::string classified = slurp(kRoot / "run" / "classified.jsonl");
  CHECK(volume == static_cast<std::uint64_t>(std::count(classified.begin(), classified.end(), '\n')));

  // Rerun in place: every artifact is reproduced byte for byte.
  auto first = snapshot(kRoot / "run");
  full_run("run");
  auto second = snapshot(kRoot / "run");
  REQUIRE(first.size() == second.size());
  for (const auto& [name, content] : first) CHECK_MESSAGE(second[name] == content, name);

  // Evaluation into a directory that does not exist yet.
  REQUIRE(cli("evaluate -q --labeled syn/labeled.jsonl --out nested/deeper/eval "
              "--vocab run/vocab.txt --checkpoint run/model.ckpt --seed-split 3")
              .code == 0);
  CHECK(fs::exists(kRoot / "nested/deeper/eval/eval_report.json"));
  CHECK(slurp(kRoot / "nested/deeper/eval/eval_report.json") ==
        slurp(kRoot / "run/eval_report.json"));
}

TEST_CASE("learning rate zero leaves the initialization untouched") {
  fresh();
  REQUIRE(cli("gen-synthetic -q --out syn --synth-labeled 40 --synth-days 2 --synth-per-day 10").code == 0);
  const std::string common = std::string(" -q --labeled syn/labeled.jsonl --out run") + kSmallModel;
  REQUIRE(cli("build-vocab" + common).code == 0);
  REQUIRE(cli("train --lr 0 --epochs 1" + common).code == 0);
  Checkpoint ck = load_checkpoint(kRoot / "run" / "model.ckpt");
  ModelParams init = init_params(ck.params.config, 4);
  round_to_float(init);
  CHECK(checkpoint_bytes(ck.params, ck.meta) == checkpoint_bytes(init, ck.meta));
  CHECK(ck.meta.vocab_sha256 == Vocabulary::load(kRoot / "run" / "vocab.txt").sha256());
}

TEST_CASE("config file values apply and flags override them") {
  fresh();
  REQUIRE(cli("gen-synthetic -q --out syn --synth-labeled 40 --synth-days 2 --synth-per-day 10").code == 0);
  write(kRoot / "run.ini", "vocab-size = 120\nepochs = 1\nd-model = 8\nheads = 2\nd-ff = 8\n"
                           "layers = 1\nmax-len = 16\n");
  REQUIRE(cli("build-vocab -q --config run.ini --labeled syn/labeled.jsonl --out a").code == 0);
  json m = json::parse(slurp(kRoot / "a" / "manifest_build-vocab.json"));
  CHECK(m["config"]["tokenizer"]["vocab_max_size"] == 120);
  REQUIRE(cli("build-vocab -q --config run.ini --vocab-size 90 --labeled syn/labeled.jsonl --out b").code == 0);
  m = json::parse(slurp(kRoot / "b" / "manifest_build-vocab.json"));
  CHECK(m["config"]["tokenizer"]["vocab_max_size"] == 90);
}

TEST_CASE("vocabulary never sees held-out examples") {
  fresh();
  // Every example carries a letter that occurs nowhere else.
  std::string labeled;
  std::vector<std::string> letters;
  for (int i = 0; i < 24; ++i) {
    const char32_t cp = U'Ѐ' + static_cast<char32_t>(i);  // Cyrillic block
    std::string letter;
    letter += static_cast<char>(0xC0 | (cp >> 6));
    letter += static_cast<char>(0x80 | (cp & 0x3F));
    letters.push_back(letter);
    json rec = {{"id", "ex" + std::to_string(i)},
                {"created_at", "2021-08-01T10:00:00Z"},
                {"text", "ortak kelime k" + letter + "z"},
                {"label", i % 4}};
    labeled += rec.dump() + "\n";
  }
  write(kRoot / "leak.jsonl", labeled);
  REQUIRE(cli("build-vocab -q --labeled leak.jsonl --out run --vocab-size 200").code == 0);
  Vocabulary v = Vocabulary::load(kRoot / "run" / "vocab.txt");
  json split = json::parse(slurp(kRoot / "run" / "split_manifest.json"));
  std::set<std::string> test_ids(split["test_ids"].begin(), split["test_ids"].end());
  CHECK(test_ids.size() == 8);
  for (int i = 0; i < 24; ++i) {
    const bool held_out = test_ids.count("ex" + std::to_string(i)) > 0;
    bool seen = false;
    for (const auto& tok : v.tokens()) seen = seen || tok.find(letters[i]) != std::string::npos;
    INFO("example " << i);
    CHECK(seen != held_out);
  }
}

TEST_CASE("single-day corpus yields one bin and a degenerate peak report") {
  fresh();
  REQUIRE(cli("gen-synthetic -q --out syn --synth-labeled 40 --synth-days 1 --synth-per-day 15").code == 0);
  const std::string common = std::string(" -q --labeled syn/labeled.jsonl --out run") + kSmallModel;
  REQUIRE(cli("build-vocab" + common).code == 0);
  REQUIRE(cli("train --epochs 1" + common).code == 0);
  REQUIRE(cli("classify --corpus syn/corpus.jsonl" + common).code == 0);
  REQUIRE(cli("timeline --classified run/classified.jsonl --out tl -q").code == 0);
  const std::string csv = slurp(kRoot / "tl" / "timeline.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(json::parse(slurp(kRoot / "tl" / "peaks.json"))["degenerate"] == true);
}

TEST_CASE("gzip corpora are written and read back") {
  fresh();
  REQUIRE(cli("gen-synthetic -q --out syn --synth-labeled 40 --synth-days 2 --synth-per-day 10 "
              "--synth-gzip")
              .code == 0);
  CHECK(fs::exists(kRoot / "syn" / "corpus.jsonl.gz"));
  const std::string common = std::string(" -q --labeled syn/labeled.jsonl --out run") + kSmallModel;
  REQUIRE(cli("build-vocab" + common).code == 0);
  REQUIRE(cli("train --epochs 1" + common).code == 0);
  REQUIRE(cli("classify --corpus syn/corpus.jsonl.gz" + common).code == 0);
  CHECK(fs::file_size(kRoot / "run" / "classified.jsonl") > 0);
}
