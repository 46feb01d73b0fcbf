#include "vaxsurge/corpus.h"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "vaxsurge/error.h"
#include "vaxsurge/random.h"
#include "vaxsurge/text.h"

namespace vaxsurge {

namespace {

using nlohmann::json;

std::string read_plain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string read_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw UsageError("cannot read " + path.string());
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = gzerror(f, &err);
  std::string error = err < 0 ? msg : "";
  gzclose(f);
  if (!error.empty()) throw UsageError("corrupt gzip stream in " + path.string() + ": " + error);
  return out;
}

const json* field(const json& obj, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    auto it = obj.find(n);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

// Returns the reason the record is invalid, or an empty string.
std::string parse_record(const json& obj, Tweet& out) {
  if (!obj.is_object()) return "record is not an object";

  const json* id = field(obj, {"id"});
  if (!id) return "missing field: id";
  if (id->is_string()) {
    out.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    out.id = id->dump();
  } else {
    return "id must be a string or integer";
  }
  if (out.id.empty()) return "invariant violated: id must be non-empty";

  const json* ts = field(obj, {"created_at", "date"});
  if (!ts) return "missing field: created_at";
  if (!ts->is_string()) return "created_at must be a string";
  auto instant = parse_iso8601(ts->get_ref<const std::string&>());
  if (!instant) return "invariant violated: created_at is not a valid ISO-8601 instant";
  out.created_at = *instant;

  const json* txt = field(obj, {"text", "content"});
  if (!txt) return "missing field: text";
  if (!txt->is_string()) return "text must be a string";
  out.text = txt->get<std::string>();
  if (text::is_blank(out.text)) return "invariant violated: text must be non-empty after trimming";

  out.gold_label.reset();
  if (const json* label = field(obj, {"label"})) {
    std::optional<Category> c;
    if (label->is_number_integer()) {
      c = category_from_index(label->get<long long>());
    } else if (label->is_string()) {
      c = parse_category(label->get_ref<const std::string&>());
    }
    if (!c) return "label is not one of 0..3 or a category name";
    out.gold_label = c;
  }
  return {};
}

}  // namespace

IngestResult ingest_jsonl_text(std::string_view content, std::string_view source) {
  IngestResult result;
  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::is_blank(line)) continue;

    Tweet tweet;
    std::string reason;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
      reason = "malformed JSON";
    } else {
      reason = parse_record(obj, tweet);
    }
    if (!reason.empty()) {
      result.rejects.push_back({line_no, std::string(line), std::move(reason)});
      continue;
    }
    auto [it, inserted] = first_line.emplace(tweet.id, line_no);
    if (!inserted) {
      throw DataError(std::string(source) + ": duplicate id '" + tweet.id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    result.tweets.push_back(std::move(tweet));
  }
  return result;
}

IngestResult ingest_jsonl(const std::filesystem::path& path) {
  std::string content = path.extension() == ".gz" ? read_gzip(path) : read_plain(path);
  return ingest_jsonl_text(content, path.string());
}

std::string to_jsonl(const std::vector<Tweet>& tweets) {
  std::string out;
  for (const Tweet& t : tweets) {
    json obj = json::object();
    obj["id"] = t.id;
    obj["created_at"] = format_utc(t.created_at);
    obj["text"] = t.text;
    if (t.gold_label) obj["label"] = index_of(*t.gold_label);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Tweet>& tweets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << to_jsonl(tweets);
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  for (const Reject& r : rejects) {
    json obj = json::parse(r.raw, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      obj = json{{"line", r.line}, {"raw", r.raw}};
    }
    obj["reason"] = r.reason;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

LabeledDataset::LabeledDataset(std::vector<Tweet> examples) : examples_(std::move(examples)) {
  for (const Tweet& t : examples_) {
    if (!t.gold_label) throw DataError("example '" + t.id + "' has no gold label");
    ++counts_[index_of(*t.gold_label)];
  }
}

DatasetSplit split_dataset(const LabeledDataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train fraction must lie strictly between 0 and 1");
  }
  std::array<std::vector<std::size_t>, kNumCategories> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[index_of(data.label(i))].push_back(i);

  std::vector<Tweet> train, test;
  for (int c = 0; c < kNumCategories; ++c) {
    auto& members = by_class[c];
    if (members.size() < 2) {
      throw DataError("class " + std::string(category_name(static_cast<Category>(c))) + " has " +
                      std::to_string(members.size()) + " example(s); cannot stratify");
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span<std::size_t>(members));
    // The epsilon keeps products like 0.7 * 10 from flooring to 6.
    auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(members.size()) + 1e-9));
    for (std::size_t k = 0; k < members.size(); ++k) {
      (k < n_train ? train : test).push_back(data.examples()[members[k]]);
    }
  }
  return DatasetSplit{LabeledDataset(std::move(train)), LabeledDataset(std::move(test)), seed,
                      train_fraction};
}

std::string split_manifest(const DatasetSplit& split) {
  json ids = json::array();
  for (const Tweet& t : split.test.examples()) ids.push_back(t.id);
  json doc = {{"seed", split.seed},
              {"train_fraction", split.train_fraction},
              {"train_counts", split.train.class_counts()},
              {"test_counts", split.test.class_counts()},
              {"test_ids", ids}};
  return doc.dump(2) + "\n";
}

}  // namespace vaxsurge
