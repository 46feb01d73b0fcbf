#include "vaxsurge/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "vaxsurge/error.h"
#include "vaxsurge/hash.h"
#include "vaxsurge/text.h"

namespace vaxsurge {

namespace {

constexpr std::string_view kSpecials[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

std::string_view strip_continuation(std::string_view s) {
  if (s.starts_with(Vocabulary::kContinuation)) s.remove_prefix(Vocabulary::kContinuation.size());
  return s;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (auto s : kSpecials) add(std::string(s));
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) {
    if (t.empty()) throw DataError("vocabulary: empty token");
    if (t.find_first_of("\r\n") != std::string::npos) {
      throw DataError("vocabulary: token contains a line break");
    }
    if (contains(t)) throw DataError("vocabulary: duplicate token '" + t + "'");
    add(t);
  }
}

void Vocabulary::add(std::string token) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

TokenId Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::from_text(std::string_view content) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    lines.emplace_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.size() < kNumSpecials) throw DataError("vocabulary: fewer than four lines");
  for (int i = 0; i < kNumSpecials; ++i) {
    if (lines[i] != kSpecials[i]) {
      throw DataError("vocabulary: line " + std::to_string(i + 1) + " must be " +
                      std::string(kSpecials[i]));
    }
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + kNumSpecials, lines.end()));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << to_text();
}

std::string Vocabulary::sha256() const { return sha256_hex(to_text()); }

namespace {

// Merge state over the distinct words of the corpus.
class MergeTrainer {
 public:
  explicit MergeTrainer(const std::map<std::string, std::uint64_t>& word_freq) {
    for (const auto& [word, freq] : word_freq) {
      auto cps = text::code_points(word);
      std::vector<int> symbols;
      symbols.reserve(cps.size());
      for (std::size_t i = 0; i < cps.size(); ++i) {
        symbols.push_back(intern(i == 0 ? cps[i] : std::string(Vocabulary::kContinuation) + cps[i]));
      }
      words_.push_back({std::move(symbols), freq});
    }
    for (std::size_t w = 0; w < words_.size(); ++w) account(w, +1);
  }

  std::vector<std::string> seed_symbols() const {
    std::vector<std::string> seeds = names_;
    std::sort(seeds.begin(), seeds.end());
    return seeds;
  }

  // Best admissible pair, or false when none has freq >= min_freq.
  bool best_pair(std::uint64_t min_freq, int& left, int& right) const {
    bool found = false;
    std::int64_t best_f = 0, best_l = 1, best_r = 1;
    for (const auto& [key, f] : pair_freq_) {
      if (f <= 0 || static_cast<std::uint64_t>(f) < min_freq) continue;
      int l = static_cast<int>(key >> 32);
      int r = static_cast<int>(key & 0xffffffffu);
      std::int64_t fl = symbol_freq_[l], fr = symbol_freq_[r];
      if (!found) {
        found = true;
      } else {
        // score = f / (fl * fr); compare by cross-multiplication.
        __int128 lhs = static_cast<__int128>(f) * best_l * best_r;
        __int128 rhs = static_cast<__int128>(best_f) * fl * fr;
        if (lhs < rhs) continue;
        if (lhs == rhs) {
          const auto& a = names_[l];
          const auto& b = names_[left];
          if (a > b || (a == b && names_[r] >= names_[right])) continue;
        }
      }
      best_f = f;
      best_l = fl;
      best_r = fr;
      left = l;
      right = r;
    }
    return found;
  }

  // Applies the merge everywhere and returns the merged token string.
  std::string merge(int left, int right) {
    std::string merged = names_[left] + std::string(strip_continuation(names_[right]));
    int target = intern(merged);
    auto it = pair_words_.find(key(left, right));
    std::vector<std::size_t> candidates = it == pair_words_.end() ? std::vector<std::size_t>{}
                                                                   : it->second;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::size_t w : candidates) {
      auto& syms = words_[w].symbols;
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (syms[i] == left && syms[i + 1] == right) {
          present = true;
          break;
        }
      }
      if (!present) continue;
      account(w, -1);
      std::vector<int> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          next.push_back(target);
          ++i;
        } else {
          next.push_back(syms[i]);
        }
      }
      syms = std::move(next);
      account(w, +1);
    }
    pair_freq_.erase(key(left, right));
    return merged;
  }

 private:
  struct Word {
    std::vector<int> symbols;
    std::uint64_t freq;
  };

  static std::uint64_t key(int l, int r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) |
           static_cast<std::uint32_t>(r);
  }

  int intern(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, static_cast<int>(names_.size()));
    if (inserted) {
      names_.push_back(s);
      symbol_freq_.push_back(0);
    }
    return it->second;
  }

  void account(std::size_t w, int sign) {
    const Word& word = words_[w];
    auto delta = sign * static_cast<std::int64_t>(word.freq);
    for (std::size_t i = 0; i < word.symbols.size(); ++i) {
      symbol_freq_[word.symbols[i]] += delta;
      if (i + 1 < word.symbols.size()) {
        auto k = key(word.symbols[i], word.symbols[i + 1]);
        auto& f = pair_freq_[k];
        f += delta;
        if (f == 0) pair_freq_.erase(k);
        if (sign > 0) pair_words_[k].push_back(w);
      }
    }
  }

  std::vector<Word> words_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
  std::vector<std::int64_t> symbol_freq_;
  std::unordered_map<std::uint64_t, std::int64_t> pair_freq_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> pair_words_;
};

}  // namespace

Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t max_size,
                       std::uint64_t min_pair_freq) {
  if (texts.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, std::uint64_t> word_freq;
  std::unordered_set<std::string> chars;
  for (const auto& t : texts) {
    for (auto& w : text::pre_tokenize(text::nfc(t))) {
      for (auto& cp : text::code_points(w)) chars.insert(cp);
      ++word_freq[std::move(w)];
    }
  }
  if (word_freq.empty()) throw DataError("build_vocab: corpus has no words");
  if (max_size <= chars.size() + Vocabulary::kNumSpecials) {
    throw UsageError("build_vocab: max_size " + std::to_string(max_size) +
                     " must exceed distinct characters + 4 = " +
                     std::to_string(chars.size() + Vocabulary::kNumSpecials));
  }

  MergeTrainer trainer(word_freq);
  std::vector<std::string> tokens = trainer.seed_symbols();
  std::unordered_set<std::string> present(tokens.begin(), tokens.end());
  int left = 0, right = 0;
  while (tokens.size() + Vocabulary::kNumSpecials < max_size &&
         trainer.best_pair(std::max<std::uint64_t>(min_pair_freq, 1), left, right)) {
    std::string merged = trainer.merge(left, right);
    if (present.insert(merged).second) tokens.push_back(std::move(merged));
  }
  return Vocabulary(tokens);
}

std::vector<TokenId> wordpiece(const Vocabulary& vocab, std::string_view word) {
  auto cps = text::code_points(word);
  if (cps.empty()) return {};
  if (cps.size() > kMaxCharsPerWord) return {Vocabulary::kUnk};
  std::vector<TokenId> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < cps.size()) {
    TokenId match = -1;
    std::size_t end = cps.size();
    for (; end > start; --end) {
      candidate.assign(start > 0 ? Vocabulary::kContinuation : std::string_view{});
      for (std::size_t k = start; k < end; ++k) candidate += cps[k];
      match = vocab.find(candidate);
      if (match >= 0) break;
    }
    if (match < 0) return {Vocabulary::kUnk};
    pieces.push_back(match);
    start = end;
  }
  return pieces;
}

Encoding encode(const Vocabulary& vocab, std::string_view text, int max_len) {
  if (max_len < 2) throw UsageError("encode: max_len must be at least 2");
  const auto budget = static_cast<std::size_t>(max_len - 2);
  std::vector<TokenId> pieces;
  for (const auto& word : text::pre_tokenize(text::nfc(text))) {
    if (pieces.size() >= budget) break;
    for (TokenId id : wordpiece(vocab, word)) pieces.push_back(id);
  }
  if (pieces.size() > budget) pieces.resize(budget);

  Encoding enc;
  enc.ids.assign(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  enc.mask.assign(static_cast<std::size_t>(max_len), 0);
  enc.ids[0] = Vocabulary::kCls;
  std::copy(pieces.begin(), pieces.end(), enc.ids.begin() + 1);
  enc.ids[pieces.size() + 1] = Vocabulary::kSep;
  enc.n_real = static_cast<int>(pieces.size()) + 2;
  std::fill_n(enc.mask.begin(), enc.n_real, 1);
  return enc;
}

}  // namespace vaxsurge
