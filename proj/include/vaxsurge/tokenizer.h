#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vaxsurge {

using TokenId = std::int32_t;

// WordPiece token inventory. Ids are line numbers of the vocabulary file;
// the four specials occupy ids 0..3.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr int kNumSpecials = 4;
  static constexpr std::string_view kContinuation = "##";

  Vocabulary();
  // `tokens` excludes the specials. Throws DataError on duplicates, empty
  // tokens, tokens containing line breaks or tokens equal to a special.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  static Vocabulary from_text(std::string_view content);
  static Vocabulary load(const std::filesystem::path& path);

  // One token per line, each line terminated by '\n'.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;
  std::string sha256() const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(std::string_view token) const { return find(token) >= 0; }
  // -1 when absent.
  TokenId find(std::string_view token) const;

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Trains a WordPiece vocabulary. Texts are NFC-normalized and pre-tokenized;
// the seed inventory is every character (word-internal ones with "##"), then
// the adjacent pair with the highest freq(pair) / (freq(left) * freq(right))
// among pairs seen at least `min_pair_freq` times is merged until the
// vocabulary holds `max_size` tokens (specials included). Equal scores go to
// the lexicographically smallest (left, right) pair.
Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t max_size,
                       std::uint64_t min_pair_freq = 2);

struct Encoding {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;
  int n_real = 0;

  std::size_t max_len() const { return ids.size(); }
  friend bool operator==(const Encoding&, const Encoding&) = default;
};

inline constexpr int kDefaultMaxLen = 64;
// Longer words encode as a single [UNK].
inline constexpr std::size_t kMaxCharsPerWord = 100;

// Greedy longest-match WordPiece pieces for one pre-tokenized word; a word
// with an unmatched position becomes {[UNK]}.
std::vector<TokenId> wordpiece(const Vocabulary& vocab, std::string_view word);

// [CLS] pieces... [SEP] then [PAD] up to max_len; pieces beyond max_len - 2
// are dropped. Case is preserved. Throws UsageError when max_len < 2.
Encoding encode(const Vocabulary& vocab, std::string_view text, int max_len = kDefaultMaxLen);

}  // namespace vaxsurge
