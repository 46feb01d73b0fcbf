#include "vaxsurge/text.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace vaxsurge::text {

namespace {

template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    int32_t start = i;
    UChar32 cp;
    U8_NEXT(bytes, i, length, cp);
    fn(cp < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(cp), s.substr(start, i - start),
       cp < 0);
  }
}

void append_utf8(std::string& out, char32_t cp) {
  icu::UnicodeString(static_cast<UChar32>(cp)).toUTF8String(out);
}

}  // namespace

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::vector<std::string> code_points(std::string_view utf8) {
  std::vector<std::string> out;
  out.reserve(utf8.size());
  for_each_code_point(utf8, [&](char32_t cp, std::string_view raw, bool bad) {
    if (bad) {
      std::string s;
      append_utf8(s, cp);
      out.push_back(std::move(s));
    } else {
      out.emplace_back(raw);
    }
  });
  return out;
}

bool is_whitespace(char32_t cp) {
  return cp == U'\t' || cp == U'\n' || cp == U'\r' || u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_punctuation(char32_t cp) {
  if ((cp >= 33 && cp <= 47) || (cp >= 58 && cp <= 64) || (cp >= 91 && cp <= 96) ||
      (cp >= 123 && cp <= 126)) {
    return true;
  }
  return u_ispunct(static_cast<UChar32>(cp));
}

bool is_control(char32_t cp) {
  if (cp == U'\t' || cp == U'\n' || cp == U'\r') return false;
  int8_t type = u_charType(static_cast<UChar32>(cp));
  return type == U_CONTROL_CHAR || type == U_FORMAT_CHAR;
}

std::vector<std::string> pre_tokenize(std::string_view utf8) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for_each_code_point(utf8, [&](char32_t cp, std::string_view raw, bool bad) {
    if (is_whitespace(cp)) {
      flush();
    } else if (!bad && is_control(cp)) {
      // dropped
    } else if (is_punctuation(cp)) {
      flush();
      words.emplace_back(raw);
    } else if (bad) {
      append_utf8(current, cp);
    } else {
      current.append(raw);
    }
  });
  flush();
  return words;
}

bool is_blank(std::string_view utf8) {
  bool blank = true;
  for_each_code_point(utf8, [&](char32_t cp, std::string_view, bool) {
    if (!is_whitespace(cp)) blank = false;
  });
  return blank;
}

}  // namespace vaxsurge::text
