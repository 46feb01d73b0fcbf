#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vaxsurge::text {

// Unicode NFC. Invalid UTF-8 sequences become U+FFFD.
std::string nfc(std::string_view utf8);

// Splits into code points, each returned as its UTF-8 encoding.
std::vector<std::string> code_points(std::string_view utf8);

bool is_whitespace(char32_t cp);
// ASCII symbol characters count as punctuation alongside the Unicode P* classes.
bool is_punctuation(char32_t cp);
bool is_control(char32_t cp);

// Whitespace-and-punctuation pre-tokenization; each punctuation mark is its
// own word. Control characters are dropped. Input is expected in NFC.
std::vector<std::string> pre_tokenize(std::string_view utf8);

// True when the text has no code point other than whitespace.
bool is_blank(std::string_view utf8);

}  // namespace vaxsurge::text
