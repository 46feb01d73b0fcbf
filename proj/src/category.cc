#include "vaxsurge/category.h"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace vaxsurge {

namespace {

constexpr std::array<std::string_view, kNumCategories> kNames = {
    "News", "Irrelevant", "AntiVaccine", "ProVaccine"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view category_name(Category c) { return kNames[index_of(c)]; }

std::optional<Category> category_from_index(long long value) {
  if (value < 0 || value >= kNumCategories) return std::nullopt;
  return static_cast<Category>(value);
}

std::optional<Category> parse_category(std::string_view text) {
  long long value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc() && end == text.data() + text.size()) {
    return category_from_index(value);
  }
  for (Category c : kAllCategories) {
    if (iequals(text, category_name(c))) return c;
  }
  return std::nullopt;
}

}  // namespace vaxsurge
