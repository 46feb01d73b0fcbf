#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace vaxsurge {

// The four stance categories. Values are fixed and double as tensor indices.
enum class Category : std::uint8_t {
  kNews = 0,
  kIrrelevant = 1,
  kAntiVaccine = 2,
  kProVaccine = 3,
};

inline constexpr int kNumCategories = 4;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kNews, Category::kIrrelevant, Category::kAntiVaccine,
    Category::kProVaccine};

constexpr int index_of(Category c) { return static_cast<int>(c); }

std::string_view category_name(Category c);

// Accepts an integer 0..3 (as text) or a canonical name, case-insensitive.
std::optional<Category> parse_category(std::string_view text);
std::optional<Category> category_from_index(long long value);

}  // namespace vaxsurge
