#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vaxsurge/category.h"
#include "vaxsurge/corpus.h"
#include "vaxsurge/random.h"

namespace vaxsurge {

// Seeded stand-in for the scraped corpus. Every text carries two keywords
// specific to its category among shared filler words, so the classes are
// keyword-separable.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t labeled_examples = 400;
  Date start_date = Date{std::chrono::year{2021} / std::chrono::July / 22};
  int days = 30;
  std::size_t tweets_per_day = 500;
  // Baseline category mix, proportional to class counts 93/406/583/424.
  std::array<double, kNumCategories> base_mix = {93.0 / 1506, 406.0 / 1506, 583.0 / 1506,
                                                 424.0 / 1506};
  // Zero-based day offsets from start_date with an anti-vaccine surge.
  std::vector<int> spike_days = {20, 28};
  double spike_anti_share = 0.70;
  double spike_volume_factor = 1.5;
  // Timestamps are written in this local offset.
  int utc_offset_minutes = 180;
};

std::string synthetic_text(Category category, Rng& rng);

// Balanced labeled examples (labels cycle through the four categories).
std::vector<Tweet> synthetic_labeled(const SyntheticSpec& spec);

// Timestamped corpus with gold labels; spike days shift the mix toward
// AntiVaccine and raise the volume.
std::vector<Tweet> synthetic_corpus(const SyntheticSpec& spec);

// "YYYY-MM-DDTHH:MM:SS+HH:MM" in the given offset.
std::string format_with_offset(Instant t, int utc_offset_minutes);

// Records as written by gen-synthetic: local-offset timestamps plus label.
std::string synthetic_jsonl(const std::vector<Tweet>& tweets, int utc_offset_minutes);

}  // namespace vaxsurge
