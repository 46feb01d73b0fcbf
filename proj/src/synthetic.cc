#include "vaxsurge/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "json.hpp"
#include "vaxsurge/error.h"

namespace vaxsurge {

namespace {

using Words = std::vector<std::string_view>;

const std::array<Words, kNumCategories>& keywords() {
  static const std::array<Words, kNumCategories> k = {
      Words{"#sondakika", "açıklama", "bakanlık", "istatistik", "rapor", "#haber", "vaka",
            "tablo"},
      Words{"kahve", "maç", "tatil", "film", "hava", "oyun", "dizi", "yemek"},
      Words{"zorbalık", "dayatma", "#asiolmayacağım", "reddediyorum", "deney", "zehir",
            "yasak", "baskı"},
      Words{"#asiol", "#birliktebaşaracağız", "koruyor", "teşekkürler", "güvenli", "randevu",
            "bağışıklık", "sağlık"},
  };
  return k;
}

const Words& fillers() {
  static const Words f = {"bugün", "aşı", "için", "ve",  "bir",   "çok",  "ama",   "daha",
                          "herkes", "yine", "şimdi", "doz", "covid", "bence", "artık", "gibi"};
  return f;
}

Category draw_category(const std::array<double, kNumCategories>& mix, Rng& rng) {
  double u = rng.uniform();
  for (int c = 0; c < kNumCategories - 1; ++c) {
    if (u < mix[c]) return static_cast<Category>(c);
    u -= mix[c];
  }
  return static_cast<Category>(kNumCategories - 1);
}

std::array<double, kNumCategories> normalized(std::array<double, kNumCategories> mix) {
  double sum = 0;
  for (double v : mix) sum += v;
  if (!(sum > 0)) throw UsageError("synthetic: category mix must have positive mass");
  for (double& v : mix) v /= sum;
  return mix;
}

}  // namespace

std::string synthetic_text(Category category, Rng& rng) {
  const Words& own = keywords()[index_of(category)];
  const Words& fill = fillers();
  std::vector<std::string_view> words;
  const std::size_t n_fill = 3 + rng.uniform_index(4);
  for (std::size_t i = 0; i < n_fill; ++i) words.push_back(fill[rng.uniform_index(fill.size())]);
  for (int k = 0; k < 2; ++k) {
    auto pos = static_cast<std::ptrdiff_t>(rng.uniform_index(words.size() + 1));
    words.insert(words.begin() + pos, own[rng.uniform_index(own.size())]);
  }
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text += ' ';
    text += words[i];
  }
  if (rng.uniform() < 0.3) text += rng.uniform() < 0.5 ? "!" : ".";
  return text;
}

std::vector<Tweet> synthetic_labeled(const SyntheticSpec& spec) {
  Rng rng(mix_seed(spec.seed, 1));
  std::vector<Tweet> out;
  out.reserve(spec.labeled_examples);
  const Instant base = spec.start_date;
  const std::int64_t span_seconds = std::max(1, spec.days) * 86400LL;
  for (std::size_t i = 0; i < spec.labeled_examples; ++i) {
    const auto c = static_cast<Category>(i % kNumCategories);
    char id[32];
    std::snprintf(id, sizeof id, "lab-%06zu", i);
    Instant t = base + std::chrono::seconds(static_cast<std::int64_t>(
                           rng.uniform_index(static_cast<std::uint64_t>(span_seconds))));
    out.push_back({id, t - std::chrono::minutes(spec.utc_offset_minutes), synthetic_text(c, rng), c});
  }
  return out;
}

std::vector<Tweet> synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.days < 1) throw UsageError("synthetic: days must be positive");
  if (!(spec.spike_anti_share >= 0.0 && spec.spike_anti_share <= 1.0)) {
    throw UsageError("synthetic: spike share must lie in [0, 1]");
  }
  const auto base = normalized(spec.base_mix);
  auto spiked = base;
  {
    const double rest = 1.0 - base[index_of(Category::kAntiVaccine)];
    for (int c = 0; c < kNumCategories; ++c) {
      spiked[c] = c == index_of(Category::kAntiVaccine)
                      ? spec.spike_anti_share
                      : (rest > 0 ? base[c] / rest * (1.0 - spec.spike_anti_share) : 0.0);
    }
  }
  Rng rng(mix_seed(spec.seed, 2));
  std::vector<Tweet> out;
  std::size_t counter = 0;
  for (int day = 0; day < spec.days; ++day) {
    const bool spike = std::find(spec.spike_days.begin(), spec.spike_days.end(), day) !=
                       spec.spike_days.end();
    // +-20% volume jitter
    const double jitter = 0.8 + 0.4 * rng.uniform();
    double volume = static_cast<double>(spec.tweets_per_day) * jitter;
    if (spike) volume *= spec.spike_volume_factor;
    const auto n = static_cast<std::size_t>(volume);
    // Local midnight of this day, expressed in UTC.
    const Instant day_start = Instant(spec.start_date + std::chrono::days(day)) -
                              std::chrono::minutes(spec.utc_offset_minutes);
    std::vector<Instant> times(n);
    for (auto& t : times) t = day_start + std::chrono::seconds(rng.uniform_index(86400));
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i < n; ++i) {
      const Category c = draw_category(spike ? spiked : base, rng);
      char id[32];
      std::snprintf(id, sizeof id, "c-%09zu", counter++);
      out.push_back({id, times[i], synthetic_text(c, rng), c});
    }
  }
  return out;
}

std::string format_with_offset(Instant t, int utc_offset_minutes) {
  std::string local = format_utc(t + std::chrono::minutes(utc_offset_minutes));
  local.pop_back();  // 'Z'
  const int a = std::abs(utc_offset_minutes);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", utc_offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
  return local + buf;
}

std::string synthetic_jsonl(const std::vector<Tweet>& tweets, int utc_offset_minutes) {
  std::string out;
  for (const Tweet& t : tweets) {
    nlohmann::ordered_json obj = {{"id", t.id},
                                  {"created_at", format_with_offset(t.created_at, utc_offset_minutes)},
                                  {"text", t.text}};
    if (t.gold_label) obj["label"] = index_of(*t.gold_label);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace vaxsurge
