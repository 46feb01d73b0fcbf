#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "vaxsurge/checkpoint.h"
#include "vaxsurge/error.h"
#include "vaxsurge/random.h"
#include "vaxsurge/synthetic.h"
#include "vaxsurge/timeline.h"

using namespace vaxsurge;
using namespace std::chrono;

namespace {

ClassifiedTweet at(const std::string& when, Category c) {
  ClassifiedTweet t;
  t.id = when + std::to_string(index_of(c));
  t.created_at = *parse_iso8601(when);
  t.predicted = c;
  t.proba[index_of(c)] = 1.0;
  return t;
}

std::vector<DailyShare> series(std::initializer_list<double> xs) {
  std::vector<DailyShare> out;
  for (double x : xs) out.push_back({x, false});
  return out;
}

std::vector<std::size_t> indices(const PeakDetection& d) {
  std::vector<std::size_t> out;
  for (const auto& p : d.peaks) out.push_back(p.index);
  std::sort(out.begin(), out.end());
  return out;
}

// Brute force over the non-empty days: a maximum's prominence is its height
// minus the best (highest) path minimum to any strictly higher day, or minus
// the series minimum when it is the tallest.
std::vector<Peak> brute_force_peaks(const std::vector<DailyShare>& s, double min_prom) {
  std::vector<std::size_t> where;
  std::vector<double> v;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i].empty) {
      where.push_back(i);
      v.push_back(s[i].percent);
    }
  }
  const double lowest = *std::min_element(v.begin(), v.end());
  const std::size_t top = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  std::vector<Peak> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i - 1] == v[i]) continue;  // plateaus count at their left end
    std::size_t k = i;
    while (k + 1 < v.size() && v[k + 1] == v[i]) ++k;
    if (i == 0 && k + 1 == v.size()) continue;
    if ((i > 0 && v[i - 1] > v[i]) || (k + 1 < v.size() && v[k + 1] > v[i])) continue;
    double col = -INFINITY;
    bool higher = false;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] <= v[i]) continue;
      higher = true;
      double m = v[i];
      for (std::size_t x = std::min(i, j); x <= std::max(i, j); ++x) m = std::min(m, v[x]);
      col = std::max(col, m);
    }
    const double prom = v[i] - (higher ? col : lowest);
    if (i == top || prom >= min_prom) out.push_back({where[i], v[i], prom});
  }
  std::sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) {
    return a.share > b.share || (a.share == b.share && a.index < b.index);
  });
  return out;
}

EncoderConfig small_config(int vocab) {
  EncoderConfig c;
  c.vocab_size = vocab;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_len = 16;
  return c;
}

}  // namespace

TEST_CASE("daily bins use the local calendar day") {
  std::vector<ClassifiedTweet> same_day = {at("2021-07-28T01:00:00+03:00", Category::kNews),
                                           at("2021-07-28T12:00:00+03:00", Category::kNews),
                                           at("2021-07-28T23:00:00+03:00", Category::kProVaccine)};
  auto s = aggregate_daily(same_day, 180);
  REQUIRE(s.bins.size() == 1);
  CHECK(s.bins[0].total == 3);
  CHECK(s.bins[0].counts[0] == 2);
  CHECK(format_date(s.bins[0].date) == "2021-07-28");

  std::vector<ClassifiedTweet> late = {at("2021-07-28T23:30:00Z", Category::kNews)};
  CHECK(format_date(aggregate_daily(late, 180).bins[0].date) == "2021-07-29");
  CHECK(format_date(aggregate_daily(late, 0).bins[0].date) == "2021-07-28");
  CHECK(format_date(aggregate_daily(late, -60).bins[0].date) == "2021-07-28");

  CHECK_THROWS_AS(aggregate_daily({}, 180), DataError);
}

TEST_CASE("gaps between days are zero-filled") {
  std::vector<ClassifiedTweet> t = {at("2021-08-01T12:00:00Z", Category::kNews),
                                    at("2021-08-04T12:00:00Z", Category::kAntiVaccine)};
  auto s = aggregate_daily(t, 180);
  REQUIRE(s.bins.size() == 4);
  CHECK(s.bins[1].total == 0);
  CHECK(s.bins[2].total == 0);
  for (std::size_t i = 1; i < s.bins.size(); ++i) CHECK(s.bins[i].date == s.bins[i - 1].date + days{1});
  auto shares = share(s, Category::kAntiVaccine);
  CHECK(shares[1].empty);
  CHECK(shares[1].percent == 0.0);
  CHECK(shares[3].percent == 100.0);

  const std::string csv = timeline_csv(s);
  CHECK(csv.rfind("date,count_news,count_irrelevant,count_anti,count_pro,total,share_anti_pct,"
                  "empty_flag\n", 0) == 0);
  CHECK(csv.find("2021-08-02,0,0,0,0,0,0.000000,1\n") != std::string::npos);
}

TEST_CASE("shares per category") {
  TimelineSeries s;
  DailyBin a{Date{year{2021} / 8 / 1}, {1, 1, 1, 1}, 4};
  DailyBin b{Date{year{2021} / 8 / 2}, {0, 0, 2, 2}, 4};
  s.bins = {a, b};
  for (Category c : kAllCategories) CHECK(share(s, c)[0].percent == 25.0);
  CHECK(share(s, Category::kAntiVaccine)[1].percent == 50.0);
}

TEST_CASE("smoothing averages non-empty neighbours") {
  std::vector<DailyShare> s = {{10, false}, {0, true}, {40, false}, {20, false}};
  auto one = smooth(s, 1);
  CHECK(one.size() == 4);
  CHECK(one[2].percent == 40);
  auto three = smooth(s, 3);
  CHECK(three[0].percent == 10);
  CHECK(three[1].percent == 0);
  CHECK(three[1].empty);
  CHECK(three[2].percent == 30);
  CHECK(three[3].percent == 30);
  CHECK_THROWS_AS(smooth(s, 2), UsageError);
}

TEST_CASE("peak detection hand cases") {
  auto single = detect_peaks(series({10, 20, 50, 20, 10}));
  CHECK(single.global_max_index == 2);
  CHECK_FALSE(single.degenerate);
  REQUIRE(single.peaks.size() == 1);
  CHECK(single.peaks[0].index == 2);
  CHECK(single.peaks[0].prominence == 40);

  auto twin = detect_peaks(series({10, 40, 10, 35, 10}), 20);
  CHECK(indices(twin) == std::vector<std::size_t>{1, 3});
  CHECK(twin.peaks[0].index == 1);
  CHECK(twin.peaks[1].prominence == 25);
  CHECK(indices(detect_peaks(series({10, 40, 10, 35, 10}), 30)) == std::vector<std::size_t>{1});

  auto flat = detect_peaks(series({7, 7, 7, 7}));
  CHECK(flat.degenerate);
  CHECK(flat.global_max_index == 0);
  CHECK(flat.global_max_share == 7);
  CHECK(flat.peaks.empty());

  auto plateau = detect_peaks(series({1, 5, 5, 5, 1}));
  REQUIRE(plateau.peaks.size() == 1);
  CHECK(plateau.peaks[0].index == 1);

  auto edge = detect_peaks(series({9, 1, 2, 1, 8}), 0);
  CHECK(indices(edge) == std::vector<std::size_t>{0, 2, 4});

  std::vector<DailyShare> gappy = {{10, false}, {0, true}, {30, false}, {0, true}, {10, false}};
  auto g = detect_peaks(gappy);
  CHECK(indices(g) == std::vector<std::size_t>{2});
}

TEST_CASE("peak detection agrees with a brute-force prominence scan") {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(25);
    std::vector<DailyShare> s(n);
    for (auto& d : s) {
      d.percent = static_cast<double>(rng.uniform_index(12)) * 5;
      d.empty = rng.uniform() < 0.1;
      if (d.empty) d.percent = 0;
    }
    s[rng.uniform_index(n)].empty = false;
    const double min_prom = static_cast<double>(rng.uniform_index(4)) * 5;
    auto got = detect_peaks(s, min_prom, 100);
    auto want = brute_force_peaks(s, min_prom);
    INFO("trial " << trial);
    REQUIRE(got.peaks.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(got.peaks[k].index == want[k].index);
      CHECK(got.peaks[k].prominence == want[k].prominence);
    }
    if (!got.degenerate) {
      CHECK(std::any_of(got.peaks.begin(), got.peaks.end(),
                        [&](const Peak& p) { return p.index == got.global_max_index; }));
    }

    // Adding a constant leaves every index unchanged.
    auto shifted = s;
    for (auto& d : shifted) d.percent += 3.5;
    CHECK(indices(detect_peaks(shifted, min_prom, 100)) == indices(got));
  }
}

TEST_CASE("top_k keeps the highest peaks") {
  auto d = detect_peaks(series({0, 9, 0, 5, 0, 7, 0, 3, 0}), 1, 2);
  REQUIRE(d.peaks.size() == 2);
  CHECK(d.peaks[0].index == 1);
  CHECK(d.peaks[1].index == 5);
}

TEST_CASE("two injected surges are recovered from labeled synthetic days") {
  SyntheticSpec spec;
  spec.tweets_per_day = 120;
  auto corpus = synthetic_corpus(spec);
  std::vector<ClassifiedTweet> classified;
  for (const auto& t : corpus) {
    ClassifiedTweet c;
    c.id = t.id;
    c.created_at = t.created_at;
    c.predicted = *t.gold_label;
    classified.push_back(c);
  }
  auto s = aggregate_daily(classified, spec.utc_offset_minutes);
  CHECK(s.bins.size() == 30);
  std::uint64_t total = 0;
  for (const auto& b : s.bins) {
    std::uint64_t sum = 0;
    for (auto c : b.counts) sum += c;
    CHECK(sum == b.total);
    total += b.total;
  }
  CHECK(total == corpus.size());
  auto report = find_peaks(s, Category::kAntiVaccine);
  REQUIRE(report.local_maxima.size() >= 2);
  std::vector<std::string> top = {format_date(report.local_maxima[0].date),
                                  format_date(report.local_maxima[1].date)};
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<std::string>{"2021-08-11", "2021-08-19"});
  const std::string json = peak_report_json(report);
  CHECK(json.find("2021-08-11") != std::string::npos);
  CHECK(json.find("\"min_prominence_pct\"") != std::string::npos);
}

TEST_CASE("single-day corpus is degenerate") {
  std::vector<ClassifiedTweet> t = {at("2021-08-01T12:00:00Z", Category::kAntiVaccine)};
  auto r = find_peaks(aggregate_daily(t), Category::kAntiVaccine);
  CHECK(r.degenerate);
  CHECK(format_date(r.global_max_date) == "2021-08-01");
}

TEST_CASE("classification is batch-size independent and checks the vocabulary") {
  std::vector<std::string> tokens = {"aşı", "olmak", "##lar", "haber", "maç", "!"};
  Vocabulary vocab(tokens);
  ModelParams params = init_params(small_config(static_cast<int>(vocab.size())), 4);
  std::vector<Tweet> tweets;
  const std::vector<std::string> texts = {"aşılar", "haber", "maç !", "aşı olmak", "bilinmeyen",
                                          "haber haber", "aşılar", "!", "maç maç maç", "olmak"};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    tweets.push_back({"t" + std::to_string(i), *parse_iso8601("2021-08-01T12:00:00Z"), texts[i],
                      std::nullopt});
  }
  auto a = classify_tweets(params, vocab, tweets, {3, 1});
  auto b = classify_tweets(params, vocab, tweets, {10, 1});
  auto c = classify_tweets(params, vocab, tweets, {1, 4});
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a[0].proba == a[6].proba);  // duplicate texts
  for (const auto& r : a) {
    double sum = 0;
    for (double p : r.proba) sum += p;
    CHECK(std::abs(sum - 1) <= 1e-9);
    CHECK(index_of(r.predicted) ==
          static_cast<int>(std::max_element(r.proba.begin(), r.proba.end()) - r.proba.begin()));
  }
  CHECK(classify_tweets(params, vocab, {}).empty());

  auto round = parse_classified_jsonl(classified_jsonl(a));
  REQUIRE(round.size() == a.size());
  CHECK(round[3].id == a[3].id);
  CHECK(round[3].predicted == a[3].predicted);
  CHECK(round[3].proba[2] == doctest::Approx(a[3].proba[2]).epsilon(1e-12));

  Checkpoint good{params, {vocab.sha256(), 0}};
  CHECK(classify_corpus(good, vocab, tweets) == a);
  Checkpoint bad{params, {std::string(64, '0'), 0}};
  CHECK_THROWS_WITH_AS(classify_corpus(bad, vocab, tweets), doctest::Contains("vocab"), DataError);
}
