#include "vaxsurge/timeutil.h"

#include <cstdio>

namespace vaxsurge {

namespace {

using namespace std::chrono;

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  // Exactly `n` decimal digits.
  std::optional<int> digits(int n) {
    if (pos_ + n > s_.size()) return std::nullopt;
    int v = 0;
    for (int i = 0; i < n; ++i) {
      char c = s_[pos_ + i];
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    pos_ += n;
    return v;
  }
  void skip_digits() {
    while (!done() && peek() >= '0' && peek() <= '9') ++pos_;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<sys_days> parse_ymd(Cursor& c) {
  auto y = c.digits(4);
  if (!y || !c.accept('-')) return std::nullopt;
  auto m = c.digits(2);
  if (!m || !c.accept('-')) return std::nullopt;
  auto d = c.digits(2);
  if (!d) return std::nullopt;
  year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)},
                     day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

}  // namespace

std::optional<Instant> parse_iso8601(std::string_view text) {
  Cursor c(text);
  auto date = parse_ymd(c);
  if (!date) return std::nullopt;
  if (!c.accept('T') && !c.accept(' ')) return std::nullopt;
  auto hh = c.digits(2);
  if (!hh || !c.accept(':')) return std::nullopt;
  auto mm = c.digits(2);
  if (!mm) return std::nullopt;
  int ss = 0;
  if (c.accept(':')) {
    auto s = c.digits(2);
    if (!s) return std::nullopt;
    ss = *s;
    if (c.accept('.') || c.accept(',')) c.skip_digits();
  }
  if (*hh > 23 || *mm > 59 || ss > 60) return std::nullopt;

  int offset_minutes = 0;
  if (c.accept('Z') || c.accept('z')) {
  } else if (c.peek() == '+' || c.peek() == '-') {
    int sign = c.peek() == '+' ? 1 : -1;
    c.accept(c.peek());
    auto oh = c.digits(2);
    if (!oh) return std::nullopt;
    int om = 0;
    if (c.accept(':')) {
      auto m = c.digits(2);
      if (!m) return std::nullopt;
      om = *m;
    } else if (!c.done()) {
      auto m = c.digits(2);
      if (!m) return std::nullopt;
      om = *m;
    }
    if (*oh > 23 || om > 59) return std::nullopt;
    offset_minutes = sign * (*oh * 60 + om);
  }
  if (!c.done()) return std::nullopt;

  Instant local = *date + hours{*hh} + minutes{*mm} + seconds{ss};
  return local - minutes{offset_minutes};
}

std::string format_utc(Instant t) {
  sys_days d = floor<days>(t);
  year_month_day ymd{d};
  hh_mm_ss hms{t - d};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<Date> parse_date(std::string_view text) {
  Cursor c(text);
  auto d = parse_ymd(c);
  if (!d || !c.done()) return std::nullopt;
  return *d;
}

Date local_date(Instant t, int utc_offset_minutes) {
  return floor<days>(t + minutes{utc_offset_minutes});
}

}  // namespace vaxsurge
