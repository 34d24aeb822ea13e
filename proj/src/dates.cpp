#include "midcap/dates.hpp"

#include <charconv>
#include <cstdio>

#include "midcap/errors.hpp"

namespace midcap {

Date Date::add_months(int n) const {
  return from_month_index(month_index() + n, day);
}

Date Date::from_month_index(int idx, int day) {
  Date d;
  d.year = idx / 12;
  d.month = idx % 12 + 1;
  d.day = day;
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

Date Date::parse(const std::string& iso) {
  // Strict YYYY-MM-DD.
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw ParseError("invalid date '" + iso + "' (expected YYYY-MM-DD)");
  }
  Date d;
  auto field = [&](int begin, int len, int& out) {
    auto res = std::from_chars(iso.data() + begin, iso.data() + begin + len, out);
    if (res.ec != std::errc{} || res.ptr != iso.data() + begin + len) {
      throw ParseError("invalid date '" + iso + "' (expected YYYY-MM-DD)");
    }
  };
  field(0, 4, d.year);
  field(5, 2, d.month);
  field(8, 2, d.day);
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
    throw ParseError("invalid date '" + iso + "' (month or day out of range)");
  }
  return d;
}

}  // namespace midcap
