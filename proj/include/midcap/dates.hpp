#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace midcap {

// Calendar date at day resolution. Panel data is monthly (observations
// stamped on the first trading day of the month), so most arithmetic
// happens on the month index; the day is kept for exact as-of cutoffs
// and serialization.
struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  auto operator<=>(const Date&) const = default;

  // Months since year 0; adjacent panel observations differ by 1.
  int month_index() const { return year * 12 + (month - 1); }

  Date add_months(int n) const;

  std::string to_string() const;  // ISO-8601, YYYY-MM-DD

  static Date parse(const std::string& iso);        // throws ParseError
  static Date from_month_index(int idx, int day = 1);
};

// True when a and b fall in the same calendar month.
inline bool same_month(const Date& a, const Date& b) {
  return a.month_index() == b.month_index();
}

}  // namespace midcap
