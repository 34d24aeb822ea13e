#include "midcap/features.hpp"

#include <cmath>

#include "midcap/csv.hpp"

namespace midcap {

namespace {

using FeatPtr = std::optional<double> FeatureRow::*;

constexpr FeatPtr kFeaturePtrs[kNumFeatures] = {
    &FeatureRow::ep_ratio,         &FeatureRow::bp_ratio,
    &FeatureRow::ps_ratio,         &FeatureRow::enterprise_value,
    &FeatureRow::ev_to_ebitda,     &FeatureRow::gross_margin,
    &FeatureRow::operating_margin, &FeatureRow::net_margin,
    &FeatureRow::current_ratio,    &FeatureRow::debt_to_equity,
    &FeatureRow::interest_coverage, &FeatureRow::avg_sentiment,
    &FeatureRow::ret_lag,
};

// Division guard: zero or missing denominator yields missing, and any
// non-finite result is demoted to missing so no infinity ever reaches
// the winsorization statistics.
std::optional<double> ratio(std::optional<double> num, std::optional<double> den) {
  if (!num || !den || *den == 0.0) return std::nullopt;
  double v = *num / *den;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "ep_ratio",      "bp_ratio",   "ps_ratio",         "enterprise_value",
      "ev_to_ebitda",  "gross_margin", "operating_margin", "net_margin",
      "current_ratio", "debt_to_equity", "interest_coverage", "avg_sentiment",
      "ret_lag",
  };
  return names;
}

int feature_index(const std::string& name) {
  const auto& names = feature_names();
  for (int i = 0; i < kNumFeatures; ++i)
    if (names[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

std::optional<double>& feature_field(FeatureRow& r, int i) { return r.*(kFeaturePtrs[i]); }

const std::optional<double>& feature_field(const FeatureRow& r, int i) {
  return r.*(kFeaturePtrs[i]);
}

FeatureRow compute_feature_row(const SecurityMonth& row) {
  const Fundamentals& fu = row.fundamentals;
  FeatureRow f;
  f.permno = row.permno;
  f.date = row.date;

  f.ep_ratio = ratio(fu.epspx, row.prc);
  // Book value per share = ceq / (shrout * 1000); shrout is in thousands.
  double shares = row.shrout * 1000.0;
  if (fu.ceq && shares > 0.0) f.bp_ratio = ratio(*fu.ceq / shares, row.prc);
  if (fu.revt && shares > 0.0) f.ps_ratio = ratio(row.prc, *fu.revt / shares);

  if (fu.dltt && fu.dlc && fu.che) {
    double ev = row.market_cap + *fu.dltt + *fu.dlc - *fu.che;
    if (std::isfinite(ev)) f.enterprise_value = ev;
  }
  f.ev_to_ebitda = ratio(f.enterprise_value, fu.ebitda);
  f.gross_margin = ratio(fu.gp, fu.revt);
  f.operating_margin = ratio(fu.oiadp, fu.revt);
  f.net_margin = ratio(fu.ni, fu.revt);
  f.current_ratio = ratio(fu.act, fu.lct);
  f.debt_to_equity = ratio(fu.lt, fu.ceq);
  f.interest_coverage = ratio(fu.ebitda, fu.xint);
  f.avg_sentiment = row.avg_sentiment;
  // The row dated t carries the return of the month that ended at t, so
  // as a feature it is the prior-month return (momentum anchor).
  f.ret_lag = row.ret;
  return f;
}

std::vector<FeatureRow> compute_features(const PanelView& view) {
  std::vector<FeatureRow> out;
  for (const auto* r : view.rows()) out.push_back(compute_feature_row(*r));
  return out;
}

std::vector<FeatureRow> compute_features_month(const PanelView& view, int month_index) {
  std::vector<FeatureRow> out;
  for (auto permno : view.permnos_in_month(month_index))
    out.push_back(compute_feature_row(*view.row(permno, month_index)));
  return out;
}

void write_features_csv(const std::vector<FeatureRow>& rows, std::ostream& out) {
  out << "permno,date";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << r.permno << ',' << r.date.to_string();
    for (int i = 0; i < kNumFeatures; ++i) {
      out << ',';
      const auto& v = feature_field(r, i);
      if (v) out << csv::format_double(*v);
    }
    out << '\n';
  }
}

}  // namespace midcap
