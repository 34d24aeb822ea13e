#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "midcap/dates.hpp"
#include "midcap/panel.hpp"

namespace midcap {

// One security-month of model inputs. Valuation ratios are stored in
// reciprocal form (E/P, B/P): the raw P/E of a near-zero-earnings stock
// explodes, while E/P stays bounded and keeps its cross-sectional
// ordering. P/S stays in direct form. Every value is finite or missing.
struct FeatureRow {
  std::int64_t permno = 0;
  Date date;
  std::optional<double> ep_ratio;
  std::optional<double> bp_ratio;
  std::optional<double> ps_ratio;
  std::optional<double> enterprise_value;
  std::optional<double> ev_to_ebitda;
  std::optional<double> gross_margin;
  std::optional<double> operating_margin;
  std::optional<double> net_margin;
  std::optional<double> current_ratio;
  std::optional<double> debt_to_equity;
  std::optional<double> interest_coverage;
  std::optional<double> avg_sentiment;
  std::optional<double> ret_lag;
};

inline constexpr int kNumFeatures = 13;

// Canonical feature order, shared by the CSV dump and every matrix
// downstream.
const std::vector<std::string>& feature_names();
int feature_index(const std::string& name);  // -1 if unknown

std::optional<double>& feature_field(FeatureRow& r, int i);
const std::optional<double>& feature_field(const FeatureRow& r, int i);

// Row-local arithmetic: nothing here looks at any other row, so the
// as-of discipline of the panel view carries over unchanged.
FeatureRow compute_feature_row(const SecurityMonth& row);

std::vector<FeatureRow> compute_features(const PanelView& view);
std::vector<FeatureRow> compute_features_month(const PanelView& view, int month_index);

void write_features_csv(const std::vector<FeatureRow>& rows, std::ostream& out);

}  // namespace midcap
