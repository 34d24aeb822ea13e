#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "midcap/dates.hpp"
#include "midcap/features.hpp"

namespace midcap {

// One rebalance date's raw feature cross-section. Missing cells are NaN
// until standardization imputes them.
struct CrossSection {
  Date date;
  std::vector<std::int64_t> ids;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;  // ids.size() x feature_names.size(), NaN = missing
};

// Builds the cross-section over the canonical feature list, dropping
// stocks whose every feature is missing.
CrossSection build_cross_section(const std::vector<FeatureRow>& rows);

struct StandardizedMatrix {
  Date date;
  std::vector<std::int64_t> ids;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;  // standardized and clipped, no missing left
  std::vector<std::pair<std::string, std::string>> dropped;  // (name, reason)
};

// Median-impute, z-score with population std (divisor n), clip to
// [-z_clip, z_clip]. Features with std = 0 or fewer than two non-missing
// values are dropped as degenerate; if everything degenerates the date
// is unusable and that is an error.
StandardizedMatrix standardize_and_clip(const CrossSection& raw, double z_clip = 3.0);

// Frozen-list variant used at scoring time: the column set is fixed by
// the fit, so a feature that degenerates on this particular date cannot
// be dropped — it standardizes to an all-zero column instead (z = 0 is
// the median-imputed neutral value).
StandardizedMatrix standardize_with_list(const CrossSection& raw,
                                         const std::vector<std::string>& names,
                                         double z_clip = 3.0);

struct VifRemoval {
  std::string name;
  double vif = 0.0;  // value that triggered removal (may be +inf)
};

struct VifResult {
  std::vector<std::string> survivors;
  std::vector<VifRemoval> eliminated;                      // in removal order
  std::vector<std::pair<std::string, double>> final_vif;   // survivors' VIFs
};

// Greedy max-VIF elimination until every VIF <= threshold. Perfect
// collinearity (R^2 = 1 within 1e-12) counts as infinite VIF; among tied
// maxima the later column is removed.
VifResult vif_prune(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                    double threshold = 10.0);

struct CorrelationGroup {
  std::vector<std::string> members;
  std::string representative;
};

struct CorrResult {
  std::vector<std::string> survivors;
  std::vector<CorrelationGroup> groups;  // only multi-member components
};

// Connected components under |Pearson| > threshold; each component keeps
// the member with the highest |Spearman rank correlation| against the
// forward returns (ties to the alphabetically first name).
CorrResult correlation_prune(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                             const Eigen::VectorXd& forward_returns, double threshold = 0.8);

// Shared statistics, exposed so the audit tests recompute them
// independently of the pruning path.
double compute_vif(const Eigen::MatrixXd& x, int j);
Eigen::MatrixXd pearson_correlation(const Eigen::MatrixXd& x);
double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PreprocessReport {
  std::vector<std::string> surviving_features;
  std::vector<std::pair<std::string, double>> vif_table;  // survivors → final VIF
  std::vector<VifRemoval> elimination_order;
  std::vector<CorrelationGroup> correlation_groups;
  std::vector<std::pair<std::string, std::string>> dropped_features;  // (name, reason)
};

void write_correlation_csv(const Eigen::MatrixXd& corr, const std::vector<std::string>& names,
                           std::ostream& out);

}  // namespace midcap
