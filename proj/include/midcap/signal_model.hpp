#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "midcap/dates.hpp"
#include "midcap/panel.hpp"
#include "midcap/preprocess.hpp"

namespace midcap {

// Fitted pooled return model: next-month return regressed on the
// standardized surviving features with an L2 penalty. The intercept is
// fitted (it absorbs the pooled mean return) but never scored — a common
// shift of mu cancels in the dollar-neutral optimum.
struct ReturnModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd beta;  // per feature, return per z-unit
  double intercept = 0.0;
  double ridge = 0.0;
  std::size_t observations = 0;
};

// Objective: (1/n)·sum((y - b0 - X·beta)^2) + ridge·|beta|^2. The 1/n
// scaling makes the fit invariant to duplicating every observation.
ReturnModel fit_return_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names, double ridge);

// mu_i = x_i · beta (intercept excluded). Column names must match the
// model's, in order.
Eigen::VectorXd score_mu(const StandardizedMatrix& features, const ReturnModel& model);

struct SigmaDiagnostics {
  double condition_number = 0.0;   // power-iteration estimate
  bool ridge_floor_applied = false;
  double shrinkage = 0.0;
  int window_months = 0;
  std::size_t observations = 0;    // total non-missing returns used
};

struct SigmaEstimate {
  std::vector<std::int64_t> ids;  // subset of requested ids passing history filter
  Eigen::MatrixXd sigma;
  SigmaDiagnostics diagnostics;
};

struct SigmaParams {
  int window_months = 36;
  int min_observations = 12;  // capped at window_months
  double shrinkage = 0.1;     // toward diag(S)
  double ridge_epsilon = 1e-6;
  double max_condition = 1e8;
};

// Trailing sample covariance of monthly returns over the window ending
// at month t (the month of `t`), restricted to ids with enough history;
// per-stock gaps are mean-imputed, then shrinkage toward the diagonal
// and, if still ill-conditioned or not PD, a trace-scaled ridge floor.
SigmaEstimate estimate_sigma(const PanelView& view, const std::vector<std::int64_t>& ids,
                             const Date& t, const SigmaParams& params = {});

// Largest/smallest-eigenvalue estimates by fixed-iteration power method
// (deterministic start), used for the conditioning check.
double power_iteration_lambda_max(const Eigen::MatrixXd& m, int iters = 30);

}  // namespace midcap
