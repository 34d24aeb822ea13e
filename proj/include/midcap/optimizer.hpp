#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "midcap/dates.hpp"

namespace midcap {

struct OptimizerParams {
  double risk_aversion = 2.0;  // A in the objective w'mu - A w'Sigma w
  double gross_target = 1.0;   // per-side exposure after normalization
  // Optional per-name cap applied after normalization (0 = off). Applied
  // by clipping then re-centering, which re-establishes neutrality at
  // the cost of exact optimality; off by default.
  double max_weight = 0.0;
};

struct PortfolioWeights {
  Date date;
  std::vector<std::int64_t> ids;
  Eigen::VectorXd w;
  double lambda = 0.0;              // equality-constraint multiplier
  double neutrality_residual = 0.0; // |sum w|
  double gross = 0.0;               // sum |w|
  double objective_value = 0.0;     // raw-scale w'mu - A w'Sigma w
  bool zero_portfolio = false;
};

// Closed-form maximizer of w'mu - A·w'Sigma·w subject to 1'w = 0:
//   w = (1/(2A)) Sigma^{-1}(mu - lambda·1),
//   lambda = (1'Sigma^{-1}mu) / (1'Sigma^{-1}1).
// Both solves use the SPD Cholesky factorization; one iterative
// refinement pass plus exact mean subtraction keep |1'w| <= 1e-10 and
// the KKT residual ||2A·Sigma·w - mu + lambda·1||_inf <= 1e-8.
PortfolioWeights solve_dollar_neutral(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                      const OptimizerParams& params = {});

// Rescales so sum|w| = 2 * gross_target (one gross_target long, one
// short). A zero portfolio is returned unchanged and flagged.
PortfolioWeights normalize_gross(PortfolioWeights weights, const OptimizerParams& params);

struct Position {
  std::int64_t permno = 0;
  long long shares = 0;  // signed, rounded toward zero
  double target_dollars = 0.0;
};

struct PositionSheet {
  std::vector<Position> positions;
  double long_dollars_pre_round = 0.0;
  double short_dollars_pre_round = 0.0;
  double rounding_imbalance = 0.0;  // post-rounding long$ - short$
};

// shares_i = trunc(w_i * capital / price_i). Prices are per id in the
// same order as weights.ids; a missing price under a nonzero weight is
// an error naming the id.
PositionSheet weights_to_positions(const PortfolioWeights& weights,
                                   const std::vector<std::optional<double>>& prices,
                                   double capital);

}  // namespace midcap
