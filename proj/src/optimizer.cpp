#include "midcap/optimizer.hpp"

#include <cmath>

#include "midcap/errors.hpp"

namespace midcap {

PortfolioWeights solve_dollar_neutral(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                      const OptimizerParams& params) {
  Eigen::Index n = mu.size();
  if (sigma.rows() != n || sigma.cols() != n)
    throw AlignmentError("solve_dollar_neutral: mu/sigma dimension mismatch");
  if (n < 2)
    throw DegenerateUniverseError(
        "dollar-neutral portfolio needs at least 2 assets (1'w = 0 forces w = 0)");
  if (!(params.risk_aversion > 0.0))
    throw ValidationError("risk_aversion must be positive");

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError(
        "sigma is not positive-definite; regularize upstream (shrinkage/ridge floor)");

  // One iterative-refinement pass tightens both solves; the factorization
  // is reused so the cost is two extra triangular solves.
  auto solve_refined = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd x = llt.solve(b);
    x += llt.solve(b - sigma * x);
    return x;
  };

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd sinv_mu = solve_refined(mu);
  Eigen::VectorXd sinv_one = solve_refined(ones);
  double denom = ones.dot(sinv_one);  // 1'S^{-1}1 > 0 for SPD sigma
  double lambda = ones.dot(sinv_mu) / denom;

  double a = params.risk_aversion;
  Eigen::VectorXd w = (sinv_mu - lambda * sinv_one) / (2.0 * a);
  // The two solves cancel only approximately; project the leftover mass
  // onto the constraint. The shift is absorbed by lambda in exact
  // arithmetic, so optimality is untouched.
  w.array() -= w.mean();

  // When mu is (numerically) constant, lambda absorbs it entirely and the
  // optimum is the zero portfolio. Without this check the residual rounding
  // noise would later be rescaled to full gross exposure.
  double flatness = (mu.array() - lambda).abs().maxCoeff();
  if (flatness <= 1e-12 * std::max(1.0, mu.cwiseAbs().maxCoeff())) w.setZero();

  PortfolioWeights out;
  out.ids.resize(static_cast<std::size_t>(n));
  out.w = w;
  out.lambda = lambda;
  out.neutrality_residual = std::abs(w.sum());
  out.gross = w.lpNorm<1>();
  out.objective_value = w.dot(mu) - a * w.dot(sigma * w);
  out.zero_portfolio = out.gross == 0.0;
  return out;
}

PortfolioWeights normalize_gross(PortfolioWeights weights, const OptimizerParams& params) {
  if (!(params.gross_target > 0.0)) throw ValidationError("gross_target must be positive");
  if (weights.gross <= 0.0) {
    weights.zero_portfolio = true;
    return weights;  // nothing to scale
  }
  double scale = 2.0 * params.gross_target / weights.gross;
  weights.w *= scale;

  if (params.max_weight > 0.0) {
    // Optional cap (not part of the base strategy): clip, then restore
    // neutrality by removing the mean of the clipped vector.
    weights.w = weights.w.cwiseMax(-params.max_weight).cwiseMin(params.max_weight);
    weights.w.array() -= weights.w.mean();
  }

  weights.neutrality_residual = std::abs(weights.w.sum());
  weights.gross = weights.w.lpNorm<1>();
  weights.zero_portfolio = weights.gross == 0.0;
  return weights;
}

PositionSheet weights_to_positions(const PortfolioWeights& weights,
                                   const std::vector<std::optional<double>>& prices,
                                   double capital) {
  if (!(capital > 0.0)) throw ValidationError("capital must be positive");
  if (prices.size() != weights.ids.size())
    throw AlignmentError("weights_to_positions: price vector length mismatch");

  PositionSheet sheet;
  double post_long = 0.0;
  double post_short = 0.0;
  for (std::size_t i = 0; i < weights.ids.size(); ++i) {
    double wi = weights.w[static_cast<Eigen::Index>(i)];
    double dollars = wi * capital;
    if (wi > 0.0)
      sheet.long_dollars_pre_round += dollars;
    else
      sheet.short_dollars_pre_round += -dollars;
    if (wi == 0.0) {
      sheet.positions.push_back({weights.ids[i], 0, 0.0});
      continue;
    }
    if (!prices[i] || !(*prices[i] > 0.0))
      throw PositionError("no usable price for permno " + std::to_string(weights.ids[i]) +
                          " with nonzero weight");
    auto shares = static_cast<long long>(std::trunc(dollars / *prices[i]));
    sheet.positions.push_back({weights.ids[i], shares, dollars});
    double filled = static_cast<double>(shares) * *prices[i];
    if (filled > 0.0)
      post_long += filled;
    else
      post_short += -filled;
  }
  sheet.rounding_imbalance = post_long - post_short;
  return sheet;
}

}  // namespace midcap
