#include "midcap/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "midcap/errors.hpp"

namespace midcap {

ReturnModel fit_return_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names, double ridge) {
  if (x.rows() != y.size()) throw AlignmentError("fit_return_model: row/target mismatch");
  if (x.cols() != static_cast<Eigen::Index>(names.size()))
    throw AlignmentError("fit_return_model: column/name mismatch");
  if (ridge < 0.0) throw ValidationError("fit_return_model: negative ridge");
  Eigen::Index n = x.rows();
  Eigen::Index p = x.cols();
  if (ridge == 0.0 && n < p + 1)
    throw SingularFitError("fewer observations than features with ridge = 0; set ridge_mu > 0");
  if (n == 0) throw EmptyMatrixError("fit_return_model: no observations");

  // Profile out the intercept: with b0 optimal at mean(y - X beta), the
  // problem reduces to centered normal equations.
  Eigen::RowVectorXd xm = x.colwise().mean();
  double ym = y.mean();
  Eigen::MatrixXd xc = x.rowwise() - xm;
  Eigen::VectorXd yc = y.array() - ym;

  double dn = static_cast<double>(n);
  Eigen::MatrixXd a = (xc.transpose() * xc) / dn;
  a.diagonal().array() += ridge;
  Eigen::VectorXd rhs = (xc.transpose() * yc) / dn;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::VectorXd beta = ldlt.solve(rhs);
  double rhs_norm = rhs.norm();
  if (ldlt.info() != Eigen::Success ||
      (a * beta - rhs).norm() > 1e-8 * std::max(1.0, rhs_norm))
    throw SingularFitError("normal equations singular; set ridge_mu > 0");

  ReturnModel model;
  model.feature_names = names;
  model.beta = beta;
  model.intercept = ym - xm.dot(beta);
  model.ridge = ridge;
  model.observations = static_cast<std::size_t>(n);
  return model;
}

Eigen::VectorXd score_mu(const StandardizedMatrix& features, const ReturnModel& model) {
  if (features.feature_names.size() != model.feature_names.size())
    throw AlignmentError("score_mu: feature count differs from model");
  for (std::size_t i = 0; i < model.feature_names.size(); ++i)
    if (features.feature_names[i] != model.feature_names[i])
      throw AlignmentError("score_mu: feature '" + features.feature_names[i] +
                           "' where model expects '" + model.feature_names[i] + "'");
  return features.values * model.beta;
}

double power_iteration_lambda_max(const Eigen::MatrixXd& m, int iters) {
  Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  if (n == 1) return m(0, 0);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd w = m * v;
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return v.dot(m * v);
}

SigmaEstimate estimate_sigma(const PanelView& view, const std::vector<std::int64_t>& ids,
                             const Date& t, const SigmaParams& params) {
  if (params.window_months < 2)
    throw ValidationError("estimate_sigma: window_months must be >= 2");
  int window = params.window_months;
  int min_obs = std::min(params.min_observations, window);
  int m_end = t.month_index();
  int m_start = m_end - window + 1;

  // Per stock: returns over the common window, gaps flagged.
  std::vector<std::int64_t> kept;
  std::vector<std::vector<double>> series;  // aligned with kept, NaN = gap
  std::size_t total_obs = 0;
  for (auto id : ids) {
    std::vector<double> r(static_cast<std::size_t>(window),
                          std::numeric_limits<double>::quiet_NaN());
    int count = 0;
    for (int m = m_start; m <= m_end; ++m) {
      const SecurityMonth* row = view.row(id, m);
      if (row && row->ret) {
        r[static_cast<std::size_t>(m - m_start)] = *row->ret;
        ++count;
      }
    }
    if (count < min_obs) continue;
    total_obs += static_cast<std::size_t>(count);
    kept.push_back(id);
    series.push_back(std::move(r));
  }
  if (kept.empty())
    throw EmptyUniverseError("no stocks with sufficient return history at " + t.to_string());

  auto n = static_cast<Eigen::Index>(kept.size());
  auto tw = static_cast<Eigen::Index>(window);
  Eigen::MatrixXd r(tw, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& s = series[static_cast<std::size_t>(j)];
    double sum = 0.0;
    int cnt = 0;
    for (double v : s)
      if (!std::isnan(v)) {
        sum += v;
        ++cnt;
      }
    double mean = sum / cnt;  // cnt >= min_obs >= 1
    for (Eigen::Index i = 0; i < tw; ++i) {
      double v = s[static_cast<std::size_t>(i)];
      r(i, j) = std::isnan(v) ? mean : v;  // gap → stock's own window mean
    }
  }

  // Two-pass sample covariance, divisor T-1.
  Eigen::RowVectorXd means = r.colwise().mean();
  Eigen::MatrixXd rc = r.rowwise() - means;
  Eigen::MatrixXd s = (rc.transpose() * rc) / static_cast<double>(window - 1);

  double shrink = params.shrinkage;
  Eigen::MatrixXd sigma = (1.0 - shrink) * s;
  sigma.diagonal() += shrink * s.diagonal();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();  // exact symmetry

  SigmaEstimate est;
  est.ids = std::move(kept);
  est.diagnostics.shrinkage = shrink;
  est.diagnostics.window_months = window;
  est.diagnostics.observations = total_obs;

  // Conditioning check with power-iteration bounds; the Cholesky below
  // is the authoritative PD test, the estimates just decide the floor.
  double lmax = power_iteration_lambda_max(sigma);
  double lmin = lmax - power_iteration_lambda_max(
                           Eigen::MatrixXd(lmax * Eigen::MatrixXd::Identity(n, n) - sigma));
  bool ok_pd = Eigen::LLT<Eigen::MatrixXd>(sigma).info() == Eigen::Success && lmax > 0.0;
  bool needs_floor =
      !ok_pd || lmin <= 0.0 || (lmin > 0.0 && lmax / lmin > params.max_condition);

  if (needs_floor) {
    double scale = s.trace() / static_cast<double>(n);
    if (!(scale > 0.0)) scale = 1.0;  // all-zero covariance still gets a PD floor
    double eps = params.ridge_epsilon;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::MatrixXd candidate = sigma;
      candidate.diagonal().array() += eps * scale;
      if (Eigen::LLT<Eigen::MatrixXd>(candidate).info() == Eigen::Success) {
        sigma = candidate;
        est.diagnostics.ridge_floor_applied = true;
        break;
      }
      eps *= 10.0;
    }
    if (!est.diagnostics.ridge_floor_applied)
      throw NotPositiveDefiniteError("covariance could not be regularized at " + t.to_string());
    lmax = power_iteration_lambda_max(sigma);
    lmin = lmax - power_iteration_lambda_max(
                      Eigen::MatrixXd(lmax * Eigen::MatrixXd::Identity(n, n) - sigma));
  }
  est.diagnostics.condition_number = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  est.sigma = std::move(sigma);
  return est;
}

}  // namespace midcap
