#include "midcap/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "midcap/errors.hpp"
#include "midcap/features.hpp"

namespace midcap {

namespace {

std::string month_tag(int month_index) {
  return Date::from_month_index(month_index).to_string().substr(0, 7);
}

// Column subset by name, preserving `wanted` order.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                               const std::vector<std::string>& wanted) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(wanted.size()));
  for (std::size_t j = 0; j < wanted.size(); ++j) {
    auto it = std::find(names.begin(), names.end(), wanted[j]);
    if (it == names.end()) throw AlignmentError("missing feature column '" + wanted[j] + "'");
    out.col(static_cast<Eigen::Index>(j)) = x.col(it - names.begin());
  }
  return out;
}

}  // namespace

FittedModel fit_phase_model(const Panel& panel, const Date& fit_start, const Date& fit_end,
                            const Config& config) {
  PanelView full = panel.full_view();
  int m_begin = fit_start.month_index();
  int m_last = fit_end.month_index();

  // Pool (decision month, stock) observations with their next-month
  // return as the label. Decision months stop one short of fit_end so
  // the labels stay inside the fit window.
  std::vector<Eigen::RowVectorXd> x_rows;
  std::vector<double> y_vals;
  const auto& all_names = feature_names();
  for (int m = m_begin; m < m_last; ++m) {
    auto label = full.month_label(m);
    if (!label) continue;
    PanelView view = panel.as_of(*label);
    CrossSection cs = build_cross_section(compute_features_month(view, m));
    if (cs.ids.empty()) continue;
    StandardizedMatrix std_cs = standardize_with_list(cs, all_names, config.z_clip);
    for (std::size_t i = 0; i < std_cs.ids.size(); ++i) {
      const SecurityMonth* fwd = full.row(std_cs.ids[i], m + 1);
      if (!fwd || !fwd->ret) continue;  // no label for this stock-month
      x_rows.push_back(std_cs.values.row(static_cast<Eigen::Index>(i)));
      y_vals.push_back(*fwd->ret);
    }
  }
  if (x_rows.empty())
    throw InsufficientDataError("no labeled training observations in " +
                                fit_start.to_string() + ".." + fit_end.to_string());

  auto n = static_cast<Eigen::Index>(x_rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(all_names.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = x_rows[static_cast<std::size_t>(i)];
    y[i] = y_vals[static_cast<std::size_t>(i)];
  }

  FittedModel fitted;
  fitted.observations = static_cast<std::size_t>(n);

  // A column that is zero-variance over the whole pool (degenerate on
  // every training date) carries nothing; drop it before VIF.
  std::vector<std::string> names;
  std::vector<Eigen::Index> keep_idx;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double mean = x.col(j).mean();
    double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n);
    if (var > 0.0) {
      names.push_back(all_names[static_cast<std::size_t>(j)]);
      keep_idx.push_back(j);
    } else {
      fitted.preprocess.dropped_features.emplace_back(all_names[static_cast<std::size_t>(j)],
                                                      "degenerate");
    }
  }
  Eigen::MatrixXd x1(n, static_cast<Eigen::Index>(keep_idx.size()));
  for (std::size_t j = 0; j < keep_idx.size(); ++j)
    x1.col(static_cast<Eigen::Index>(j)) = x.col(keep_idx[j]);
  if (names.empty()) throw EmptyMatrixError("every feature degenerate over the fit window");

  if (static_cast<double>(n) < 10.0 * static_cast<double>(names.size()))
    throw InsufficientDataError("pooled training observations (" + std::to_string(n) +
                                ") below 10x feature count");

  VifResult vif = vif_prune(x1, names, config.vif_threshold);
  for (const auto& removal : vif.eliminated)
    fitted.preprocess.dropped_features.emplace_back(removal.name, "vif");
  fitted.preprocess.elimination_order = vif.eliminated;
  Eigen::MatrixXd x2 = select_columns(x1, names, vif.survivors);

  CorrResult corr = correlation_prune(x2, vif.survivors, y, config.corr_threshold);
  for (const auto& name : vif.survivors)
    if (std::find(corr.survivors.begin(), corr.survivors.end(), name) == corr.survivors.end())
      fitted.preprocess.dropped_features.emplace_back(name, "correlation");
  fitted.preprocess.correlation_groups = corr.groups;
  Eigen::MatrixXd x3 = select_columns(x2, vif.survivors, corr.survivors);

  fitted.features = corr.survivors;
  fitted.preprocess.surviving_features = corr.survivors;
  for (std::size_t j = 0; j < corr.survivors.size(); ++j)
    fitted.preprocess.vif_table.emplace_back(
        corr.survivors[j],
        x3.cols() > 1 ? compute_vif(x3, static_cast<int>(j)) : 1.0);

  fitted.model = fit_return_model(x3, y, corr.survivors, config.ridge_mu);
  return fitted;
}

double compute_sharpe(const std::vector<double>& monthly_returns) {
  if (monthly_returns.size() < 2)
    throw InsufficientDataError("Sharpe needs at least 2 observations, got " +
                                std::to_string(monthly_returns.size()));
  double n = static_cast<double>(monthly_returns.size());
  double mean = std::accumulate(monthly_returns.begin(), monthly_returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : monthly_returns) ss += (r - mean) * (r - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) throw UndefinedSharpeError("zero return variance, Sharpe undefined");
  return mean / sd * std::sqrt(12.0);
}

BacktestPhaseResult run_phase(const Panel& panel, const PhaseSpec& spec, const Config& config) {
  if (spec.fit_end < spec.fit_start) throw ValidationError(spec.name + ": fit window inverted");
  if (spec.eval_end < spec.eval_start)
    throw ValidationError(spec.name + ": eval window inverted");
  if (spec.name != "train" &&
      spec.eval_start.month_index() <= spec.fit_end.month_index())
    throw ValidationError(spec.name + ": eval window must start after the fit window");
  if (panel.empty()) throw MissingRangeError(spec.name + ": panel is empty");
  if (panel.last_date().month_index() < spec.eval_end.month_index())
    throw MissingRangeError(spec.name + ": panel ends " + panel.last_date().to_string() +
                            " before eval window end " + month_tag(spec.eval_end.month_index()));
  if (panel.first_date().month_index() > spec.fit_start.month_index())
    throw MissingRangeError(spec.name + ": panel starts " + panel.first_date().to_string() +
                            " after fit window start " + month_tag(spec.fit_start.month_index()));

  BacktestPhaseResult result;
  result.spec = spec;
  result.fitted = fit_phase_model(panel, spec.fit_start, spec.fit_end, config);

  PanelView full = panel.full_view();
  OptimizerParams opt_params;
  opt_params.risk_aversion = config.risk_aversion;
  opt_params.gross_target = config.gross_target;
  opt_params.max_weight = config.max_weight;
  SigmaParams sigma_params;
  sigma_params.window_months = config.cov_window_months;
  sigma_params.shrinkage = config.shrinkage;

  // A return realized in month mr comes from the decision taken one
  // month earlier; everything the decision sees is as-of that earlier
  // month's stamp.
  for (int mr = spec.eval_start.month_index(); mr <= spec.eval_end.month_index(); ++mr) {
    int md = mr - 1;
    auto decision_label = full.month_label(md);
    if (!decision_label) {
      result.gap_log.push_back(month_tag(md) + ": no panel rows in decision month");
      continue;
    }
    PanelView view = panel.as_of(*decision_label);
    CrossSection cs = build_cross_section(compute_features_month(view, md));
    if (cs.ids.empty()) {
      result.gap_log.push_back(month_tag(md) + ": empty cross-section");
      continue;
    }
    StandardizedMatrix std_cs = standardize_with_list(cs, result.fitted.features, config.z_clip);

    SigmaEstimate sigma;
    try {
      sigma = estimate_sigma(view, cs.ids, *decision_label, sigma_params);
    } catch (const EmptyUniverseError&) {
      result.gap_log.push_back(month_tag(md) + ": no stocks pass the history filter");
      continue;
    }
    if (sigma.ids.size() < 2) {
      result.gap_log.push_back(month_tag(md) + ": universe below two names");
      continue;
    }

    // estimate_sigma may have excluded thin-history ids; cut the feature
    // matrix down to the surviving universe, order preserved.
    std::vector<Eigen::Index> rows;
    rows.reserve(sigma.ids.size());
    {
      std::size_t k = 0;
      for (std::size_t i = 0; i < std_cs.ids.size() && k < sigma.ids.size(); ++i)
        if (std_cs.ids[i] == sigma.ids[k]) {
          rows.push_back(static_cast<Eigen::Index>(i));
          ++k;
        }
      if (k != sigma.ids.size())
        throw AlignmentError("sigma universe is not a subset of the feature universe");
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()),
                        std_cs.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      sub.row(static_cast<Eigen::Index>(i)) = std_cs.values.row(rows[i]);
    StandardizedMatrix scoring;
    scoring.date = std_cs.date;
    scoring.ids = sigma.ids;
    scoring.feature_names = std_cs.feature_names;
    scoring.values = std::move(sub);

    Eigen::VectorXd mu = score_mu(scoring, result.fitted.model);
    PortfolioWeights pw = solve_dollar_neutral(mu, sigma.sigma, opt_params);
    pw = normalize_gross(pw, opt_params);
    pw.date = *decision_label;
    pw.ids = sigma.ids;
    result.weights_history.push_back(pw);

    auto realization_label = full.month_label(mr);
    if (!realization_label) {
      result.gap_log.push_back(month_tag(mr) + ": no panel rows in realization month");
      continue;
    }
    double realized = 0.0;
    for (std::size_t i = 0; i < pw.ids.size(); ++i) {
      double wi = pw.w[static_cast<Eigen::Index>(i)];
      if (wi == 0.0) continue;
      const SecurityMonth* next = full.row(pw.ids[i], mr);
      if (next && next->ret) {
        realized += wi * *next->ret;
      } else {
        // Position with no realized return: the stock left the panel
        // (or its return is unrecorded). Contributes zero, logged so
        // the bias is visible rather than silent.
        result.delist_log.push_back(month_tag(mr) + ": permno " + std::to_string(pw.ids[i]) +
                                    " held but no return");
      }
    }
    result.monthly_returns.emplace_back(*realization_label, realized);
  }

  std::vector<double> rets;
  rets.reserve(result.monthly_returns.size());
  for (const auto& [d, r] : result.monthly_returns) rets.push_back(r);
  result.sharpe_annualized = compute_sharpe(rets);
  double n = static_cast<double>(rets.size());
  result.mean_monthly = std::accumulate(rets.begin(), rets.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rets) ss += (r - result.mean_monthly) * (r - result.mean_monthly);
  result.std_monthly = std::sqrt(ss / (n - 1.0));
  result.sharpe_monthly = result.mean_monthly / result.std_monthly;
  double cum = 1.0;
  for (double r : rets) cum *= 1.0 + r;
  result.cumulative_return = cum - 1.0;

  if (result.weights_history.size() >= 2) {
    double total = 0.0;
    for (std::size_t k = 1; k < result.weights_history.size(); ++k) {
      const auto& prev = result.weights_history[k - 1];
      const auto& curr = result.weights_history[k];
      std::map<std::int64_t, double> delta;
      for (std::size_t i = 0; i < prev.ids.size(); ++i)
        delta[prev.ids[i]] -= prev.w[static_cast<Eigen::Index>(i)];
      for (std::size_t i = 0; i < curr.ids.size(); ++i)
        delta[curr.ids[i]] += curr.w[static_cast<Eigen::Index>(i)];
      double t = 0.0;
      for (const auto& [id, d] : delta) t += std::abs(d);
      total += t;
    }
    result.turnover = total / static_cast<double>(result.weights_history.size() - 1);
  }
  return result;
}

ComparisonSeries compare_benchmark(const std::vector<std::pair<Date, double>>& portfolio,
                                   const std::vector<BenchmarkObservation>& benchmark) {
  std::map<int, double> bench_by_month;
  for (const auto& b : benchmark) bench_by_month[b.date.month_index()] = b.ret;

  ComparisonSeries out;
  // Joined on calendar month: the two series may stamp the same month on
  // different days, and the month is the economic key.
  for (const auto& [d, r] : portfolio) {
    auto it = bench_by_month.find(d.month_index());
    if (it == bench_by_month.end()) continue;
    out.dates.push_back(d);
    out.portfolio.push_back(r);
    out.benchmark.push_back(it->second);
    out.excess.push_back(r - it->second);
  }
  if (out.dates.empty())
    throw AlignmentError("portfolio and benchmark series have no overlapping months");
  double cp = 1.0;
  double cb = 1.0;
  for (std::size_t i = 0; i < out.dates.size(); ++i) {
    cp *= 1.0 + out.portfolio[i];
    cb *= 1.0 + out.benchmark[i];
    out.portfolio_cum.push_back(cp - 1.0);
    out.benchmark_cum.push_back(cb - 1.0);
  }
  return out;
}

BacktestReport run_protocol(const Panel& panel, const Config& config,
                            const std::vector<BenchmarkObservation>& benchmark) {
  PhaseSpec train{"train", config.train_start, config.train_end, config.train_start,
                  config.train_end};
  PhaseSpec validate{"validate", config.train_start, config.train_end, config.validate_start,
                     config.validate_end};
  // The test phase refits on train + validation history, echoing the
  // walk-forward protocol.
  PhaseSpec test{"test", config.train_start, config.validate_end, config.test_start,
                 config.test_end};

  BacktestReport report;
  report.phases.push_back(run_phase(panel, train, config));
  report.phases.push_back(run_phase(panel, validate, config));
  report.phases.push_back(run_phase(panel, test, config));

  if (!benchmark.empty())
    report.benchmark_comparison =
        compare_benchmark(report.phases.back().monthly_returns, benchmark);
  return report;
}

}  // namespace midcap
