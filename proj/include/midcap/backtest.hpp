#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "midcap/config.hpp"
#include "midcap/dates.hpp"
#include "midcap/optimizer.hpp"
#include "midcap/panel.hpp"
#include "midcap/preprocess.hpp"
#include "midcap/signal_model.hpp"

namespace midcap {

struct PhaseSpec {
  std::string name;  // train | validate | test
  Date fit_start;
  Date fit_end;
  Date eval_start;  // first month whose realized return enters the phase
  Date eval_end;    // last such month (inclusive)
};

// Everything frozen by a phase's fit window: the surviving feature list,
// the preprocessing audit trail, and the pooled return model.
struct FittedModel {
  std::vector<std::string> features;
  ReturnModel model;
  PreprocessReport preprocess;
  std::size_t observations = 0;
};

struct BacktestPhaseResult {
  PhaseSpec spec;
  // Realized portfolio returns keyed by realization date (the month
  // *after* the decision; the decision taken at t pays at t+1).
  std::vector<std::pair<Date, double>> monthly_returns;
  std::vector<PortfolioWeights> weights_history;  // keyed by decision date
  double sharpe_annualized = 0.0;
  double sharpe_monthly = 0.0;
  double mean_monthly = 0.0;
  double std_monthly = 0.0;
  double cumulative_return = 0.0;
  double turnover = 0.0;  // mean sum|w_t - w_{t-1}| across consecutive rebalances
  std::vector<std::string> gap_log;     // skipped months and why
  std::vector<std::string> delist_log;  // holdings with no next-month return
  FittedModel fitted;
};

struct ComparisonSeries {
  std::vector<Date> dates;
  std::vector<double> portfolio;       // monthly returns
  std::vector<double> benchmark;       // monthly returns
  std::vector<double> portfolio_cum;   // compounded
  std::vector<double> benchmark_cum;   // compounded
  std::vector<double> excess;          // portfolio - benchmark per month
};

struct BacktestReport {
  std::vector<BacktestPhaseResult> phases;  // train, validate, test
  std::optional<ComparisonSeries> benchmark_comparison;  // test phase vs benchmark
};

// Fit the preprocessing chain and return model on [fit_start, fit_end]:
// per-month standardized cross-sections pooled, degenerate columns
// dropped, VIF then correlation pruning, ridge fit against next-month
// returns. Everything downstream of the fit window is untouched.
FittedModel fit_phase_model(const Panel& panel, const Date& fit_start, const Date& fit_end,
                            const Config& config);

BacktestPhaseResult run_phase(const Panel& panel, const PhaseSpec& spec, const Config& config);

BacktestReport run_protocol(const Panel& panel, const Config& config,
                            const std::vector<BenchmarkObservation>& benchmark = {});

// mean / sample std (divisor n-1), annualized by sqrt(12); risk-free 0.
double compute_sharpe(const std::vector<double>& monthly_returns);

ComparisonSeries compare_benchmark(const std::vector<std::pair<Date, double>>& portfolio,
                                   const std::vector<BenchmarkObservation>& benchmark);

}  // namespace midcap
