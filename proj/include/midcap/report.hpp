#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "midcap/backtest.hpp"
#include "midcap/panel.hpp"
#include "midcap/preprocess.hpp"

namespace midcap {

// ordered_json keeps insertion order, so serialized reports are
// byte-stable across runs.
using json = nlohmann::ordered_json;

json ingest_report_json(const IngestReport& report);
json preprocess_report_json(const PreprocessReport& report);
json backtest_report_json(const BacktestReport& report);

void write_phase_returns_csv(const BacktestPhaseResult& phase, std::ostream& out);
void write_phase_weights_csv(const BacktestPhaseResult& phase, std::ostream& out);

// Fig.-style static plots. Cumulative comparison draws portfolio vs
// benchmark compounded returns; the weight chart draws one rebalance
// date's book, long bars blue, short bars red.
std::string render_cumulative_svg(const ComparisonSeries& series);
std::string render_weights_svg(const PortfolioWeights& weights);

std::string render_summary_text(const BacktestReport& report);

}  // namespace midcap
