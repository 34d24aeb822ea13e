#include <doctest.h>

#include <random>
#include <sstream>

#include "midcap/backtest.hpp"
#include "midcap/csv.hpp"
#include "midcap/report.hpp"

using namespace midcap;

namespace {

// Same construction as the backtest tests: two live features, stock 6
// delists after 2021-05. Detailed panel behavior is covered elsewhere;
// here it just feeds report rendering.
Panel report_panel() {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> ret_dist(-0.05, 0.05);
  std::uniform_real_distribution<double> sent_dist(-0.8, 0.8);
  std::vector<SecurityMonth> rows;
  for (int m = 0; m < 20; ++m) {
    Date d = Date{2020, 1, 1}.add_months(m);
    for (int s = 1; s <= 6; ++s) {
      double ret = ret_dist(rng);
      double sent = sent_dist(rng);
      if (s == 6 && m > 16) continue;
      SecurityMonth row;
      row.permno = s;
      row.date = d;
      row.prc = 20.0 + s + 0.1 * m;
      row.shrout = 1000.0;
      row.market_cap = row.prc * row.shrout * 1000.0;
      row.ret = ret;
      row.avg_sentiment = sent;
      rows.push_back(row);
    }
  }
  return Panel::from_rows(std::move(rows));
}

Config report_config() {
  Config cfg;
  cfg.cov_window_months = 6;
  cfg.shrinkage = 0.1;
  cfg.ridge_mu = 1e-3;
  cfg.train_start = Date{2020, 1, 1};
  cfg.train_end = Date{2020, 12, 1};
  cfg.validate_start = Date{2021, 1, 1};
  cfg.validate_end = Date{2021, 3, 1};
  cfg.test_start = Date{2021, 4, 1};
  cfg.test_end = Date{2021, 8, 1};
  return cfg;
}

BacktestReport full_report() {
  std::vector<BenchmarkObservation> bench;
  for (int m = 0; m < 20; ++m)
    bench.push_back({Date{2020, 1, 15}.add_months(m), 0.01});
  return run_protocol(report_panel(), report_config(), bench);
}

}  // namespace

TEST_CASE("ingest report serializes every counter") {
  IngestReport rep;
  rep.crsp_rows_read = 120;
  rep.dropped_missing_prc = 3;
  rep.duplicates_dropped = 1;
  rep.final_rows = 96;
  json j = ingest_report_json(rep);
  CHECK(j["crsp_rows_read"] == 120);
  CHECK(j["dropped_missing_prc"] == 3);
  CHECK(j["duplicates_dropped"] == 1);
  CHECK(j["rows_dropped_midcap"] == 0);
  CHECK(j["final_rows"] == 96);
  CHECK(j.size() == 11);
}

TEST_CASE("preprocess report carries the audit trail") {
  PreprocessReport rep;
  rep.surviving_features = {"a", "b"};
  rep.vif_table = {{"a", 1.25}, {"b", std::numeric_limits<double>::infinity()}};
  rep.elimination_order = {{"c", 42.0}};
  rep.correlation_groups = {{{"a", "d"}, "a"}};
  rep.dropped_features = {{"c", "vif"}, {"d", "correlation"}};
  json j = preprocess_report_json(rep);
  CHECK(j["surviving_features"] == json::array({"a", "b"}));
  CHECK(j["vif_table"].size() == 2);
  CHECK(j["vif_table"]["a"] == 1.25);
  // Infinity is not representable in JSON; it is spelled out instead.
  CHECK(j["vif_table"]["b"] == "inf");
  CHECK(j["elimination_order"][0]["feature"] == "c");
  CHECK(j["elimination_order"][0]["vif"] == 42.0);
  CHECK(j["correlation_groups"][0]["members"] == json::array({"a", "d"}));
  CHECK(j["correlation_groups"][0]["representative"] == "a");
  CHECK(j["dropped_features"][1]["reason"] == "correlation");
}

TEST_CASE("backtest report JSON mirrors the protocol result") {
  BacktestReport report = full_report();
  json j = backtest_report_json(report);

  REQUIRE(j["phases"].size() == 3);
  const json& train = j["phases"][0];
  CHECK(train["name"] == "train");
  CHECK(train["fit_window"]["start"] == "2020-01-01");
  CHECK(train["eval_window"]["end"] == "2020-12-01");
  CHECK(train["months_realized"] == report.phases[0].monthly_returns.size());
  CHECK(train["rebalances"] == report.phases[0].weights_history.size());
  CHECK(train["sharpe_annualized"].get<double>() ==
        report.phases[0].sharpe_annualized);
  CHECK(train["model"]["beta"].size() == 2);
  CHECK(train["model"]["beta"].contains("avg_sentiment"));
  CHECK(train["model"]["beta"].contains("ret_lag"));
  CHECK(train["model"]["ridge"] == report_config().ridge_mu);
  CHECK(train["monthly_returns"].size() == report.phases[0].monthly_returns.size());
  CHECK(train["monthly_returns"][0]["date"] ==
        report.phases[0].monthly_returns[0].first.to_string());
  CHECK(train["gaps"].size() == report.phases[0].gap_log.size());

  const json& ws = train["weights_summary"][0];
  CHECK(ws["names"] == 6);
  CHECK(ws["gross"].get<double>() == doctest::Approx(2.0));
  CHECK(ws["zero_portfolio"] == false);
  CHECK(ws["max_abs_weight"].get<double>() >= ws["p95_abs_weight"].get<double>());

  REQUIRE(!j["benchmark_comparison"].is_null());
  const json& series = j["benchmark_comparison"]["series"];
  REQUIRE(series.size() == report.benchmark_comparison->dates.size());
  CHECK(series[0]["benchmark"].get<double>() == 0.01);

  // Two renders of the same result must be byte-identical.
  CHECK(j.dump(2) == backtest_report_json(report).dump(2));

  BacktestReport no_bench = run_protocol(report_panel(), report_config());
  CHECK(backtest_report_json(no_bench)["benchmark_comparison"].is_null());
}

TEST_CASE("per-phase CSV dumps") {
  BacktestReport report = full_report();
  const BacktestPhaseResult& phase = report.phases[1];

  std::ostringstream rets;
  write_phase_returns_csv(phase, rets);
  std::istringstream ret_lines(rets.str());
  std::string line;
  std::getline(ret_lines, line);
  CHECK(line == "date,ret");
  std::getline(ret_lines, line);
  CHECK(line == phase.monthly_returns[0].first.to_string() + "," +
                    csv::format_double(phase.monthly_returns[0].second));

  std::ostringstream weights;
  write_phase_weights_csv(phase, weights);
  std::istringstream w_lines(weights.str());
  std::getline(w_lines, line);
  CHECK(line == "date,permno,weight");
  std::getline(w_lines, line);
  const auto& pw = phase.weights_history[0];
  CHECK(line == pw.date.to_string() + ",1," + csv::format_double(pw.w[0]));
  // One line per (rebalance, name) plus the header.
  std::size_t count = 2;  // header + first data line already consumed
  while (std::getline(w_lines, line))
    if (!line.empty()) ++count;
  std::size_t expected = 1;
  for (const auto& w : phase.weights_history) expected += w.ids.size();
  CHECK(count == expected);
}

TEST_CASE("SVG renders are well-formed and carry both series") {
  BacktestReport report = full_report();
  std::string cum = render_cumulative_svg(*report.benchmark_comparison);
  CHECK(cum.rfind("<?xml", 0) == 0);
  CHECK(cum.find("<svg") != std::string::npos);
  CHECK(cum.find("</svg>") != std::string::npos);
  CHECK(cum.find("#1f4e9c") != std::string::npos);  // portfolio line
  CHECK(cum.find("#d97706") != std::string::npos);  // benchmark line
  CHECK(cum.find("polyline") != std::string::npos);

  std::string bars = render_weights_svg(report.phases.back().weights_history[0]);
  CHECK(bars.rfind("<?xml", 0) == 0);
  CHECK(bars.find("</svg>") != std::string::npos);
  CHECK(bars.find("<rect") != std::string::npos);
  CHECK(bars.find("#c62828") != std::string::npos);  // short side
  CHECK(bars.find(report.phases.back().weights_history[0].date.to_string()) !=
        std::string::npos);
}

TEST_CASE("summary text names each phase") {
  BacktestReport report = full_report();
  std::string text = render_summary_text(report);
  CHECK(text.find("train") != std::string::npos);
  CHECK(text.find("validate") != std::string::npos);
  CHECK(text.find("test") != std::string::npos);
  CHECK(text.find("avg_sentiment") != std::string::npos);
  CHECK(text.find(csv::format_double(report.phases[0].sharpe_annualized)) !=
        std::string::npos);
}
