// Command-line front door for the research pipeline. Each subcommand is
// a thin orchestration over the library; all number formatting funnels
// through the same shortest-round-trip printer so repeated runs produce
// byte-identical artifacts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "midcap/backtest.hpp"
#include "midcap/config.hpp"
#include "midcap/csv.hpp"
#include "midcap/errors.hpp"
#include "midcap/features.hpp"
#include "midcap/panel.hpp"
#include "midcap/preprocess.hpp"
#include "midcap/report.hpp"
#include "midcap/synthetic.hpp"

namespace fs = std::filesystem;
using namespace midcap;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw ValidationError("write failed for " + path.string());
}

struct LoadedInputs {
  Panel panel;
  IngestReport report;
  std::vector<BenchmarkObservation> benchmark;
};

// The shared front half of every pipeline subcommand: load, merge,
// forward-fill, filter to the mid-cap band.
LoadedInputs build_panel(const Config& cfg) {
  CrspLoadStats stats;
  auto crsp = load_crsp(cfg.crsp, &stats);
  auto compustat = load_compustat(cfg.compustat);
  auto links = load_links(cfg.links);
  std::vector<SentimentRecord> sentiment;
  if (!cfg.sentiment.empty()) sentiment = load_sentiment(cfg.sentiment);

  Panel merged = merge_link(crsp, compustat, links, sentiment);
  Panel filled = forward_fill(merged);
  std::size_t dropped = 0;
  Panel filtered = midcap_filter(filled, cfg.midcap_min, cfg.midcap_max, &dropped);

  LoadedInputs out;
  out.report.crsp_rows_read = stats.rows_read;
  out.report.dropped_missing_prc = stats.dropped_missing_prc;
  out.report.dropped_nonpositive_shrout = stats.dropped_nonpositive_shrout;
  out.report.duplicates_dropped = stats.duplicates_dropped;
  out.report.negative_prc_adjusted = stats.negative_prc_adjusted;
  out.report.compustat_rows_read = compustat.size();
  out.report.link_rows_read = links.size();
  out.report.sentiment_rows_read = sentiment.size();
  out.report.cells_forward_filled = filled.fill_log().size();
  out.report.rows_dropped_midcap = dropped;
  out.report.final_rows = filtered.rows().size();
  out.panel = std::move(filtered);
  if (!cfg.benchmark.empty()) out.benchmark = load_benchmark(cfg.benchmark);
  return out;
}

int cmd_synth(const SynthParams& params) {
  fs::create_directories(params.out_dir);
  SynthSummary s = generate_synthetic(params);
  std::cout << "wrote " << s.crsp_rows << " crsp rows, " << s.compustat_rows
            << " compustat rows, " << s.link_rows << " link rows, " << s.sentiment_rows
            << " sentiment rows, " << s.benchmark_rows << " benchmark rows to "
            << params.out_dir << '\n';
  return 0;
}

int cmd_ingest(const Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  LoadedInputs in = build_panel(cfg);

  std::ostringstream panel_csv;
  write_panel_csv(in.panel.full_view(), panel_csv);
  write_file(out_dir / "panel.csv", panel_csv.str());
  write_file(out_dir / "ingest_report.json", ingest_report_json(in.report).dump(2) + "\n");

  std::cout << "panel: " << in.report.final_rows << " rows ("
            << in.report.rows_dropped_midcap << " outside the mid-cap band, "
            << in.report.cells_forward_filled << " cells forward-filled)\n"
            << "wrote " << (out_dir / "panel.csv").string() << " and "
            << (out_dir / "ingest_report.json").string() << '\n';
  return 0;
}

int cmd_features(const Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  LoadedInputs in = build_panel(cfg);
  auto rows = compute_features(in.panel.full_view());
  std::ostringstream csv;
  write_features_csv(rows, csv);
  write_file(out_dir / "features.csv", csv.str());
  std::cout << "wrote " << rows.size() << " feature rows to "
            << (out_dir / "features.csv").string() << '\n';
  return 0;
}

int cmd_preprocess(const Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  LoadedInputs in = build_panel(cfg);
  FittedModel fit = fit_phase_model(in.panel, cfg.train_start, cfg.train_end, cfg);

  // Rebuild the pooled standardized matrix over the surviving columns so
  // the emitted correlation matrix matches what the pruning saw. Only
  // labeled stock-months enter, same as the fit.
  PanelView full = in.panel.full_view();
  std::vector<Eigen::RowVectorXd> pooled_rows;
  StandardizedMatrix last_month;
  for (int m = cfg.train_start.month_index(); m < cfg.train_end.month_index(); ++m) {
    auto label = full.month_label(m);
    if (!label) continue;
    PanelView view = in.panel.as_of(*label);
    CrossSection cs = build_cross_section(compute_features_month(view, m));
    if (cs.ids.empty()) continue;
    StandardizedMatrix sm = standardize_with_list(cs, fit.features, cfg.z_clip);
    for (std::size_t i = 0; i < sm.ids.size(); ++i) {
      const SecurityMonth* fwd = full.row(sm.ids[i], m + 1);
      if (!fwd || !fwd->ret) continue;
      pooled_rows.push_back(sm.values.row(static_cast<Eigen::Index>(i)));
    }
    last_month = std::move(sm);
  }
  if (pooled_rows.empty()) throw InsufficientDataError("no labeled rows in the fit window");

  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(pooled_rows.size()),
                         static_cast<Eigen::Index>(fit.features.size()));
  for (std::size_t i = 0; i < pooled_rows.size(); ++i)
    pooled.row(static_cast<Eigen::Index>(i)) = pooled_rows[i];

  std::ostringstream corr_csv;
  write_correlation_csv(pearson_correlation(pooled), fit.features, corr_csv);
  write_file(out_dir / "correlation.csv", corr_csv.str());

  std::ostringstream std_csv;
  std_csv << "date,permno";
  for (const auto& name : last_month.feature_names) std_csv << ',' << name;
  std_csv << '\n';
  for (std::size_t i = 0; i < last_month.ids.size(); ++i) {
    std_csv << last_month.date.to_string() << ',' << last_month.ids[i];
    for (Eigen::Index j = 0; j < last_month.values.cols(); ++j)
      std_csv << ',' << csv::format_double(last_month.values(static_cast<Eigen::Index>(i), j));
    std_csv << '\n';
  }
  write_file(out_dir / "standardized.csv", std_csv.str());

  write_file(out_dir / "preprocess_report.json",
             preprocess_report_json(fit.preprocess).dump(2) + "\n");

  std::cout << "surviving features:";
  for (const auto& name : fit.features) std::cout << ' ' << name;
  std::cout << "\nwrote preprocess_report.json, correlation.csv, standardized.csv to "
            << out_dir.string() << '\n';
  return 0;
}

int cmd_backtest(const Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  LoadedInputs in = build_panel(cfg);
  BacktestReport report = run_protocol(in.panel, cfg, in.benchmark);

  write_file(out_dir / "backtest_report.json", backtest_report_json(report).dump(2) + "\n");
  for (const auto& phase : report.phases) {
    std::ostringstream rets, weights;
    write_phase_returns_csv(phase, rets);
    write_phase_weights_csv(phase, weights);
    write_file(out_dir / ("returns_" + phase.spec.name + ".csv"), rets.str());
    write_file(out_dir / ("weights_" + phase.spec.name + ".csv"), weights.str());
  }

  for (const auto& phase : report.phases)
    std::cout << phase.spec.name << ": sharpe " << csv::format_double(phase.sharpe_annualized)
              << " over " << phase.monthly_returns.size() << " months\n";
  std::cout << "wrote backtest_report.json and per-phase CSVs to " << out_dir.string() << '\n';
  return 0;
}

int cmd_report(const Config& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  LoadedInputs in = build_panel(cfg);
  BacktestReport report = run_protocol(in.panel, cfg, in.benchmark);

  if (report.benchmark_comparison) {
    write_file(out_dir / "cumulative_test.svg",
               render_cumulative_svg(*report.benchmark_comparison));
  } else {
    std::cout << "no benchmark configured; skipping the comparison plot\n";
  }

  // Weight snapshot: the first rebalance of the last phase that has one.
  const PortfolioWeights* snapshot = nullptr;
  for (auto it = report.phases.rbegin(); it != report.phases.rend() && !snapshot; ++it)
    if (!it->weights_history.empty()) snapshot = &it->weights_history.front();
  if (snapshot) write_file(out_dir / "weights_test.svg", render_weights_svg(*snapshot));

  std::string summary = render_summary_text(report);
  write_file(out_dir / "summary.txt", summary);
  std::cout << summary;
  std::cout << "wrote summary.txt";
  if (report.benchmark_comparison) std::cout << ", cumulative_test.svg";
  if (snapshot) std::cout << ", weights_test.svg";
  std::cout << " to " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-in-time mid-cap long/short research pipeline"};
  app.require_subcommand(1);

  SynthParams synth_params;
  std::string synth_start = synth_params.start.to_string();
  auto* synth = app.add_subcommand("synth", "Generate deterministic synthetic input CSVs");
  synth->add_option("--out-dir", synth_params.out_dir, "Directory for the generated files");
  synth->add_option("--stocks", synth_params.n_stocks, "Number of stocks")
      ->check(CLI::PositiveNumber);
  synth->add_option("--months", synth_params.n_months, "Number of months")
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_params.seed, "RNG seed");
  synth->add_option("--signal-scale", synth_params.signal_scale,
                    "Planted signal strength (0 disables the signal)");
  synth->add_option("--start", synth_start, "First month, YYYY-MM-DD")
      ->check([](const std::string& s) -> std::string {
        try {
          Date::parse(s);
          return {};
        } catch (const std::exception& e) {
          return e.what();
        }
      });

  std::string config_path;
  std::string out_dir = "out";
  const char* needs_config[] = {"ingest", "features", "preprocess", "backtest", "report"};
  const char* descriptions[] = {
      "Build the point-in-time panel and write the merged CSV",
      "Compute the financial-ratio features for every panel row",
      "Fit the standardize/VIF/correlation chain on the training window",
      "Run the three-phase walk-forward protocol",
      "Render plots and a readable summary of the protocol run"};
  for (std::size_t i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(needs_config[i], descriptions[i]);
    sub->add_option("--config", config_path, "Key=value config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (default: out)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return 0;  // --help and friends
    std::cerr << '\n' << app.help();
    return 2;
  }

  try {
    if (app.got_subcommand("synth")) {
      synth_params.start = Date::parse(synth_start);
      return cmd_synth(synth_params);
    }
    Config cfg = load_config(config_path);
    if (app.got_subcommand("ingest")) return cmd_ingest(cfg, out_dir);
    if (app.got_subcommand("features")) return cmd_features(cfg, out_dir);
    if (app.got_subcommand("preprocess")) return cmd_preprocess(cfg, out_dir);
    if (app.got_subcommand("backtest")) return cmd_backtest(cfg, out_dir);
    if (app.got_subcommand("report")) return cmd_report(cfg, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
