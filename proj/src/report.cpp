#include "midcap/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "midcap/csv.hpp"

namespace midcap {

namespace {

json window_json(const Date& start, const Date& end) {
  return json{{"start", start.to_string()}, {"end", end.to_string()}};
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

json ingest_report_json(const IngestReport& r) {
  json j;
  j["crsp_rows_read"] = r.crsp_rows_read;
  j["dropped_missing_prc"] = r.dropped_missing_prc;
  j["dropped_nonpositive_shrout"] = r.dropped_nonpositive_shrout;
  j["duplicates_dropped"] = r.duplicates_dropped;
  j["negative_prc_adjusted"] = r.negative_prc_adjusted;
  j["compustat_rows_read"] = r.compustat_rows_read;
  j["link_rows_read"] = r.link_rows_read;
  j["sentiment_rows_read"] = r.sentiment_rows_read;
  j["cells_forward_filled"] = r.cells_forward_filled;
  j["rows_dropped_midcap"] = r.rows_dropped_midcap;
  j["final_rows"] = r.final_rows;
  return j;
}

json preprocess_report_json(const PreprocessReport& r) {
  json j;
  j["surviving_features"] = r.surviving_features;
  json vifs = json::object();
  for (const auto& [name, vif] : r.vif_table)
    vifs[name] = std::isinf(vif) ? json("inf") : json(vif);
  j["vif_table"] = vifs;
  json elim = json::array();
  for (const auto& e : r.elimination_order)
    elim.push_back(json{{"feature", e.name},
                        {"vif", std::isinf(e.vif) ? json("inf") : json(e.vif)}});
  j["elimination_order"] = elim;
  json groups = json::array();
  for (const auto& g : r.correlation_groups)
    groups.push_back(json{{"members", g.members}, {"representative", g.representative}});
  j["correlation_groups"] = groups;
  json dropped = json::array();
  for (const auto& [name, reason] : r.dropped_features)
    dropped.push_back(json{{"feature", name}, {"reason", reason}});
  j["dropped_features"] = dropped;
  return j;
}

json backtest_report_json(const BacktestReport& report) {
  json j;
  json phases = json::array();
  for (const auto& p : report.phases) {
    json jp;
    jp["name"] = p.spec.name;
    jp["fit_window"] = window_json(p.spec.fit_start, p.spec.fit_end);
    jp["eval_window"] = window_json(p.spec.eval_start, p.spec.eval_end);
    jp["training_observations"] = p.fitted.observations;
    jp["sharpe_annualized"] = p.sharpe_annualized;
    jp["sharpe_monthly"] = p.sharpe_monthly;
    jp["mean_monthly_return"] = p.mean_monthly;
    jp["std_monthly_return"] = p.std_monthly;
    jp["cumulative_return"] = p.cumulative_return;
    jp["turnover"] = p.turnover;
    jp["months_realized"] = p.monthly_returns.size();
    jp["rebalances"] = p.weights_history.size();

    json model;
    model["ridge"] = p.fitted.model.ridge;
    model["intercept"] = p.fitted.model.intercept;
    json betas = json::object();
    for (std::size_t i = 0; i < p.fitted.features.size(); ++i)
      betas[p.fitted.features[i]] = p.fitted.model.beta[static_cast<Eigen::Index>(i)];
    model["beta"] = betas;
    jp["model"] = model;
    jp["preprocess"] = preprocess_report_json(p.fitted.preprocess);

    json rets = json::array();
    for (const auto& [d, r] : p.monthly_returns)
      rets.push_back(json{{"date", d.to_string()}, {"ret", r}});
    jp["monthly_returns"] = rets;

    // The weight history goes to CSV; the JSON keeps the shape of the
    // book (gross, neutrality, tails) per rebalance.
    json weights = json::array();
    for (const auto& w : p.weights_history) {
      double max_abs = 0.0;
      std::vector<double> mags;
      mags.reserve(static_cast<std::size_t>(w.w.size()));
      for (Eigen::Index i = 0; i < w.w.size(); ++i) {
        double a = std::abs(w.w[i]);
        max_abs = std::max(max_abs, a);
        if (a > 0.0) mags.push_back(a);
      }
      double p95 = 0.0;
      if (!mags.empty()) {
        std::sort(mags.begin(), mags.end());
        p95 = mags[static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(mags.size())) - 1)];
      }
      weights.push_back(json{{"date", w.date.to_string()},
                             {"names", w.ids.size()},
                             {"gross", w.gross},
                             {"neutrality_residual", w.neutrality_residual},
                             {"max_abs_weight", max_abs},
                             {"p95_abs_weight", p95},
                             {"zero_portfolio", w.zero_portfolio}});
    }
    jp["weights_summary"] = weights;
    jp["gaps"] = p.gap_log;
    jp["delists"] = p.delist_log.size();
    phases.push_back(jp);
  }
  j["phases"] = phases;

  if (report.benchmark_comparison) {
    const auto& c = *report.benchmark_comparison;
    json cmp;
    json rows = json::array();
    for (std::size_t i = 0; i < c.dates.size(); ++i)
      rows.push_back(json{{"date", c.dates[i].to_string()},
                          {"portfolio", c.portfolio[i]},
                          {"benchmark", c.benchmark[i]},
                          {"excess", c.excess[i]},
                          {"portfolio_cum", c.portfolio_cum[i]},
                          {"benchmark_cum", c.benchmark_cum[i]}});
    cmp["series"] = rows;
    cmp["final_portfolio_cum"] = c.portfolio_cum.back();
    cmp["final_benchmark_cum"] = c.benchmark_cum.back();
    j["benchmark_comparison"] = cmp;
  } else {
    j["benchmark_comparison"] = nullptr;
  }
  return j;
}

void write_phase_returns_csv(const BacktestPhaseResult& phase, std::ostream& out) {
  out << "date,ret\n";
  for (const auto& [d, r] : phase.monthly_returns)
    out << d.to_string() << ',' << fmt(r) << '\n';
}

void write_phase_weights_csv(const BacktestPhaseResult& phase, std::ostream& out) {
  out << "date,permno,weight\n";
  for (const auto& w : phase.weights_history)
    for (std::size_t i = 0; i < w.ids.size(); ++i)
      out << w.date.to_string() << ',' << w.ids[i] << ','
          << fmt(w.w[static_cast<Eigen::Index>(i)]) << '\n';
}

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 440.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

struct Scale {
  double lo, hi, out_lo, out_hi;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (out_lo + out_hi);
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

void svg_header(std::ostringstream& s, const std::string& title) {
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void svg_axes(std::ostringstream& s, const Scale& sx, const Scale& sy, int y_ticks = 6) {
  s << "<line x1=\"" << sx.out_lo << "\" y1=\"" << sy.out_lo << "\" x2=\"" << sx.out_hi
    << "\" y2=\"" << sy.out_lo << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << sx.out_lo << "\" y1=\"" << sy.out_lo << "\" x2=\"" << sx.out_lo
    << "\" y2=\"" << sy.out_hi << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= y_ticks; ++k) {
    double v = sy.lo + (sy.hi - sy.lo) * k / y_ticks;
    double y = sy(v);
    s << "<line x1=\"" << sx.out_lo - 4 << "\" y1=\"" << y << "\" x2=\"" << sx.out_lo
      << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << sx.out_lo - 8 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(std::round(v * 1e4) / 1e4) << "</text>\n";
  }
}

void svg_polyline(std::ostringstream& s, const Scale& sx, const Scale& sy,
                  const std::vector<double>& ys, const std::string& color) {
  s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i)
    s << sx(static_cast<double>(i)) << ',' << sy(ys[i]) << ' ';
  s << "\"/>\n";
}

}  // namespace

std::string render_cumulative_svg(const ComparisonSeries& series) {
  std::ostringstream s;
  svg_header(s, "Cumulative return: portfolio vs benchmark");
  double lo = 0.0;
  double hi = 0.0;
  for (double v : series.portfolio_cum) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : series.benchmark_cum) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  Scale sx{0.0, static_cast<double>(series.dates.size() - 1), kMarginLeft,
           kWidth - kMarginRight};
  Scale sy{lo, hi, kHeight - kMarginBottom, kMarginTop};
  svg_axes(s, sx, sy);
  svg_polyline(s, sx, sy, series.portfolio_cum, "#1f4e9c");
  svg_polyline(s, sx, sy, series.benchmark_cum, "#d97706");
  // x labels: first, middle, last dates
  std::size_t n = series.dates.size();
  for (std::size_t i : {std::size_t{0}, n / 2, n - 1}) {
    s << "<text x=\"" << sx(static_cast<double>(i)) << "\" y=\"" << kHeight - kMarginBottom + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << series.dates[i].to_string() << "</text>\n";
  }
  s << "<rect x=\"" << kMarginLeft + 10 << "\" y=\"" << kMarginTop
    << "\" width=\"12\" height=\"12\" fill=\"#1f4e9c\"/>\n"
    << "<text x=\"" << kMarginLeft + 28 << "\" y=\"" << kMarginTop + 11
    << "\" font-family=\"sans-serif\" font-size=\"12\">portfolio</text>\n"
    << "<rect x=\"" << kMarginLeft + 10 << "\" y=\"" << kMarginTop + 18
    << "\" width=\"12\" height=\"12\" fill=\"#d97706\"/>\n"
    << "<text x=\"" << kMarginLeft + 28 << "\" y=\"" << kMarginTop + 29
    << "\" font-family=\"sans-serif\" font-size=\"12\">benchmark</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string render_weights_svg(const PortfolioWeights& weights) {
  std::ostringstream s;
  svg_header(s, "Portfolio weights at " + weights.date.to_string() + " (blue long, red short)");
  std::vector<double> w(weights.w.data(), weights.w.data() + weights.w.size());
  std::sort(w.begin(), w.end());
  double max_abs = 1e-12;
  for (double v : w) max_abs = std::max(max_abs, std::abs(v));
  Scale sx{0.0, static_cast<double>(w.size()), kMarginLeft, kWidth - kMarginRight};
  Scale sy{-max_abs, max_abs, kHeight - kMarginBottom, kMarginTop};
  double zero_y = sy(0.0);
  s << "<line x1=\"" << kMarginLeft << "\" y1=\"" << zero_y << "\" x2=\""
    << kWidth - kMarginRight << "\" y2=\"" << zero_y << "\" stroke=\"black\"/>\n";
  double bar_w = (kWidth - kMarginLeft - kMarginRight) / static_cast<double>(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double x = sx(static_cast<double>(i));
    double y = sy(w[i]);
    double top = std::min(y, zero_y);
    double h = std::abs(y - zero_y);
    if (h <= 0.0) continue;
    s << "<rect x=\"" << x << "\" y=\"" << top << "\" width=\"" << std::max(bar_w, 0.3)
      << "\" height=\"" << h << "\" fill=\"" << (w[i] > 0 ? "#1f4e9c" : "#c62828")
      << "\"/>\n";
  }
  for (double v : {-max_abs, 0.0, max_abs}) {
    s << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << sy(v) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << fmt(std::round(v * 1e6) / 1e6) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_summary_text(const BacktestReport& report) {
  std::ostringstream s;
  s << "Backtest summary\n================\n";
  for (const auto& p : report.phases) {
    s << '\n'
      << p.spec.name << " phase\n"
      << "  fit window:        " << p.spec.fit_start.to_string() << " .. "
      << p.spec.fit_end.to_string() << '\n'
      << "  eval window:       " << p.spec.eval_start.to_string() << " .. "
      << p.spec.eval_end.to_string() << '\n'
      << "  months realized:   " << p.monthly_returns.size() << '\n'
      << "  Sharpe (annual):   " << fmt(p.sharpe_annualized) << '\n'
      << "  Sharpe (monthly):  " << fmt(p.sharpe_monthly) << '\n'
      << "  mean monthly ret:  " << fmt(p.mean_monthly) << '\n'
      << "  cumulative return: " << fmt(p.cumulative_return) << '\n'
      << "  mean turnover:     " << fmt(p.turnover) << '\n'
      << "  features:          ";
    for (std::size_t i = 0; i < p.fitted.features.size(); ++i)
      s << (i ? ", " : "") << p.fitted.features[i];
    s << '\n';
    if (!p.gap_log.empty()) s << "  skipped months:    " << p.gap_log.size() << '\n';
  }
  if (report.benchmark_comparison) {
    const auto& c = *report.benchmark_comparison;
    s << "\ntest phase vs benchmark\n"
      << "  final portfolio cumulative: " << fmt(c.portfolio_cum.back()) << '\n'
      << "  final benchmark cumulative: " << fmt(c.benchmark_cum.back()) << '\n';
  }
  return s.str();
}

}  // namespace midcap
