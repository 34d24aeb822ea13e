#include "midcap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "midcap/config.hpp"
#include "midcap/csv.hpp"
#include "midcap/errors.hpp"

namespace midcap {

namespace {

// All randomness flows through one generator consumed in a fixed order,
// with hand-rolled transforms (std distributions are not pinned across
// standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {  // Box-Muller with a cached spare
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.141592653589793 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

std::string make_ticker(int i) {
  std::string t = "AAA";
  t[2] = static_cast<char>('A' + i % 26);
  t[1] = static_cast<char>('A' + (i / 26) % 26);
  t[0] = static_cast<char>('A' + (i / 676) % 26);
  return t;
}

Date quarter_end_before(const Date& d) {
  // Latest calendar quarter end strictly before d.
  int m = d.month_index() - 1;
  while ((m % 12 + 1) % 3 != 0) --m;  // month in {3,6,9,12}
  int year = m / 12;
  int month = m % 12 + 1;
  int day = month == 3 ? 31 : month == 6 ? 30 : month == 9 ? 30 : 31;
  return Date{year, month, day};
}

struct StockState {
  std::int64_t permno = 0;
  std::int64_t gvkey = 0;
  std::string tic;
  int entry_month = 0;
  int delist_month = 0;  // first month with no row
  bool has_sentiment = true;

  double log_cap_target = 0.0;
  double log_cap = 0.0;
  double prc = 0.0;
  double assets = 0.0;       // at, dollars
  double turnover = 0.0;     // revt = assets * turnover / 4 per quarter
  double u_liq = 0.0;
  double lev = 0.0;
  double beta_mkt = 0.0;
  double sigma_idio = 0.0;
  double ep_core = 0.0;      // flat-|.| shaped valuation driver
  double ep_wiggle = 0.0;    // slow AR(1) around the core
  double u_gm = 0.0;         // gross-margin driver, quarterly AR(1)
  double u_opex = 0.0;       // opex-ratio driver, quarterly AR(1)
  double u_sent = 0.0;       // sentiment driver, monthly AR(1)
  double next_ret = 0.0;     // return to stamp on the next month's row
  bool has_ret = false;

  // What the pipeline can observe after merge + forward fill: the
  // latest published value of each field, carried forward.
  std::optional<double> obs_epspx, obs_gp, obs_revt;
};

struct QuarterRecord {
  std::int64_t gvkey;
  Date datadate;
  std::string tic;
  std::optional<double> at, lt, ceq, revt, gp, oiadp, ni, act, lct, dltt, dlc, che, xint,
      ebitda, epspx;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

std::string fmt(double v) { return csv::format_double(v); }

std::string fmt(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

}  // namespace

SynthSummary generate_synthetic(const SynthParams& params) {
  if (params.n_stocks < 2 || params.n_months < 2)
    throw ValidationError("generate_synthetic: need at least 2 stocks and 2 months");
  Rng rng(params.seed);
  int n = params.n_stocks;
  int m_total = params.n_months;

  // --- static stock population ---------------------------------------
  std::vector<StockState> stocks(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    StockState& s = stocks[static_cast<std::size_t>(i)];
    s.permno = 10001 + 7LL * i;
    s.gvkey = 20001 + 3LL * i;
    s.tic = make_ticker(i);

    // Mean-reverting log market caps keep most names firmly inside the
    // $2B..$10B band; a handful of edge dwellers target the boundary so
    // the cap filter visibly bites every month.
    double target = 4.5e9 * std::exp(0.22 * rng.normal());
    target = clamp(target, 2.7e9, 8.2e9);
    if (i % 83 == 40) target = 1.9e9;    // low-edge dwellers
    if (i % 97 == 50) target = 10.4e9;   // high-edge dwellers
    s.log_cap_target = std::log(target);
    s.log_cap = s.log_cap_target + 0.09 * rng.normal();

    s.prc = rng.uniform(20.0, 80.0);
    s.assets = std::exp(s.log_cap_target) * rng.uniform(0.45, 1.15);
    s.turnover = rng.uniform(0.5, 1.3);
    s.u_liq = rng.normal();
    s.lev = clamp(0.55 - 0.13 * s.u_liq + 0.05 * rng.normal(), 0.15, 0.8);
    s.beta_mkt = rng.uniform(0.85, 1.15);
    s.sigma_idio = rng.uniform(0.05, 0.065);

    // Bimodal-flat valuation driver: |value| roughly uniform away from
    // zero, which keeps the optimized weight tails short relative to a
    // Gaussian cross-section.
    double u = rng.uniform(-1.0, 1.0);
    s.ep_core = (u < 0 ? -1.0 : 1.0) * (0.4 + 0.6 * std::abs(u));
    s.ep_wiggle = rng.normal() * 0.05;
    s.u_gm = rng.normal();
    s.u_opex = 3.5 * rng.normal();
    s.u_sent = rng.normal();

    s.entry_month = 0;
    s.delist_month = m_total;
    if (i % 72 == 59) s.entry_month = 12 + (i * 7) % 30;   // late entries
    if (i % 61 == 41) s.delist_month = 36 + (i * 13) % 90; // delists
    s.has_sentiment = i % 25 != 0;  // a sliver of names never covered
  }

  // Market factor: index by row month; mkt[m] is the market return over
  // the month ending at row m.
  std::vector<double> mkt(static_cast<std::size_t>(m_total), 0.0);
  std::vector<double> bench(static_cast<std::size_t>(m_total), 0.0);
  for (int m = 0; m < m_total; ++m) {
    mkt[static_cast<std::size_t>(m)] = 0.007 + 0.035 * rng.normal();
    bench[static_cast<std::size_t>(m)] = mkt[static_cast<std::size_t>(m)] + 0.002 * rng.normal();
  }

  std::ostringstream crsp, sentiment;
  crsp << "permno,date,prc,shrout,ret,retx\n";
  sentiment << "gvkey,date,avg_sentiment\n";
  std::vector<QuarterRecord> records;
  SynthSummary summary;

  std::vector<std::string> dup_pool;  // a few rows echoed verbatim at the end

  // --- monthly simulation --------------------------------------------
  for (int m = 0; m < m_total; ++m) {
    Date date = params.start.add_months(m);

    // Advance state and stamp this month's rows.
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
      StockState& s = stocks[static_cast<std::size_t>(i)];
      if (m < s.entry_month || m >= s.delist_month) continue;
      active.push_back(i);

      if (m > s.entry_month) {
        s.prc *= 1.0 + s.next_ret;
        s.has_ret = true;
        s.log_cap += 0.15 * (s.log_cap_target - s.log_cap) + 0.05 * rng.normal();
      } else {
        s.has_ret = false;  // no prior month on record
      }
      double cap = std::exp(s.log_cap);
      double shrout = cap / (s.prc * 1000.0);

      bool publish = date.month % 3 == 1 || m == s.entry_month;  // Jan/Apr/Jul/Oct
      if (publish) {
        // Quarterly statement. Drivers step once per publication.
        s.u_gm = 0.95 * s.u_gm + 0.3122 * rng.normal();
        s.u_opex = 0.9 * s.u_opex + 1.526 * rng.normal();
        s.assets *= 1.005 + 0.01 * rng.normal();

        QuarterRecord q;
        q.gvkey = s.gvkey;
        q.datadate = quarter_end_before(date);
        q.tic = s.tic;
        double at = s.assets;
        double lt = at * s.lev;
        double ceq = at - lt;
        double lct = 0.25 * at * (1.0 + 0.1 * rng.normal());
        double cr_target = 1.2 + 0.8 * s.u_liq + 0.04 * rng.normal();
        double act = lct * clamp(cr_target, 0.3, 4.0);
        double dltt = 0.6 * lt * (1.0 + 0.05 * rng.normal());
        double dlc = 0.1 * lt * (1.0 + 0.05 * rng.normal());
        double che = 0.08 * at * (1.0 + 0.3 * s.u_liq * 0.2 + 0.1 * rng.normal());
        double revt = at * s.turnover / 4.0;
        double gm_frac = clamp(0.35 + 0.12 * s.u_gm, 0.02, 0.9);
        double gp = gm_frac * revt;
        double opex_frac = clamp(0.18 + 0.03 * s.u_opex, 0.01, 0.45);
        double oiadp = gp - opex_frac * revt;
        double xint = 0.05 * (dltt + dlc) * (1.0 + 0.1 * rng.normal());
        double tax = 0.25 + 0.02 * rng.normal();
        double ni = (oiadp - xint) * (1.0 - clamp(tax, 0.0, 0.5));
        double ebitda = oiadp + 0.05 * at / 4.0;
        double epspx = (0.05 + 0.025 * (s.ep_core + s.ep_wiggle)) * s.prc;

        // Field-level gaps: some statements simply omit an item, which
        // is what the forward fill downstream is for.
        auto maybe = [&](double v, double p_missing) -> std::optional<double> {
          return rng.uniform() < p_missing ? std::nullopt : std::optional<double>(v);
        };
        q.at = maybe(at, 0.03);
        q.lt = maybe(lt, 0.03);
        q.ceq = ceq;  // core fields always present
        q.revt = revt;
        q.gp = maybe(gp, 0.03);
        q.oiadp = maybe(oiadp, 0.03);
        q.ni = maybe(ni, 0.03);
        q.act = maybe(act, 0.03);
        q.lct = maybe(lct, 0.03);
        q.dltt = maybe(dltt, 0.03);
        q.dlc = maybe(dlc, 0.03);
        q.che = maybe(che, 0.03);
        q.xint = maybe(xint, 0.08);
        q.ebitda = maybe(ebitda, 0.03);
        q.epspx = epspx;
        records.push_back(q);

        // Track the filled view the pipeline will reconstruct.
        s.obs_epspx = epspx;
        if (q.gp) s.obs_gp = gp;
        s.obs_revt = revt;
        s.ep_wiggle = 0.8 * s.ep_wiggle + 0.03 * rng.normal();
      }

      // Monthly sentiment with occasional coverage holes.
      s.u_sent = 0.9 * s.u_sent + 0.4359 * rng.normal();
      if (s.has_sentiment && rng.uniform() >= 0.05) {
        double val = clamp(0.3 * s.u_sent + 0.15 * rng.normal(), -1.0, 1.0);
        sentiment << s.gvkey << ',' << date.to_string() << ',' << fmt(val) << '\n';
        ++summary.sentiment_rows;
      }

      // CRSP row, with deliberate dirt: negative prices (bid/ask
      // convention), the odd missing price, a couple of zero-shrout
      // rows, and duplicated lines appended at the end of the file.
      double prc_out = s.prc;
      if (rng.uniform() < 0.005) prc_out = -prc_out;
      bool missing_prc = rng.uniform() < 0.0003;
      double shrout_out = shrout;
      if ((i == 17 && m == 30) || (i == 23 && m == 50)) shrout_out = 0.0;

      std::ostringstream line;
      line << s.permno << ',' << date.to_string() << ',' << (missing_prc ? "" : fmt(prc_out))
           << ',' << fmt(shrout_out) << ',';
      if (s.has_ret) line << fmt(s.next_ret);
      line << ',';
      if (s.has_ret) line << fmt(s.next_ret - 0.002 * (0.5 + 0.5 * rng.uniform()));
      line << '\n';
      crsp << line.str();
      ++summary.crsp_rows;
      if ((i == 31 && m == 40) || (i == 131 && m == 80) || (i == 257 && m == 100))
        dup_pool.push_back(line.str());
    }

    // Cross-sectional z-scores of the observable planted drivers; the
    // next month's returns load on exactly what a point-in-time reader
    // of the files can reconstruct today.
    auto zscores = [&](auto&& getter) {
      std::vector<double> vals(active.size(), 0.0);
      std::vector<char> present(active.size(), 0);
      double sum = 0.0;
      int cnt = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        auto v = getter(stocks[static_cast<std::size_t>(active[k])]);
        if (v) {
          vals[k] = *v;
          present[k] = 1;
          sum += *v;
          ++cnt;
        }
      }
      std::vector<double> z(active.size(), 0.0);
      if (cnt < 2) return z;
      double mean = sum / cnt;
      double ss = 0.0;
      for (std::size_t k = 0; k < active.size(); ++k)
        if (present[k]) ss += (vals[k] - mean) * (vals[k] - mean);
      double sd = std::sqrt(ss / cnt);
      if (sd == 0.0) return z;
      for (std::size_t k = 0; k < active.size(); ++k)
        if (present[k]) z[k] = clamp((vals[k] - mean) / sd, -3.0, 3.0);
      return z;
    };
    auto z_ep = zscores([](const StockState& s) -> std::optional<double> {
      if (!s.obs_epspx) return std::nullopt;
      return *s.obs_epspx / s.prc;
    });
    auto z_gm = zscores([](const StockState& s) -> std::optional<double> {
      if (!s.obs_gp || !s.obs_revt || *s.obs_revt == 0.0) return std::nullopt;
      return *s.obs_gp / *s.obs_revt;
    });
    auto z_sent = zscores([](const StockState& s) -> std::optional<double> {
      if (!s.has_sentiment) return std::nullopt;
      return 0.3 * s.u_sent;  // this month's signal sans observation noise
    });

    if (m + 1 < m_total) {
      double mkt_next = mkt[static_cast<std::size_t>(m + 1)];
      for (std::size_t k = 0; k < active.size(); ++k) {
        StockState& s = stocks[static_cast<std::size_t>(active[k])];
        double alpha = params.signal_scale *
                       (0.004 * z_ep[k] + 0.002 * z_gm[k] + 0.0015 * z_sent[k]);
        s.next_ret = alpha + s.beta_mkt * mkt_next + s.sigma_idio * rng.normal();
      }
    }
  }

  for (const auto& line : dup_pool) {
    crsp << line;
    ++summary.crsp_rows;
  }

  // --- serialize ------------------------------------------------------
  std::ostringstream compustat;
  compustat << "gvkey,datadate,tic,at,lt,ceq,revt,gp,oiadp,ni,act,lct,dltt,dlc,che,xint,"
               "ebitda,epspx\n";
  for (const auto& q : records) {
    compustat << q.gvkey << ',' << q.datadate.to_string() << ',' << q.tic << ',' << fmt(q.at)
              << ',' << fmt(q.lt) << ',' << fmt(q.ceq) << ',' << fmt(q.revt) << ',' << fmt(q.gp)
              << ',' << fmt(q.oiadp) << ',' << fmt(q.ni) << ',' << fmt(q.act) << ','
              << fmt(q.lct) << ',' << fmt(q.dltt) << ',' << fmt(q.dlc) << ',' << fmt(q.che)
              << ',' << fmt(q.xint) << ',' << fmt(q.ebitda) << ',' << fmt(q.epspx) << '\n';
    ++summary.compustat_rows;
  }

  std::ostringstream links;
  links << "permno,gvkey,linktype,linkprim,linkdt,linkenddt\n";
  for (int i = 0; i < n; ++i) {
    const StockState& s = stocks[static_cast<std::size_t>(i)];
    Date linkdt{2012, 1, 1};
    std::string linkend;
    if (i == 7) linkdt = Date{2014, 6, 1};          // late link: early months unlinked
    if (i == 5) linkend = "2018-06-30";             // link dies; fundamentals go stale
    links << s.permno << ',' << s.gvkey << ",LU,P," << linkdt.to_string() << ',' << linkend
          << '\n';
    ++summary.link_rows;
    if (i == 3 || i == 9 || i == 11) {
      // Harmless secondary link to a shell gvkey with no fresh records.
      links << s.permno << ',' << 90000 + i << ",LS,N,2012-01-01,\n";
      ++summary.link_rows;
    }
  }
  // Stale records for the shell gvkeys so the secondary-link path has
  // something to consider and reject.
  for (int i : {3, 9, 11}) {
    QuarterRecord q;
    q.gvkey = 90000 + i;
    q.datadate = Date{2012, 3, 31};
    q.tic = "SHL";
    q.at = 1e9;
    q.revt = 2e8;
    q.ceq = 5e8;
    q.epspx = 1.0;
    compustat << q.gvkey << ',' << q.datadate.to_string() << ',' << q.tic << ',' << fmt(q.at)
              << ',' << "" << ',' << fmt(q.ceq) << ',' << fmt(q.revt)
              << ",,,,,,,,,,," << fmt(q.epspx) << '\n';
    ++summary.compustat_rows;
  }

  std::ostringstream benchmark;
  benchmark << "date,ret\n";
  for (int m = 0; m < m_total; ++m) {
    benchmark << params.start.add_months(m).to_string() << ','
              << fmt(bench[static_cast<std::size_t>(m)]) << '\n';
    ++summary.benchmark_rows;
  }

  std::filesystem::path dir(params.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "crsp.csv", crsp.str());
  write_file(dir / "compustat.csv", compustat.str());
  write_file(dir / "links.csv", links.str());
  write_file(dir / "sentiment.csv", sentiment.str());
  write_file(dir / "benchmark.csv", benchmark.str());

  Config config;
  config.crsp = "crsp.csv";
  config.compustat = "compustat.csv";
  config.links = "links.csv";
  config.sentiment = "sentiment.csv";
  config.benchmark = "benchmark.csv";
  config.seed = params.seed;
  write_file(dir / "config.cfg", serialize_config(config));
  return summary;
}

}  // namespace midcap
