#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "midcap/dates.hpp"

namespace midcap {

// The fifteen Compustat fields of the merged schema, missing until
// linked and possibly forward-filled afterwards.
struct Fundamentals {
  std::optional<double> at;
  std::optional<double> lt;
  std::optional<double> ceq;
  std::optional<double> revt;
  std::optional<double> gp;
  std::optional<double> oiadp;
  std::optional<double> ni;
  std::optional<double> act;
  std::optional<double> lct;
  std::optional<double> dltt;
  std::optional<double> dlc;
  std::optional<double> che;
  std::optional<double> xint;
  std::optional<double> ebitda;
  std::optional<double> epspx;
};

inline constexpr int kNumFundamentals = 15;
const char* fundamental_name(int i);
std::optional<double>& fundamental_field(Fundamentals& f, int i);
const std::optional<double>& fundamental_field(const Fundamentals& f, int i);

// Link metadata carried onto merged rows (the *_y columns of the
// merged-file layout).
struct LinkInfo {
  std::string linktype;
  std::string linkprim;
  Date linkdt;
  std::optional<Date> linkenddt;
};

// One security-month observation. `ret` is the total return over the
// month ending at `date` (the observation is stamped on the first
// trading day following the month it describes), so everything stored
// on a row is observable at `date`.
struct SecurityMonth {
  std::int64_t permno = 0;
  Date date;
  double prc = 0.0;     // closing price, > 0 after cleaning
  double shrout = 0.0;  // shares outstanding, thousands
  std::optional<double> ret;
  std::optional<double> retx;
  double market_cap = 0.0;  // prc * shrout * 1000
  std::optional<std::int64_t> gvkey;
  std::optional<Date> datadate;
  std::string tic;
  Fundamentals fundamentals;
  std::optional<LinkInfo> link;
  std::optional<double> avg_sentiment;  // in [-1, 1] when present
};

struct LinkRecord {
  std::int64_t permno = 0;
  std::int64_t gvkey = 0;
  std::string linktype;
  std::string linkprim;
  Date linkdt;
  std::optional<Date> linkenddt;  // open-ended when absent

  bool is_primary() const { return linkprim == "P" || linkprim == "C"; }
  bool active_at(const Date& d) const {
    return !(d < linkdt) && (!linkenddt || !(*linkenddt < d));
  }
};

struct CompustatRecord {
  std::int64_t gvkey = 0;
  Date datadate;
  std::string tic;
  Fundamentals fundamentals;
};

struct SentimentRecord {
  std::int64_t gvkey = 0;
  Date date;
  double avg_sentiment = 0.0;
};

struct BenchmarkObservation {
  Date date;
  double ret = 0.0;
};

struct FillLogEntry {
  std::int64_t permno = 0;
  std::string field;
  Date source_date;
  Date target_date;
};

// Counters surfaced in the ingest report.
struct IngestReport {
  std::size_t crsp_rows_read = 0;
  std::size_t dropped_missing_prc = 0;
  std::size_t dropped_nonpositive_shrout = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t negative_prc_adjusted = 0;
  std::size_t compustat_rows_read = 0;
  std::size_t link_rows_read = 0;
  std::size_t sentiment_rows_read = 0;
  std::size_t cells_forward_filled = 0;
  std::size_t rows_dropped_midcap = 0;
  std::size_t final_rows = 0;
};

class Panel;

// Read-only slice of a panel: rows dated at or before the cutoff.
// A view over an immutable panel is what every downstream estimator
// receives, so nothing computed "as of t" can see later rows.
class PanelView {
 public:
  PanelView() = default;

  Date cutoff() const { return cutoff_; }
  bool before_first() const { return before_first_; }
  bool empty() const;

  // Row for (permno, calendar month), or nullptr if absent/after cutoff.
  const SecurityMonth* row(std::int64_t permno, int month_index) const;

  // Most recent row for permno with month <= month_index (and date <= cutoff).
  const SecurityMonth* latest_row(std::int64_t permno, int month_index) const;

  // Permnos with a visible row in the given month, ascending.
  std::vector<std::int64_t> permnos_in_month(int month_index) const;

  // Distinct month indices with at least one visible row, ascending.
  std::vector<int> months() const;

  // Latest visible row date within a month (the rebalance stamp).
  std::optional<Date> month_label(int month_index) const;

  // Visible rows in (permno, date) order.
  std::vector<const SecurityMonth*> rows() const;

 private:
  friend class Panel;
  const Panel* panel_ = nullptr;
  Date cutoff_;
  bool before_first_ = false;
};

// Immutable once built; construction is single-writer and all
// post-construction access is read-only.
class Panel {
 public:
  Panel() = default;

  static Panel from_rows(std::vector<SecurityMonth> rows,
                         std::vector<FillLogEntry> fill_log = {});

  const std::vector<SecurityMonth>& rows() const { return rows_; }
  const std::vector<FillLogEntry>& fill_log() const { return fill_log_; }

  bool empty() const { return rows_.empty(); }
  Date first_date() const;
  Date last_date() const;

  // View restricted to rows dated <= t. If t precedes the first row the
  // view is empty and flagged rather than an error.
  PanelView as_of(const Date& t) const;
  PanelView full_view() const;

 private:
  friend class PanelView;
  std::vector<SecurityMonth> rows_;  // sorted by (permno, date)
  std::vector<FillLogEntry> fill_log_;
  // permno -> indices into rows_, ascending date (one row per month)
  std::unordered_map<std::int64_t, std::vector<std::size_t>> by_permno_;
  // month index -> indices into rows_, ascending permno
  std::map<int, std::vector<std::size_t>> by_month_;
};

struct CrspLoadStats {
  std::size_t rows_read = 0;
  std::size_t dropped_missing_prc = 0;
  std::size_t dropped_nonpositive_shrout = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t negative_prc_adjusted = 0;
};

// Loaders. Headers are validated against the documented schemas; a bad
// row is a fail-fast ParseError carrying the line number.
std::vector<SecurityMonth> load_crsp(const std::string& path,
                                     CrspLoadStats* stats = nullptr);
std::vector<CompustatRecord> load_compustat(const std::string& path);
std::vector<LinkRecord> load_links(const std::string& path);
std::vector<SentimentRecord> load_sentiment(const std::string& path);
std::vector<BenchmarkObservation> load_benchmark(const std::string& path);

// Join CRSP rows to the most recent Compustat record with
// datadate <= row date whose link is active at the row date. Sentiment
// joins on (gvkey, month) with the same as-of discipline. Unlinked rows
// are kept with empty fundamentals.
Panel merge_link(const std::vector<SecurityMonth>& crsp_rows,
                 const std::vector<CompustatRecord>& compustat_rows,
                 const std::vector<LinkRecord>& links,
                 const std::vector<SentimentRecord>& sentiment = {});

struct FfillOptions {
  // 0 means unlimited: a stale value is carried forward indefinitely.
  int max_staleness_months = 0;
};

// Last-observation-carried-forward per permno for fundamentals and
// sentiment. Leading gaps stay missing; every fill is logged.
Panel forward_fill(const Panel& panel, const FfillOptions& opts = {});

// Keep rows with min_cap <= market_cap <= max_cap (inclusive both ends,
// re-evaluated monthly). Dropped-row count reported via `dropped`.
Panel midcap_filter(const Panel& panel, double min_cap, double max_cap,
                    std::size_t* dropped = nullptr);

// Merged-panel serialization, 41 columns (identifiers, CRSP fields,
// fundamentals, derived ratios, link metadata, sentiment).
void write_panel_csv(const PanelView& view, std::ostream& out);
std::string serialize_panel(const PanelView& view);

}  // namespace midcap
