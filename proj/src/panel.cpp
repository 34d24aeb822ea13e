#include "midcap/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "midcap/csv.hpp"
#include "midcap/errors.hpp"

namespace midcap {

namespace {

using FieldPtr = std::optional<double> Fundamentals::*;

struct FieldDesc {
  const char* name;
  FieldPtr ptr;
};

constexpr FieldDesc kFields[kNumFundamentals] = {
    {"at", &Fundamentals::at},       {"lt", &Fundamentals::lt},
    {"ceq", &Fundamentals::ceq},     {"revt", &Fundamentals::revt},
    {"gp", &Fundamentals::gp},       {"oiadp", &Fundamentals::oiadp},
    {"ni", &Fundamentals::ni},       {"act", &Fundamentals::act},
    {"lct", &Fundamentals::lct},     {"dltt", &Fundamentals::dltt},
    {"dlc", &Fundamentals::dlc},     {"che", &Fundamentals::che},
    {"xint", &Fundamentals::xint},   {"ebitda", &Fundamentals::ebitda},
    {"epspx", &Fundamentals::epspx},
};

std::optional<double> parse_optional(const std::string& s, const std::string& path,
                                     std::size_t line, const char* col) {
  if (s.empty()) return std::nullopt;
  return csv::parse_double(s, path, line, col);
}

std::optional<Date> parse_optional_date(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return Date::parse(s);
}

}  // namespace

const char* fundamental_name(int i) { return kFields[i].name; }

std::optional<double>& fundamental_field(Fundamentals& f, int i) {
  return f.*(kFields[i].ptr);
}

const std::optional<double>& fundamental_field(const Fundamentals& f, int i) {
  return f.*(kFields[i].ptr);
}

// ---------------------------------------------------------------------------
// Loaders

std::vector<SecurityMonth> load_crsp(const std::string& path, CrspLoadStats* stats) {
  csv::Reader reader(path, {"permno", "date", "prc", "shrout", "ret", "retx"});
  CrspLoadStats local;
  std::vector<SecurityMonth> rows;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++local.rows_read;
    SecurityMonth r;
    r.permno = csv::parse_int(f[0], path, reader.line_no(), "permno");
    r.date = Date::parse(f[1]);
    auto prc = parse_optional(f[2], path, reader.line_no(), "prc");
    auto shrout = parse_optional(f[3], path, reader.line_no(), "shrout");
    if (!prc || *prc == 0.0) {
      ++local.dropped_missing_prc;
      continue;
    }
    if (!shrout || *shrout <= 0.0) {
      ++local.dropped_nonpositive_shrout;
      continue;
    }
    if (*prc < 0.0) {
      // CRSP stores bid/ask midpoints as negative prices.
      ++local.negative_prc_adjusted;
      *prc = -*prc;
    }
    r.prc = *prc;
    r.shrout = *shrout;
    r.ret = parse_optional(f[4], path, reader.line_no(), "ret");
    r.retx = parse_optional(f[5], path, reader.line_no(), "retx");
    r.market_cap = r.prc * r.shrout * 1000.0;
    rows.push_back(std::move(r));
  }

  // One row per security-month; on duplicates the last row in file order
  // wins (later rows are treated as corrections).
  std::unordered_map<std::int64_t, std::unordered_map<int, std::size_t>> seen;
  std::vector<char> keep(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& months = seen[rows[i].permno];
    auto [it, inserted] = months.emplace(rows[i].date.month_index(), i);
    if (!inserted) {
      keep[it->second] = 0;
      it->second = i;
      ++local.duplicates_dropped;
    }
  }
  if (local.duplicates_dropped > 0) {
    std::cerr << "warning: " << path << ": " << local.duplicates_dropped
              << " duplicate (permno, month) rows dropped, kept last\n";
  }
  std::vector<SecurityMonth> out;
  out.reserve(rows.size() - local.duplicates_dropped);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) out.push_back(std::move(rows[i]));
  std::sort(out.begin(), out.end(), [](const SecurityMonth& a, const SecurityMonth& b) {
    return a.permno != b.permno ? a.permno < b.permno : a.date < b.date;
  });
  if (stats) *stats = local;
  return out;
}

std::vector<CompustatRecord> load_compustat(const std::string& path) {
  std::vector<std::string> cols = {"gvkey", "datadate", "tic"};
  for (const auto& fd : kFields) cols.push_back(fd.name);
  csv::Reader reader(path, cols);
  std::vector<CompustatRecord> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    CompustatRecord r;
    r.gvkey = csv::parse_int(f[0], path, reader.line_no(), "gvkey");
    r.datadate = Date::parse(f[1]);
    r.tic = f[2];
    for (int i = 0; i < kNumFundamentals; ++i)
      fundamental_field(r.fundamentals, i) =
          parse_optional(f[3 + static_cast<std::size_t>(i)], path, reader.line_no(),
                         kFields[i].name);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const CompustatRecord& a, const CompustatRecord& b) {
    return a.gvkey != b.gvkey ? a.gvkey < b.gvkey : a.datadate < b.datadate;
  });
  return out;
}

std::vector<LinkRecord> load_links(const std::string& path) {
  csv::Reader reader(path, {"permno", "gvkey", "linktype", "linkprim", "linkdt", "linkenddt"});
  std::vector<LinkRecord> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    LinkRecord r;
    r.permno = csv::parse_int(f[0], path, reader.line_no(), "permno");
    r.gvkey = csv::parse_int(f[1], path, reader.line_no(), "gvkey");
    r.linktype = f[2];
    r.linkprim = f[3];
    r.linkdt = Date::parse(f[4]);
    r.linkenddt = parse_optional_date(f[5]);
    if (r.linkenddt && *r.linkenddt < r.linkdt)
      throw ValidationError(path + " line " + std::to_string(reader.line_no()) +
                            ": linkenddt precedes linkdt");
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const LinkRecord& a, const LinkRecord& b) {
    if (a.permno != b.permno) return a.permno < b.permno;
    if (a.linkdt != b.linkdt) return a.linkdt < b.linkdt;
    return a.gvkey < b.gvkey;
  });
  return out;
}

std::vector<SentimentRecord> load_sentiment(const std::string& path) {
  csv::Reader reader(path, {"gvkey", "date", "avg_sentiment"});
  std::vector<SentimentRecord> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    SentimentRecord r;
    r.gvkey = csv::parse_int(f[0], path, reader.line_no(), "gvkey");
    r.date = Date::parse(f[1]);
    r.avg_sentiment = csv::parse_double(f[2], path, reader.line_no(), "avg_sentiment");
    if (r.avg_sentiment < -1.0 || r.avg_sentiment > 1.0)
      throw ValidationError(path + " line " + std::to_string(reader.line_no()) +
                            ": avg_sentiment outside [-1, 1]");
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const SentimentRecord& a, const SentimentRecord& b) {
    return a.gvkey != b.gvkey ? a.gvkey < b.gvkey : a.date < b.date;
  });
  return out;
}

std::vector<BenchmarkObservation> load_benchmark(const std::string& path) {
  csv::Reader reader(path, {"date", "ret"});
  std::vector<BenchmarkObservation> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    BenchmarkObservation r;
    r.date = Date::parse(f[0]);
    r.ret = csv::parse_double(f[1], path, reader.line_no(), "ret");
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const BenchmarkObservation& a, const BenchmarkObservation& b) {
              return a.date < b.date;
            });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].date == out[i - 1].date)
      throw ValidationError(path + ": duplicate benchmark date " + out[i].date.to_string());
  return out;
}

// ---------------------------------------------------------------------------
// Panel

Panel Panel::from_rows(std::vector<SecurityMonth> rows, std::vector<FillLogEntry> fill_log) {
  std::sort(rows.begin(), rows.end(), [](const SecurityMonth& a, const SecurityMonth& b) {
    return a.permno != b.permno ? a.permno < b.permno : a.date < b.date;
  });
  Panel p;
  p.rows_ = std::move(rows);
  p.fill_log_ = std::move(fill_log);
  for (std::size_t i = 0; i < p.rows_.size(); ++i) {
    const auto& r = p.rows_[i];
    auto& ids = p.by_permno_[r.permno];
    if (!ids.empty()) {
      const auto& prev = p.rows_[ids.back()];
      if (prev.date.month_index() == r.date.month_index())
        throw ValidationError("duplicate panel row for permno " + std::to_string(r.permno) +
                              " in month " + r.date.to_string().substr(0, 7));
    }
    ids.push_back(i);
    p.by_month_[r.date.month_index()].push_back(i);
  }
  return p;
}

Date Panel::first_date() const {
  if (rows_.empty()) throw EmptyUniverseError("panel has no rows");
  const auto& ids = by_month_.begin()->second;
  Date d = rows_[ids.front()].date;
  for (auto i : ids) d = std::min(d, rows_[i].date);
  return d;
}

Date Panel::last_date() const {
  if (rows_.empty()) throw EmptyUniverseError("panel has no rows");
  const auto& ids = by_month_.rbegin()->second;
  Date d = rows_[ids.front()].date;
  for (auto i : ids) d = std::max(d, rows_[i].date);
  return d;
}

PanelView Panel::as_of(const Date& t) const {
  PanelView v;
  v.panel_ = this;
  v.cutoff_ = t;
  v.before_first_ = rows_.empty() || t < first_date();
  return v;
}

PanelView Panel::full_view() const {
  if (rows_.empty()) {
    PanelView v;
    v.panel_ = this;
    v.before_first_ = true;
    return v;
  }
  return as_of(last_date());
}

bool PanelView::empty() const {
  return panel_ == nullptr || panel_->rows_.empty() || before_first_;
}

const SecurityMonth* PanelView::row(std::int64_t permno, int month_index) const {
  if (empty()) return nullptr;
  auto it = panel_->by_permno_.find(permno);
  if (it == panel_->by_permno_.end()) return nullptr;
  const auto& ids = it->second;
  auto pos = std::lower_bound(ids.begin(), ids.end(), month_index,
                              [&](std::size_t i, int m) {
                                return panel_->rows_[i].date.month_index() < m;
                              });
  if (pos == ids.end()) return nullptr;
  const SecurityMonth& r = panel_->rows_[*pos];
  if (r.date.month_index() != month_index || cutoff_ < r.date) return nullptr;
  return &r;
}

const SecurityMonth* PanelView::latest_row(std::int64_t permno, int month_index) const {
  if (empty()) return nullptr;
  auto it = panel_->by_permno_.find(permno);
  if (it == panel_->by_permno_.end()) return nullptr;
  const auto& ids = it->second;
  auto pos = std::upper_bound(ids.begin(), ids.end(), month_index,
                              [&](int m, std::size_t i) {
                                return m < panel_->rows_[i].date.month_index();
                              });
  while (pos != ids.begin()) {
    --pos;
    const SecurityMonth& r = panel_->rows_[*pos];
    if (!(cutoff_ < r.date)) return &r;
  }
  return nullptr;
}

std::vector<std::int64_t> PanelView::permnos_in_month(int month_index) const {
  std::vector<std::int64_t> out;
  if (empty()) return out;
  auto it = panel_->by_month_.find(month_index);
  if (it == panel_->by_month_.end()) return out;
  for (auto i : it->second) {
    const SecurityMonth& r = panel_->rows_[i];
    if (!(cutoff_ < r.date)) out.push_back(r.permno);
  }
  return out;
}

std::vector<int> PanelView::months() const {
  std::vector<int> out;
  if (empty()) return out;
  int cut = cutoff_.month_index();
  for (const auto& [m, ids] : panel_->by_month_) {
    if (m > cut) break;
    if (m < cut) {
      out.push_back(m);
      continue;
    }
    for (auto i : ids) {
      if (!(cutoff_ < panel_->rows_[i].date)) {
        out.push_back(m);
        break;
      }
    }
  }
  return out;
}

std::optional<Date> PanelView::month_label(int month_index) const {
  if (empty()) return std::nullopt;
  auto it = panel_->by_month_.find(month_index);
  if (it == panel_->by_month_.end()) return std::nullopt;
  std::optional<Date> best;
  for (auto i : it->second) {
    const SecurityMonth& r = panel_->rows_[i];
    if (cutoff_ < r.date) continue;
    if (!best || *best < r.date) best = r.date;
  }
  return best;
}

std::vector<const SecurityMonth*> PanelView::rows() const {
  std::vector<const SecurityMonth*> out;
  if (empty()) return out;
  out.reserve(panel_->rows_.size());
  for (const auto& r : panel_->rows_)
    if (!(cutoff_ < r.date)) out.push_back(&r);
  return out;
}

// ---------------------------------------------------------------------------
// Merge

Panel merge_link(const std::vector<SecurityMonth>& crsp_rows,
                 const std::vector<CompustatRecord>& compustat_rows,
                 const std::vector<LinkRecord>& links,
                 const std::vector<SentimentRecord>& sentiment) {
  std::unordered_map<std::int64_t, std::vector<const CompustatRecord*>> by_gvkey;
  for (const auto& r : compustat_rows) by_gvkey[r.gvkey].push_back(&r);
  for (auto& [g, recs] : by_gvkey)
    std::sort(recs.begin(), recs.end(),
              [](const CompustatRecord* a, const CompustatRecord* b) {
                return a->datadate < b->datadate;
              });

  std::unordered_map<std::int64_t, std::vector<const LinkRecord*>> links_by_permno;
  for (const auto& l : links) links_by_permno[l.permno].push_back(&l);

  std::unordered_map<std::int64_t, std::vector<const SentimentRecord*>> sent_by_gvkey;
  for (const auto& s : sentiment) sent_by_gvkey[s.gvkey].push_back(&s);
  for (auto& [g, recs] : sent_by_gvkey)
    std::sort(recs.begin(), recs.end(),
              [](const SentimentRecord* a, const SentimentRecord* b) {
                return a->date < b->date;
              });

  std::vector<SecurityMonth> merged;
  merged.reserve(crsp_rows.size());
  for (const auto& base : crsp_rows) {
    SecurityMonth r = base;

    std::vector<const LinkRecord*> active;
    if (auto it = links_by_permno.find(r.permno); it != links_by_permno.end())
      for (const auto* l : it->second)
        if (l->active_at(r.date)) active.push_back(l);

    std::vector<const LinkRecord*> primaries;
    for (const auto* l : active)
      if (l->is_primary()) primaries.push_back(l);
    if (primaries.size() > 1) {
      std::string msg = "permno " + std::to_string(r.permno) + " at " + r.date.to_string() +
                        ": multiple active primary links (gvkeys";
      for (const auto* l : primaries) msg += " " + std::to_string(l->gvkey);
      throw AmbiguousLinkError(msg + ")");
    }

    // Candidate = most recent record observable at r.date, reachable
    // through any active link. Ties prefer the primary link, then the
    // smaller gvkey, so the join is order-independent.
    const CompustatRecord* best_rec = nullptr;
    const LinkRecord* best_link = nullptr;
    for (const auto* l : active) {
      auto git = by_gvkey.find(l->gvkey);
      if (git == by_gvkey.end()) continue;
      const auto& recs = git->second;
      auto pos = std::upper_bound(recs.begin(), recs.end(), r.date,
                                  [](const Date& d, const CompustatRecord* rec) {
                                    return d < rec->datadate;
                                  });
      if (pos == recs.begin()) continue;
      const CompustatRecord* rec = *(pos - 1);
      bool better = false;
      if (!best_rec) {
        better = true;
      } else if (best_rec->datadate != rec->datadate) {
        better = best_rec->datadate < rec->datadate;
      } else if (best_link->is_primary() != l->is_primary()) {
        better = l->is_primary();
      } else {
        better = l->gvkey < best_link->gvkey;
      }
      if (better) {
        best_rec = rec;
        best_link = l;
      }
    }

    if (best_rec) {
      r.gvkey = best_link->gvkey;
      r.datadate = best_rec->datadate;
      r.tic = best_rec->tic;
      r.fundamentals = best_rec->fundamentals;
      r.link = LinkInfo{best_link->linktype, best_link->linkprim, best_link->linkdt,
                        best_link->linkenddt};
    } else if (primaries.size() == 1) {
      // Linked security with no fundamentals published yet.
      const LinkRecord* l = primaries.front();
      r.gvkey = l->gvkey;
      r.link = LinkInfo{l->linktype, l->linkprim, l->linkdt, l->linkenddt};
    }

    if (r.gvkey) {
      if (auto sit = sent_by_gvkey.find(*r.gvkey); sit != sent_by_gvkey.end()) {
        const auto& recs = sit->second;
        auto pos = std::upper_bound(recs.begin(), recs.end(), r.date,
                                    [](const Date& d, const SentimentRecord* s) {
                                      return d < s->date;
                                    });
        if (pos != recs.begin()) {
          const SentimentRecord* s = *(pos - 1);
          if (s->date.month_index() == r.date.month_index())
            r.avg_sentiment = s->avg_sentiment;
        }
      }
    }
    merged.push_back(std::move(r));
  }
  return Panel::from_rows(std::move(merged));
}

// ---------------------------------------------------------------------------
// Forward fill and filters

Panel forward_fill(const Panel& panel, const FfillOptions& opts) {
  std::vector<SecurityMonth> rows(panel.rows());
  std::vector<FillLogEntry> log = panel.fill_log();

  struct Seen {
    double value = 0.0;
    Date date;
    int month = 0;
    bool set = false;
  };

  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].permno == rows[i].permno) ++j;

    Seen seen[kNumFundamentals];
    Seen seen_sent;
    for (std::size_t k = i; k < j; ++k) {
      SecurityMonth& r = rows[k];
      int m = r.date.month_index();
      auto consider = [&](std::optional<double>& cell, Seen& s, const char* name) {
        if (cell) {
          s = {*cell, r.date, m, true};
          return;
        }
        if (!s.set) return;  // leading gap stays missing
        if (opts.max_staleness_months > 0 && m - s.month > opts.max_staleness_months) return;
        cell = s.value;
        log.push_back({r.permno, name, s.date, r.date});
      };
      for (int fidx = 0; fidx < kNumFundamentals; ++fidx)
        consider(fundamental_field(r.fundamentals, fidx), seen[fidx], kFields[fidx].name);
      consider(r.avg_sentiment, seen_sent, "avg_sentiment");
    }
    i = j;
  }
  return Panel::from_rows(std::move(rows), std::move(log));
}

Panel midcap_filter(const Panel& panel, double min_cap, double max_cap, std::size_t* dropped) {
  if (!(min_cap <= max_cap))
    throw ValidationError("midcap_filter: min_cap exceeds max_cap");
  std::vector<SecurityMonth> rows;
  rows.reserve(panel.rows().size());
  std::size_t n_dropped = 0;
  for (const auto& r : panel.rows()) {
    if (r.market_cap >= min_cap && r.market_cap <= max_cap)
      rows.push_back(r);
    else
      ++n_dropped;
  }
  if (dropped) *dropped = n_dropped;
  return Panel::from_rows(std::move(rows), panel.fill_log());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::optional<double> safe_div(std::optional<double> num, std::optional<double> den) {
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << csv::format_double(*v);
}

}  // namespace

void write_panel_csv(const PanelView& view, std::ostream& out) {
  out << "permno,date,prc,shrout,market_cap,ret,retx,gvkey,datadate,tic";
  for (const auto& fd : kFields) out << ',' << fd.name;
  out << ",pe_ratio,pb_ratio,ps_ratio,enterprise_value,ev_to_ebitda,gross_margin,"
         "operating_margin,net_margin,current_ratio,debt_to_equity,interest_coverage,"
         "linktype_y,linkprim_y,linkdt_y,linkenddt_y,avg_sentiment\n";
  for (const auto* rp : view.rows()) {
    const SecurityMonth& r = *rp;
    const Fundamentals& fu = r.fundamentals;
    out << r.permno << ',' << r.date.to_string() << ',' << csv::format_double(r.prc) << ','
        << csv::format_double(r.shrout) << ',' << csv::format_double(r.market_cap) << ',';
    put(out, r.ret);
    out << ',';
    put(out, r.retx);
    out << ',';
    if (r.gvkey) out << *r.gvkey;
    out << ',';
    if (r.datadate) out << r.datadate->to_string();
    out << ',' << r.tic;
    for (int fidx = 0; fidx < kNumFundamentals; ++fidx) {
      out << ',';
      put(out, fundamental_field(fu, fidx));
    }
    std::optional<double> ev;
    if (fu.dltt && fu.dlc && fu.che) ev = r.market_cap + *fu.dltt + *fu.dlc - *fu.che;
    out << ',';
    put(out, safe_div(r.prc, fu.epspx));                    // pe_ratio
    out << ',';
    put(out, safe_div(r.market_cap, fu.ceq));               // pb_ratio
    out << ',';
    put(out, safe_div(r.market_cap, fu.revt));              // ps_ratio
    out << ',';
    put(out, ev);                                           // enterprise_value
    out << ',';
    put(out, safe_div(ev, fu.ebitda));                      // ev_to_ebitda
    out << ',';
    put(out, safe_div(fu.gp, fu.revt));                     // gross_margin
    out << ',';
    put(out, safe_div(fu.oiadp, fu.revt));                  // operating_margin
    out << ',';
    put(out, safe_div(fu.ni, fu.revt));                     // net_margin
    out << ',';
    put(out, safe_div(fu.act, fu.lct));                     // current_ratio
    out << ',';
    put(out, safe_div(fu.lt, fu.ceq));                      // debt_to_equity
    out << ',';
    put(out, safe_div(fu.ebitda, fu.xint));                 // interest_coverage
    out << ',';
    if (r.link) out << r.link->linktype;
    out << ',';
    if (r.link) out << r.link->linkprim;
    out << ',';
    if (r.link) out << r.link->linkdt.to_string();
    out << ',';
    if (r.link && r.link->linkenddt) out << r.link->linkenddt->to_string();
    out << ',';
    put(out, r.avg_sentiment);
    out << '\n';
  }
}

std::string serialize_panel(const PanelView& view) {
  std::ostringstream ss;
  write_panel_csv(view, ss);
  return ss.str();
}

}  // namespace midcap
