#include "midcap/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "midcap/csv.hpp"
#include "midcap/errors.hpp"

namespace midcap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Standardizes one column in place. Returns false when the column is
// degenerate (< 2 non-missing values or zero variance).
bool standardize_column(Eigen::VectorXd& col, double z_clip) {
  std::vector<double> present;
  present.reserve(static_cast<std::size_t>(col.size()));
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (!std::isnan(col[i])) present.push_back(col[i]);
  if (present.size() < 2) return false;

  double med = median_of(present);
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (std::isnan(col[i])) col[i] = med;

  double n = static_cast<double>(col.size());
  double mean = col.mean();
  double var = (col.array() - mean).square().sum() / n;  // population variance
  double sd = std::sqrt(var);
  if (sd == 0.0) return false;

  col = (col.array() - mean) / sd;
  col = col.cwiseMax(-z_clip).cwiseMin(z_clip);
  return true;
}

std::vector<double> average_ranks(const Eigen::VectorXd& v) {
  Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  std::vector<double> ranks(static_cast<std::size_t>(n));
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[static_cast<std::size_t>(order[k])] = avg;
    i = j + 1;
  }
  return ranks;
}

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& x, int j) {
  Eigen::MatrixXd out(x.rows(), x.cols() - 1);
  out.leftCols(j) = x.leftCols(j);
  out.rightCols(x.cols() - 1 - j) = x.rightCols(x.cols() - 1 - j);
  return out;
}

}  // namespace

CrossSection build_cross_section(const std::vector<FeatureRow>& rows) {
  CrossSection cs;
  cs.feature_names = feature_names();
  if (rows.empty()) {
    cs.values.resize(0, kNumFeatures);
    return cs;
  }
  cs.date = rows.front().date;

  std::vector<const FeatureRow*> kept;
  for (const auto& r : rows) {
    bool any = false;
    for (int i = 0; i < kNumFeatures && !any; ++i) any = feature_field(r, i).has_value();
    if (any) kept.push_back(&r);  // all-missing stocks carry no information
  }
  cs.ids.reserve(kept.size());
  cs.values.resize(static_cast<Eigen::Index>(kept.size()), kNumFeatures);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    cs.ids.push_back(kept[i]->permno);
    for (int j = 0; j < kNumFeatures; ++j) {
      const auto& v = feature_field(*kept[i], j);
      cs.values(static_cast<Eigen::Index>(i), j) = v ? *v : kNaN;
    }
  }
  return cs;
}

StandardizedMatrix standardize_and_clip(const CrossSection& raw, double z_clip) {
  StandardizedMatrix out;
  out.date = raw.date;
  out.ids = raw.ids;

  std::vector<Eigen::VectorXd> cols;
  for (std::size_t j = 0; j < raw.feature_names.size(); ++j) {
    Eigen::VectorXd col = raw.values.col(static_cast<Eigen::Index>(j));
    if (standardize_column(col, z_clip)) {
      out.feature_names.push_back(raw.feature_names[j]);
      cols.push_back(std::move(col));
    } else {
      out.dropped.emplace_back(raw.feature_names[j], "degenerate");
    }
  }
  if (cols.empty())
    throw EmptyMatrixError("all features degenerate at " + raw.date.to_string());

  out.values.resize(raw.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.values.col(static_cast<Eigen::Index>(j)) = cols[j];
  return out;
}

StandardizedMatrix standardize_with_list(const CrossSection& raw,
                                         const std::vector<std::string>& names,
                                         double z_clip) {
  StandardizedMatrix out;
  out.date = raw.date;
  out.ids = raw.ids;
  out.feature_names = names;
  out.values.resize(raw.values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = std::find(raw.feature_names.begin(), raw.feature_names.end(), names[j]);
    if (it == raw.feature_names.end())
      throw AlignmentError("feature '" + names[j] + "' absent from cross-section");
    auto src = static_cast<Eigen::Index>(it - raw.feature_names.begin());
    Eigen::VectorXd col = raw.values.col(src);
    if (!standardize_column(col, z_clip)) col.setZero();  // degenerate → neutral z
    out.values.col(static_cast<Eigen::Index>(j)) = col;
  }
  return out;
}

double compute_vif(const Eigen::MatrixXd& x, int j) {
  Eigen::Index n = x.rows();
  Eigen::Index p = x.cols();
  Eigen::VectorXd y = x.col(j);
  double mean_y = y.mean();
  double sst = (y.array() - mean_y).square().sum();
  if (sst == 0.0) return std::numeric_limits<double>::infinity();

  // Auxiliary regression of column j on the others plus an intercept.
  Eigen::MatrixXd d(n, p);
  d.col(0).setOnes();
  Eigen::Index c = 1;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (k == j) continue;
    d.col(c++) = x.col(k);
  }
  Eigen::MatrixXd dtd = d.transpose() * d;
  Eigen::VectorXd dty = d.transpose() * y;
  Eigen::VectorXd b = dtd.ldlt().solve(dty);
  double ssr = (y - d * b).squaredNorm();
  double r2 = 1.0 - ssr / sst;
  r2 = std::clamp(r2, 0.0, 1.0);
  if (r2 >= 1.0 - 1e-12) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - r2);
}

VifResult vif_prune(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                    double threshold) {
  if (x.cols() != static_cast<Eigen::Index>(names.size()))
    throw AlignmentError("vif_prune: matrix/name size mismatch");
  VifResult res;
  Eigen::MatrixXd cur = x;
  std::vector<std::string> cur_names = names;

  while (cur.cols() > 1) {
    double worst = -1.0;
    int worst_j = -1;
    for (int j = 0; j < cur.cols(); ++j) {
      double v = compute_vif(cur, j);
      // >= keeps the later column on ties, e.g. of two identical
      // columns the second one goes.
      if (v >= worst) {
        worst = v;
        worst_j = j;
      }
    }
    if (!(worst > threshold)) break;
    res.eliminated.push_back({cur_names[static_cast<std::size_t>(worst_j)], worst});
    cur = drop_column(cur, worst_j);
    cur_names.erase(cur_names.begin() + worst_j);
  }

  res.survivors = cur_names;
  for (int j = 0; j < cur.cols(); ++j)
    res.final_vif.emplace_back(cur_names[static_cast<std::size_t>(j)],
                               cur.cols() > 1 ? compute_vif(cur, j) : 1.0);
  return res;
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double ma = a.mean();
  double mb = b.mean();
  Eigen::ArrayXd da = a.array() - ma;
  Eigen::ArrayXd db = b.array() - mb;
  double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) return 0.0;
  return (da * db).sum() / denom;
}

Eigen::MatrixXd pearson_correlation(const Eigen::MatrixXd& x) {
  Eigen::Index p = x.cols();
  Eigen::MatrixXd corr(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    corr(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < p; ++j) {
      double c = pearson_correlation(x.col(i), x.col(j));
      corr(i, j) = c;
      corr(j, i) = c;
    }
  }
  return corr;
}

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  Eigen::VectorXd va = Eigen::Map<Eigen::VectorXd>(ra.data(), static_cast<Eigen::Index>(ra.size()));
  Eigen::VectorXd vb = Eigen::Map<Eigen::VectorXd>(rb.data(), static_cast<Eigen::Index>(rb.size()));
  return pearson_correlation(va, vb);
}

CorrResult correlation_prune(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                             const Eigen::VectorXd& forward_returns, double threshold) {
  if (x.cols() != static_cast<Eigen::Index>(names.size()))
    throw AlignmentError("correlation_prune: matrix/name size mismatch");
  if (x.rows() != forward_returns.size())
    throw AlignmentError("correlation_prune: returns length mismatch");
  auto p = static_cast<std::size_t>(x.cols());
  Eigen::MatrixXd corr = pearson_correlation(x);

  // Union-find over the |corr| > threshold graph.
  std::vector<std::size_t> parent(p);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (std::abs(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > threshold)
        parent[find(i)] = find(j);

  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < p; ++i) components[find(i)].push_back(i);

  std::vector<char> keep(p, 0);
  CorrResult res;
  for (auto& [root, members] : components) {
    if (members.size() == 1) {
      keep[members.front()] = 1;
      continue;
    }
    std::size_t best = members.front();
    double best_ic = -1.0;
    for (auto m : members) {
      double ic = std::abs(
          spearman_correlation(x.col(static_cast<Eigen::Index>(m)), forward_returns));
      if (ic > best_ic || (ic == best_ic && names[m] < names[best])) {
        best_ic = ic;
        best = m;
      }
    }
    keep[best] = 1;
    CorrelationGroup g;
    std::vector<std::size_t> sorted_members = members;
    std::sort(sorted_members.begin(), sorted_members.end());
    for (auto m : sorted_members) g.members.push_back(names[m]);
    g.representative = names[best];
    res.groups.push_back(std::move(g));
  }
  for (std::size_t i = 0; i < p; ++i)
    if (keep[i]) res.survivors.push_back(names[i]);

  std::sort(res.groups.begin(), res.groups.end(),
            [](const CorrelationGroup& a, const CorrelationGroup& b) {
              return a.members.front() < b.members.front();
            });
  return res;
}

void write_correlation_csv(const Eigen::MatrixXd& corr, const std::vector<std::string>& names,
                           std::ostream& out) {
  out << "feature";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i];
    for (std::size_t j = 0; j < names.size(); ++j)
      out << ','
          << csv::format_double(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

}  // namespace midcap
