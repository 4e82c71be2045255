#include "campusnet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace campusnet {

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

CollinearityError::CollinearityError(std::vector<std::string> columns)
    : Error("design matrix is rank deficient; collinear columns: " + join(columns)), columns_(std::move(columns)) {}

std::size_t RegressionResult::term(std::string_view name) const {
  auto it = std::find(terms.begin(), terms.end(), name);
  if (it == terms.end()) throw LookupError("no regression term '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - terms.begin());
}

Eigen::VectorXd cluster_robust_se(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xtx_inv,
                                  const Eigen::VectorXd& residuals, std::span<const std::int64_t> clusters,
                                  ClusterCorrection correction) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (static_cast<Eigen::Index>(clusters.size()) != n) throw std::invalid_argument("one cluster id per row required");

  std::unordered_map<std::int64_t, Eigen::Index> dense;
  for (auto c : clusters) dense.try_emplace(c, static_cast<Eigen::Index>(dense.size()));
  const auto g = static_cast<Eigen::Index>(dense.size());
  if (g < 2) throw std::invalid_argument("clustered standard errors need at least two clusters");

  // per-cluster score sums X_g' u_g, one column each
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(k, g);
  for (Eigen::Index i = 0; i < n; ++i) {
    scores.col(dense.at(clusters[static_cast<std::size_t>(i)])) += x.row(i).transpose() * residuals[i];
  }
  Eigen::MatrixXd meat = scores * scores.transpose();
  Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
  if (correction == ClusterCorrection::CR1) {
    const double gd = static_cast<double>(g);
    const double nd = static_cast<double>(n);
    cov *= (gd / (gd - 1.0)) * ((nd - 1.0) / (nd - static_cast<double>(k)));
  }
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

RegressionResult ols_fit(const DesignMatrix& design, const Eigen::VectorXd& y, ClusterCorrection correction) {
  const auto n = design.rows();
  const auto k = design.cols();
  if (y.size() != n) throw std::invalid_argument("response length does not match design rows");
  if (static_cast<Eigen::Index>(design.names.size()) != k) throw std::invalid_argument("one name per column required");
  if (n <= k) {
    throw std::invalid_argument("need more observations (" + std::to_string(n) + ") than columns (" +
                                std::to_string(k) + ")");
  }

  // equilibrate so the rank threshold is scale free
  Eigen::VectorXd scale = design.x.colwise().norm().transpose();
  std::vector<std::string> zero;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (scale[j] == 0) zero.push_back(design.names[static_cast<std::size_t>(j)]);
  }
  if (!zero.empty()) throw CollinearityError(zero);
  Eigen::VectorXd inv_scale = scale.cwiseInverse();
  Eigen::MatrixXd xs = design.x * inv_scale.asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::vector<Eigen::Index> dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < k; ++j) dropped.push_back(perm[j]);
    std::sort(dropped.begin(), dropped.end());
    std::vector<std::string> names;
    for (auto j : dropped) names.push_back(design.names[static_cast<std::size_t>(j)]);
    throw CollinearityError(names);
  }

  RegressionResult r;
  r.terms = design.names;
  r.n_obs = static_cast<std::size_t>(n);
  r.coef = inv_scale.asDiagonal() * qr.solve(y);
  r.residuals = y - design.x * r.coef;

  // (X'X)^-1 = D P R^-1 R^-T P' D with X D = Q R P'
  Eigen::MatrixXd r_upper = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv =
      r_upper.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd perm_inv = qr.colsPermutation() * (r_inv * r_inv.transpose()) * qr.colsPermutation().transpose();
  Eigen::MatrixXd xtx_inv = inv_scale.asDiagonal() * perm_inv * inv_scale.asDiagonal();

  const double ssr = r.residuals.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  r.r2 = sst > 0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 1.0;
  const double sigma2 = ssr / static_cast<double>(n - k);
  r.classical_se = (sigma2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();

  if (!design.clusters.empty()) {
    r.se = cluster_robust_se(design.x, xtx_inv, r.residuals, design.clusters, correction);
    r.clustered = true;
    r.n_clusters = std::set<std::int64_t>(design.clusters.begin(), design.clusters.end()).size();
  } else {
    r.se = r.classical_se;
  }
  r.ci_low = r.coef - kCriticalValue95 * r.se;
  r.ci_high = r.coef + kCriticalValue95 * r.se;
  return r;
}

namespace {

constexpr std::string_view kCovariateNames[] = {"is_private",  "is_hbcu",   "is_womens",     "is_hispanic_serving",
                                                "is_religious", "is_commuter", "greek_rate",  "class_size",
                                                "log_class_size", "grad_rate"};

}  // namespace

std::span<const std::string_view> covariate_names() { return kCovariateNames; }

double covariate_value(const SchoolCovariates& s, std::string_view name) {
  if (name == "is_private") return s.is_private;
  if (name == "is_hbcu") return s.is_hbcu;
  if (name == "is_womens") return s.is_womens;
  if (name == "is_hispanic_serving") return s.is_hispanic_serving;
  if (name == "is_religious") return s.is_religious;
  if (name == "is_commuter") return s.is_commuter;
  if (name == "greek_rate") return s.greek_rate;
  if (name == "class_size") return static_cast<double>(s.class_size);
  if (name == "log_class_size") return std::log(static_cast<double>(std::max(1L, s.class_size)));
  if (name == "grad_rate") return s.grad_rate;
  std::string valid;
  for (auto n : kCovariateNames) valid += (valid.empty() ? "" : "|") + std::string(n);
  throw std::invalid_argument("unknown covariate '" + std::string(name) + "' (expected " + valid + ")");
}

Regression month_interaction_design(std::span<const PanelRow> rows, std::span<const std::string> covariates,
                                    std::size_t min_rows) {
  const auto p = covariates.size();
  std::map<int, std::size_t> per_month;
  for (const auto& r : rows) {
    if (r.covariates.size() != p) throw std::invalid_argument("panel row has the wrong number of covariates");
    ++per_month[r.idx];
  }
  const std::size_t floor_rows = std::max(min_rows, p + 2);
  std::map<int, Eigen::Index> month_block;
  for (auto [idx, count] : per_month) {
    if (count >= floor_rows) month_block.emplace(idx, static_cast<Eigen::Index>(month_block.size()));
  }

  const auto width = static_cast<Eigen::Index>(p + 1);
  Regression out;
  auto& d = out.design;
  for (const auto& [idx, block] : month_block) {
    const std::string m = "month[" + std::to_string(idx) + "]";
    d.names.push_back(m);
    for (const auto& c : covariates) d.names.push_back(m + ":" + c);
  }
  std::size_t n = 0;
  for (const auto& r : rows) n += month_block.count(r.idx);
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(month_block.size()) * width);
  out.y.resize(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    auto it = month_block.find(r.idx);
    if (it == month_block.end()) continue;
    const auto base = it->second * width;
    d.x(i, base) = 1.0;
    for (std::size_t c = 0; c < p; ++c) d.x(i, base + 1 + static_cast<Eigen::Index>(c)) = r.covariates[c];
    out.y[i] = r.y;
    d.clusters.push_back(r.cluster);
    ++i;
  }
  return out;
}

Regression year_fixed_effects_design(std::span<const ClassRow> rows, std::span<const std::string> covariates) {
  const auto p = covariates.size();
  std::set<int> years;
  for (const auto& r : rows) {
    if (r.covariates.size() != p) throw std::invalid_argument("class row has the wrong number of covariates");
    years.insert(r.year);
  }
  std::map<int, Eigen::Index> year_col;
  Regression out;
  auto& d = out.design;
  d.names.push_back("intercept");
  for (const auto& c : covariates) d.names.push_back(c);
  for (auto y : years) {
    if (y == *years.begin()) continue;  // reference year
    year_col.emplace(y, static_cast<Eigen::Index>(d.names.size()));
    d.names.push_back("year[" + std::to_string(y) + "]");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d.names.size()));
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.x(i, 0) = 1.0;
    for (std::size_t c = 0; c < p; ++c) d.x(i, 1 + static_cast<Eigen::Index>(c)) = r.covariates[c];
    if (auto it = year_col.find(r.year); it != year_col.end()) d.x(i, it->second) = 1.0;
    out.y[i] = r.y;
    d.clusters.push_back(r.cluster);
  }
  return out;
}

}  // namespace campusnet
