#include "campusnet/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "campusnet/structure.hpp"

namespace campusnet {

Eigen::VectorXd normalized_ranks(const Eigen::VectorXd& scores) {
  const auto n = scores.size();
  Eigen::VectorXd ranks = Eigen::VectorXd::Zero(n);
  if (n < 2) return ranks;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  const double tie = 1e-9 * scores.cwiseAbs().maxCoeff();
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] - scores[order[j - 1]] <= tie) ++j;
    // 1-based ranks i+1..j share their mean
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (auto k = i; k < j; ++k) ranks[order[k]] = (mean_rank - 1.0) / static_cast<double>(n - 1);
    i = j;
  }
  return ranks;
}

std::optional<CentralityVector> eigenvector_centrality(const SnapshotView& view, const PowerIterationOptions& options) {
  if (view.edge_count() == 0) return std::nullopt;
  const auto n = static_cast<std::uint32_t>(view.node_count());
  auto comps = connected_components(view);

  std::vector<std::uint32_t> lcc;
  for (std::uint32_t u = 0; u < n; ++u) {
    if (comps.label[u] == comps.largest) lcc.push_back(u);
  }
  std::vector<std::uint32_t> local(n, 0);
  for (std::uint32_t i = 0; i < lcc.size(); ++i) local[lcc[i]] = i;

  const auto m = static_cast<Eigen::Index>(lcc.size());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  Eigen::VectorXd y(m);
  CentralityVector out;
  for (out.iterations = 1; out.iterations <= options.max_iterations; ++out.iterations) {
    for (Eigen::Index i = 0; i < m; ++i) {
      double acc = x[i];
      for (auto w : view.neighbors(lcc[static_cast<std::size_t>(i)])) acc += x[local[w]];
      y[i] = acc;
    }
    y /= y.norm();
    const double change = (y - x).norm();
    x.swap(y);
    if (change <= options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, options.max_iterations);

  out.idx = view.index();
  out.scores = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) out.scores[lcc[static_cast<std::size_t>(i)]] = x[i];
  out.ranks = normalized_ranks(out.scores);
  return out;
}

std::vector<std::optional<CentralityVector>> centrality_series(const Dataset& data, std::size_t cohort,
                                                               const TimeGrid& grid,
                                                               const PowerIterationOptions& options) {
  std::vector<std::optional<CentralityVector>> out;
  out.reserve(grid.size());
  SnapshotBuilder builder(data, cohort, Scope::Cohort, grid, false);
  while (builder.advance()) out.push_back(eigenvector_centrality(builder.view(), options));
  return out;
}

Eigen::MatrixXd rank_correlation_matrix(std::span<const std::optional<CentralityVector>> series) {
  const auto t = static_cast<Eigen::Index>(series.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(t, t, nan);

  Eigen::Index n = -1;
  for (const auto& c : series) {
    if (c) n = c->ranks.size();
  }
  if (n < 3) return corr;

  // standardized columns; invalid ones stay flagged
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, t);
  std::vector<bool> valid(series.size(), false);
  for (Eigen::Index j = 0; j < t; ++j) {
    const auto& c = series[static_cast<std::size_t>(j)];
    if (!c || c->ranks.size() != n) continue;
    Eigen::VectorXd centered = c->ranks.array() - c->ranks.mean();
    const double norm = centered.norm();
    if (norm == 0) continue;
    z.col(j) = centered / norm;
    valid[static_cast<std::size_t>(j)] = true;
  }
  Eigen::MatrixXd gram = z.transpose() * z;
  for (Eigen::Index a = 0; a < t; ++a) {
    if (!valid[static_cast<std::size_t>(a)]) continue;
    corr(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < t; ++b) {
      if (!valid[static_cast<std::size_t>(b)]) continue;
      corr(a, b) = corr(b, a) = std::clamp(gram(a, b), -1.0, 1.0);
    }
  }
  return corr;
}

MetricSeries rank_churn(std::span<const std::optional<CentralityVector>> series, const TimeGrid& grid,
                        std::string cohort_key) {
  if (series.size() != grid.size()) throw std::invalid_argument("centrality series does not match grid");
  MetricSeries s;
  s.cohort = std::move(cohort_key);
  s.metric = "rank_churn";
  s.unit = grid.unit();
  for (std::size_t k = 0; k < series.size(); ++k) {
    MetricPoint p{grid.first_index() + static_cast<int>(k), std::nullopt, 0};
    if (k > 0 && series[k] && series[k - 1] && series[k]->ranks.size() == series[k - 1]->ranks.size()) {
      const auto& now = series[k]->ranks;
      p.value = (now - series[k - 1]->ranks).cwiseAbs().mean();
      p.sample_count = static_cast<std::size_t>(now.size());
    }
    s.points.push_back(p);
  }
  return s;
}

}  // namespace campusnet
