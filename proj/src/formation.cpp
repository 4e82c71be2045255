#include "campusnet/formation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace campusnet {

namespace {

MetricSeries empty_series(const Dataset& data, std::size_t cohort, const TimeGrid& grid, std::string metric) {
  MetricSeries s;
  s.cohort = data.cohort(cohort).key();
  s.metric = std::move(metric);
  s.unit = grid.unit();
  s.points.reserve(grid.size());
  return s;
}

std::string percentile_name(double p) {
  double r = std::round(p);
  if (r == p) return "p" + std::to_string(static_cast<int>(r));
  return "p" + std::to_string(p);
}

}  // namespace

MetricSeries edge_volume(const Dataset& data, std::size_t cohort, const TimeGrid& grid, Scope scope) {
  auto out = empty_series(data, cohort, grid, "edge_volume");
  std::vector<double> counts(grid.size(), 0.0);
  auto all = data.edges().events();
  for (auto i : data.scope_events(cohort, scope)) {
    if (auto idx = grid.bucket_of(all[i].t)) counts[static_cast<std::size_t>(*idx - grid.first_index())] += 1;
  }
  const std::size_t members = data.cohort(cohort).members.size();
  for (int idx = grid.first_index(); idx < grid.end_index(); ++idx) {
    out.points.push_back({idx, counts[static_cast<std::size_t>(idx - grid.first_index())], members});
  }
  return out;
}

std::vector<MetricSeries> cross_cohort_volume(const Dataset& data, std::size_t cohort, const TimeGrid& grid) {
  const auto& co = data.cohort(cohort);
  const auto& attrs = data.attributes();
  std::map<int, std::vector<double>> by_year;
  for (NodeId n : data.school_members(co.school)) by_year.try_emplace(attrs[n].entry_year, grid.size(), 0.0);

  auto all = data.edges().events();
  for (auto i : data.incident_events(cohort)) {
    const auto& e = all[i];
    if (attrs[e.u].school != attrs[e.v].school) continue;
    auto idx = grid.bucket_of(e.t);
    if (!idx) continue;
    NodeId other = data.cohort_of(e.u) == cohort ? e.v : e.u;
    by_year[attrs[other].entry_year][static_cast<std::size_t>(*idx - grid.first_index())] += 1;
  }

  std::vector<MetricSeries> out;
  for (const auto& [year, counts] : by_year) {
    auto s = empty_series(data, cohort, grid, "cross_cohort_volume");
    s.series = std::to_string(year);
    for (int idx = grid.first_index(); idx < grid.end_index(); ++idx) {
      s.points.push_back({idx, counts[static_cast<std::size_t>(idx - grid.first_index())], co.members.size()});
    }
    out.push_back(std::move(s));
  }
  return out;
}

double nearest_rank_percentile(std::span<const std::uint32_t> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (p < 0 || p > 100) throw std::invalid_argument("percentile outside [0,100]");
  std::vector<std::uint32_t> v(values.begin(), values.end());
  const std::size_t n = v.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

std::vector<double> degree_percentile_values(const SnapshotView& view, std::span<const std::uint32_t> members,
                                             std::span<const double> percentiles) {
  std::vector<std::uint32_t> degrees;
  degrees.reserve(members.size());
  for (auto m : members) degrees.push_back(view.degree(m));
  std::vector<double> out;
  for (double p : percentiles) out.push_back(nearest_rank_percentile(degrees, p));
  return out;
}

std::vector<MetricSeries> degree_percentiles(const Dataset& data, std::size_t cohort, const TimeGrid& grid,
                                             std::span<const double> percentiles, Scope scope) {
  const auto& co = data.cohort(cohort);
  if (co.members.empty()) throw std::invalid_argument("degree percentiles of an empty cohort");
  std::vector<MetricSeries> out;
  for (double p : percentiles) {
    auto s = empty_series(data, cohort, grid, "degree_percentile");
    s.series = percentile_name(p);
    out.push_back(std::move(s));
  }
  SnapshotBuilder builder(data, cohort, scope, grid, false);
  std::vector<std::uint32_t> locals;
  bool locals_ready = false;
  while (builder.advance()) {
    auto view = builder.view();
    if (!locals_ready) {
      for (NodeId m : co.members) locals.push_back(*view.local_of(m));
      locals_ready = true;
    }
    auto values = degree_percentile_values(view, locals, percentiles);
    for (std::size_t k = 0; k < values.size(); ++k) {
      out[k].points.push_back({builder.index(), values[k], co.members.size()});
    }
  }
  return out;
}

ClosureStats closure_stats(int idx, std::span<const std::uint32_t> common_neighbors) {
  ClosureStats s;
  s.idx = idx;
  s.new_edge_count = common_neighbors.size();
  if (common_neighbors.empty()) return s;
  std::size_t closing = 0;
  double total = 0;
  for (auto c : common_neighbors) {
    closing += c > 0;
    total += c;
  }
  const double n = static_cast<double>(common_neighbors.size());
  s.share_closing = static_cast<double>(closing) / n;
  s.mean_triangles_closed = total / n;
  return s;
}

ClosureStats triadic_closure(const Dataset& data, std::size_t cohort, const TimeGrid& grid, int idx, Scope scope) {
  grid.check(idx);
  SnapshotBuilder builder(data, cohort, scope, grid, false);
  builder.advance_to(idx);
  return closure_stats(idx, builder.bucket_closure_counts());
}

std::vector<ClosureStats> closure_series(const Dataset& data, std::size_t cohort, const TimeGrid& grid, Scope scope) {
  std::vector<ClosureStats> out;
  SnapshotBuilder builder(data, cohort, scope, grid, false);
  while (builder.advance()) out.push_back(closure_stats(builder.index(), builder.bucket_closure_counts()));
  return out;
}

}  // namespace campusnet
