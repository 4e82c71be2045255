#include "campusnet/metric_series.hpp"

#include <algorithm>
#include <map>

namespace campusnet {

const MetricPoint* MetricSeries::at(int idx) const {
  auto it = std::lower_bound(points.begin(), points.end(), idx,
                             [](const MetricPoint& p, int i) { return p.idx < i; });
  if (it == points.end() || it->idx != idx) return nullptr;
  return &*it;
}

MetricSeries average_series(std::span<const MetricSeries> series, Weighting weighting, std::size_t min_samples) {
  MetricSeries out;
  out.cohort = "all";
  if (!series.empty()) {
    out.metric = series.front().metric;
    out.unit = series.front().unit;
  }
  struct Acc {
    double sum = 0;
    double weight = 0;
    std::size_t count = 0;
  };
  std::map<int, Acc> cells;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      auto& acc = cells[p.idx];
      if (!p.value || p.sample_count < min_samples) continue;
      double w = weighting == Weighting::PerCohort ? 1.0 : static_cast<double>(p.sample_count);
      acc.sum += w * *p.value;
      acc.weight += w;
      acc.count += weighting == Weighting::PerCohort ? 1 : p.sample_count;
    }
  }
  for (const auto& [idx, acc] : cells) {
    MetricPoint p{idx, std::nullopt, acc.count};
    if (acc.weight > 0) p.value = acc.sum / acc.weight;
    out.points.push_back(p);
  }
  return out;
}

}  // namespace campusnet
