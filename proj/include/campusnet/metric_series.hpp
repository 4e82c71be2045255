#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "campusnet/common.hpp"

namespace campusnet {

struct MetricPoint {
  int idx = 0;
  std::optional<double> value;  // absent when sample_count == 0 or undefined
  std::size_t sample_count = 0;
};

/// One metric for one cohort along its time grid; idx strictly increasing.
struct MetricSeries {
  std::string cohort;
  std::string metric;
  std::string series;  // member of a metric family (e.g. a percentile), empty otherwise
  TimeUnit unit = TimeUnit::Month;
  std::vector<MetricPoint> points;

  const MetricPoint* at(int idx) const;
};

enum class Weighting {
  PerCohort,  // unweighted mean of cohort values
  PerSample,  // mean weighted by sample_count
};

/// Averages aligned series across cohorts. Cells with fewer than `min_samples`
/// samples are skipped. The result's sample_count is the number of
/// contributing cohorts (PerCohort) or the summed sample count (PerSample).
MetricSeries average_series(std::span<const MetricSeries> series, Weighting weighting, std::size_t min_samples = 1);

}  // namespace campusnet
