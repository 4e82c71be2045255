#pragma once

#include <optional>
#include <span>
#include <vector>

#include "campusnet/metric_series.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

enum class HomophilyMode { New, Cumulative };

/// Which share enters the availability term b_i.
enum class Baseline {
  /// Share of incidences whose non-focal endpoint has feature i. Zero in
  /// expectation under random mixing.
  Counterpart,
  /// Share of edges where either endpoint has feature i.
  EitherEndpoint,
};

std::string_view to_string(HomophilyMode m);
std::string_view to_string(Baseline b);
Baseline parse_baseline(std::string_view s);

/// Minimum incidences per (cohort, idx) cell for cross-cohort averages.
inline constexpr std::size_t kMinHomophilyIncidences = 20;

struct HomophilyTerms {
  double e_sum = 0;     // sum_i e_ii: share of same-feature incidences
  double expected = 0;  // sum_i a_i b_i
  std::optional<double> h;
  std::size_t n_incidences = 0;
  std::size_t n_edges = 0;
};

/// Counts for the modified Newman coefficient
///   H = (sum_i e_ii - sum_i a_i b_i) / (1 - sum_i a_i b_i)
/// over one dimension. Every eligible edge contributes one incidence
/// (member feature, other feature) per endpoint that belongs to the focal
/// cohort. Edges with an unknown feature on either endpoint are ignored.
class HomophilyTally {
 public:
  explicit HomophilyTally(std::size_t categories);

  /// Returns false (and records nothing) when either feature is unknown or
  /// neither endpoint is a member.
  bool add_edge(std::int32_t feature_a, bool member_a, std::int32_t feature_b, bool member_b);
  void clear();

  std::size_t incidences() const { return incidences_; }
  std::size_t edges() const { return edges_; }

  /// Evaluates the coefficient with exact integer arithmetic up to the final division.
  HomophilyTerms terms(Baseline baseline) const;

 private:
  std::vector<std::uint64_t> member_;
  std::vector<std::uint64_t> counterpart_;
  std::vector<std::uint64_t> either_;
  std::uint64_t incidences_ = 0;
  std::uint64_t same_ = 0;
  std::uint64_t edges_ = 0;
};

struct HomophilyCoefficient {
  int idx = 0;
  Dimension dimension = Dimension::Gender;
  HomophilyMode mode = HomophilyMode::New;
  HomophilyTerms terms;
};

/// Coefficient of edges formed in bucket idx (New) or up to its end (Cumulative),
/// over every edge touching a cohort member.
HomophilyCoefficient homophily_coefficient(const Dataset& data, std::size_t cohort, Dimension dimension,
                                           const TimeGrid& grid, int idx, HomophilyMode mode,
                                           Baseline baseline = Baseline::Counterpart);

std::vector<HomophilyCoefficient> homophily_series(const Dataset& data, std::size_t cohort, Dimension dimension,
                                                   const TimeGrid& grid, HomophilyMode mode,
                                                   Baseline baseline = Baseline::Counterpart);

/// value = H, sample_count = incidences.
MetricSeries to_metric_series(std::span<const HomophilyCoefficient> coefficients, std::string cohort_key,
                              TimeUnit unit);

}  // namespace campusnet
