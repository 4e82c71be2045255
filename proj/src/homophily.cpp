#include "campusnet/homophily.hpp"

#include <algorithm>

namespace campusnet {

std::string_view to_string(HomophilyMode m) { return m == HomophilyMode::New ? "new" : "cumulative"; }

std::string_view to_string(Baseline b) { return b == Baseline::Counterpart ? "counterpart" : "either"; }

Baseline parse_baseline(std::string_view s) {
  if (s == "counterpart") return Baseline::Counterpart;
  if (s == "either") return Baseline::EitherEndpoint;
  throw std::invalid_argument("unknown homophily baseline '" + std::string(s) + "' (expected counterpart|either)");
}

HomophilyTally::HomophilyTally(std::size_t categories)
    : member_(categories, 0), counterpart_(categories, 0), either_(categories, 0) {}

bool HomophilyTally::add_edge(std::int32_t fa, bool ma, std::int32_t fb, bool mb) {
  if (fa == kUnknown || fb == kUnknown || !(ma || mb)) return false;
  auto a = static_cast<std::size_t>(fa);
  auto b = static_cast<std::size_t>(fb);
  ++edges_;
  ++either_[a];
  if (b != a) ++either_[b];
  auto incidence = [&](std::size_t self, std::size_t other) {
    ++incidences_;
    ++member_[self];
    ++counterpart_[other];
    same_ += self == other;
  };
  if (ma) incidence(a, b);
  if (mb) incidence(b, a);
  return true;
}

void HomophilyTally::clear() {
  std::fill(member_.begin(), member_.end(), 0);
  std::fill(counterpart_.begin(), counterpart_.end(), 0);
  std::fill(either_.begin(), either_.end(), 0);
  incidences_ = same_ = edges_ = 0;
}

HomophilyTerms HomophilyTally::terms(Baseline baseline) const {
  HomophilyTerms t;
  t.n_incidences = incidences_;
  t.n_edges = edges_;
  if (incidences_ == 0) return t;

  const auto& b = baseline == Baseline::Counterpart ? counterpart_ : either_;
  const std::uint64_t denom_b = baseline == Baseline::Counterpart ? incidences_ : edges_;
  // expected = S / (I * D); H = (E * D - S) / (I * D - S)
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < member_.size(); ++i) s += member_[i] * b[i];
  const std::uint64_t total = incidences_ * denom_b;
  t.e_sum = static_cast<double>(same_) / static_cast<double>(incidences_);
  t.expected = static_cast<double>(s) / static_cast<double>(total);
  if (s < total) {
    auto num = static_cast<std::int64_t>(same_ * denom_b) - static_cast<std::int64_t>(s);
    auto den = static_cast<std::int64_t>(total - s);
    t.h = static_cast<double>(num) / static_cast<double>(den);
  }
  return t;
}

namespace {

struct EdgeFeatures {
  std::int32_t fa, fb;
  bool ma, mb;
};

EdgeFeatures features_of(const Dataset& data, std::size_t cohort, Dimension d, const EdgeEvent& e) {
  const auto& attrs = data.attributes();
  return {attrs.feature(e.u, d), attrs.feature(e.v, d), data.cohort_of(e.u) == cohort,
          data.cohort_of(e.v) == cohort};
}

}  // namespace

HomophilyCoefficient homophily_coefficient(const Dataset& data, std::size_t cohort, Dimension dimension,
                                           const TimeGrid& grid, int idx, HomophilyMode mode, Baseline baseline) {
  grid.check(idx);
  const Day begin = grid.bucket_begin(idx);
  const Day end = grid.bucket_end(idx);
  HomophilyTally tally(data.attributes().cardinality(dimension));
  auto all = data.edges().events();
  for (auto i : data.incident_events(cohort)) {
    const auto& e = all[i];
    if (e.t >= end) break;
    if (mode == HomophilyMode::New && e.t < begin) continue;
    auto f = features_of(data, cohort, dimension, e);
    tally.add_edge(f.fa, f.ma, f.fb, f.mb);
  }
  return {idx, dimension, mode, tally.terms(baseline)};
}

std::vector<HomophilyCoefficient> homophily_series(const Dataset& data, std::size_t cohort, Dimension dimension,
                                                   const TimeGrid& grid, HomophilyMode mode, Baseline baseline) {
  data.cohort(cohort);
  HomophilyTally tally(data.attributes().cardinality(dimension));
  auto all = data.edges().events();
  auto events = data.incident_events(cohort);
  std::size_t k = 0;
  const Day window_start = grid.bucket_begin(grid.first_index());
  for (; k < events.size() && all[events[k]].t < window_start; ++k) {
    if (mode == HomophilyMode::Cumulative) {
      auto f = features_of(data, cohort, dimension, all[events[k]]);
      tally.add_edge(f.fa, f.ma, f.fb, f.mb);
    }
  }
  std::vector<HomophilyCoefficient> out;
  out.reserve(grid.size());
  for (int idx = grid.first_index(); idx < grid.end_index(); ++idx) {
    if (mode == HomophilyMode::New) tally.clear();
    const Day end = grid.bucket_end(idx);
    for (; k < events.size() && all[events[k]].t < end; ++k) {
      auto f = features_of(data, cohort, dimension, all[events[k]]);
      tally.add_edge(f.fa, f.ma, f.fb, f.mb);
    }
    out.push_back({idx, dimension, mode, tally.terms(baseline)});
  }
  return out;
}

MetricSeries to_metric_series(std::span<const HomophilyCoefficient> coefficients, std::string cohort_key,
                              TimeUnit unit) {
  MetricSeries s;
  s.cohort = std::move(cohort_key);
  s.unit = unit;
  if (!coefficients.empty()) {
    s.metric = "homophily_" + std::string(to_string(coefficients.front().mode));
    s.series = std::string(to_string(coefficients.front().dimension));
  }
  for (const auto& c : coefficients) s.points.push_back({c.idx, c.terms.h, c.terms.n_incidences});
  return s;
}

}  // namespace campusnet
