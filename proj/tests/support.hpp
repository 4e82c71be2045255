#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "campusnet/date.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet::testing {

/// Hand-built bundle: nodes in insertion order, edges by name and ISO date.
class BundleBuilder {
 public:
  NodeId node(const std::string& name, const std::string& school, int year, const std::string& gender = "F",
              const std::string& major = "m0", const std::string& hometown = "h0") {
    const NodeId id = ids_.intern(name);
    attrs_.append(id, school, year, gender, major, hometown);
    return id;
  }

  void edge(const std::string& a, const std::string& b, const std::string& date) {
    raw_.push_back({*ids_.find(a), *ids_.find(b), parse_date(date)});
  }
  void edge(NodeId a, NodeId b, Day t) { raw_.push_back({a, b, t}); }

  void cohort(const std::string& school, int year, const std::string& start) {
    cohorts_.push_back({school, year, parse_date(start)});
  }

  void school(SchoolCovariates s) { schools_.push_back(std::move(s)); }

  Dataset build() const {
    return Dataset(ids_, attrs_, TemporalEdgeList::from_events(raw_), cohorts_, schools_);
  }

 private:
  IdMap ids_;
  AttributeTable attrs_;
  std::vector<EdgeEvent> raw_;
  std::vector<CohortRecord> cohorts_;
  std::vector<SchoolCovariates> schools_;
};

/// G(n, p) edge list with u < v.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> random_edges(std::uint32_t n, double p,
                                                                         std::mt19937_64& rng) {
  std::bernoulli_distribution keep(p);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = u + 1; v < n; ++v) {
      if (keep(rng)) out.emplace_back(u, v);
    }
  }
  return out;
}

/// One school, one cohort of n members with random features and events
/// spread over [-12, 60) months around 2010-09-01.
inline Dataset random_cohort(std::uint32_t n, std::size_t events, std::mt19937_64& rng, int categories = 3) {
  BundleBuilder b;
  std::uniform_int_distribution<int> cat(0, categories - 1);
  const char* genders[] = {"F", "M"};
  for (std::uint32_t i = 0; i < n; ++i) {
    b.node("n" + std::to_string(i), "s0", 2010, genders[cat(rng) % 2], "m" + std::to_string(cat(rng)),
           "h" + std::to_string(cat(rng)));
  }
  b.cohort("s0", 2010, "2010-09-01");
  const Day start = parse_date("2010-09-01");
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  std::uniform_int_distribution<Day> day(start - 400, start + 1800);
  for (std::size_t e = 0; e < events; ++e) {
    const NodeId u = pick(rng), v = pick(rng);
    if (u != v) b.edge(u, v, day(rng));
  }
  return b.build();
}

/// Disjoint cliques of 2 to 5 members, at most 10 nodes in all, optionally
/// joined by up to two random bridges.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> planted_cliques(std::mt19937_64& rng,
                                                                            bool bridges = false) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  std::vector<std::uint32_t> first;
  std::uint32_t n = 0;
  while (n + 2 <= 10) {
    const auto size = std::min<std::uint32_t>(2 + static_cast<std::uint32_t>(rng() % 4), 10 - n);
    first.push_back(n);
    for (std::uint32_t i = n; i < n + size; ++i) {
      for (std::uint32_t j = i + 1; j < n + size; ++j) out.emplace_back(i, j);
    }
    n += size;
    if (rng() % 3 == 0) break;
  }
  if (bridges && first.size() > 1) {
    const auto count = rng() % 3;
    for (std::uint64_t b = 0; b < count; ++b) {
      const auto u = static_cast<std::uint32_t>(rng() % n), v = static_cast<std::uint32_t>(rng() % n);
      if (u != v) out.emplace_back(std::min(u, v), std::max(u, v));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace campusnet::testing
