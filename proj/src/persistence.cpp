#include "campusnet/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "campusnet/csv.hpp"

namespace campusnet {

ClosenessTable ClosenessTable::from_entries(std::size_t node_count, std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.ego != b.ego ? a.ego < b.ego : a.rank < b.rank;
  });
  ClosenessTable table;
  table.offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.ego >= node_count || e.alter >= node_count) throw DataError("closeness entry outside the node range");
    if (e.rank == 0) throw DataError("closeness ranks start at 1");
    if (i > 0 && entries[i - 1].ego == e.ego && entries[i - 1].rank == e.rank) {
      throw DataError("ego " + std::to_string(e.ego) + " repeats rank " + std::to_string(e.rank));
    }
    ++table.offsets_[e.ego + 1];
  }
  for (std::size_t i = 0; i < node_count; ++i) table.offsets_[i + 1] += table.offsets_[i];

  // within each ego, order by alter for lookup
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.ego != b.ego ? a.ego < b.ego : a.alter < b.alter;
  });
  table.alters_.reserve(entries.size());
  table.ranks_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i - 1].ego == entries[i].ego && entries[i - 1].alter == entries[i].alter) {
      throw DataError("ego " + std::to_string(entries[i].ego) + " ranks alter " +
                      std::to_string(entries[i].alter) + " twice");
    }
    table.alters_.push_back(entries[i].alter);
    table.ranks_.push_back(entries[i].rank);
  }
  return table;
}

ClosenessTable ClosenessTable::read(std::istream& in, const IdMap& ids, std::string source_name) {
  csv::Reader reader(in, std::move(source_name));
  const auto c_ego = reader.column("ego_id");
  const auto c_alter = reader.column("alter_id");
  const auto c_rank = reader.column("rank");
  std::vector<Entry> entries;
  std::vector<std::string> row;
  while (reader.next(row)) {
    auto ego = ids.find(row[c_ego]);
    if (!ego) reader.fail("unknown ego_id '" + row[c_ego] + "'");
    auto alter = ids.find(row[c_alter]);
    if (!alter) reader.fail("unknown alter_id '" + row[c_alter] + "'");
    long long rank = 0;
    try {
      rank = csv::parse_int(row[c_rank]);
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    if (rank < 1 || rank > std::numeric_limits<std::uint32_t>::max()) reader.fail("rank must be a positive integer");
    entries.push_back({*ego, *alter, static_cast<std::uint32_t>(rank)});
  }
  return from_entries(ids.size(), std::move(entries));
}

ClosenessTable ClosenessTable::read(const std::filesystem::path& path, const IdMap& ids) {
  std::ifstream in(path);
  if (!in) throw DataError("missing closeness file: " + path.string());
  return read(in, ids, path.string());
}

std::optional<std::uint32_t> ClosenessTable::rank(NodeId ego, NodeId alter) const {
  if (!has_ego(ego)) return std::nullopt;
  auto first = alters_.begin() + static_cast<std::ptrdiff_t>(offsets_[ego]);
  auto last = alters_.begin() + static_cast<std::ptrdiff_t>(offsets_[ego + 1]);
  auto it = std::lower_bound(first, last, alter);
  if (it == last || *it != alter) return std::nullopt;
  return ranks_[static_cast<std::size_t>(it - alters_.begin())];
}

std::size_t ClosenessTable::ego_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) n += offsets_[i + 1] > offsets_[i];
  return n;
}

void ClosenessTable::write(std::ostream& out, const IdMap& ids) const {
  out << "ego_id,alter_id,rank\n";
  std::vector<std::pair<std::uint32_t, NodeId>> row;
  for (std::size_t ego = 0; ego + 1 < offsets_.size(); ++ego) {
    row.clear();
    for (auto i = offsets_[ego]; i < offsets_[ego + 1]; ++i) row.emplace_back(ranks_[i], alters_[i]);
    std::sort(row.begin(), row.end());
    for (auto [rank, alter] : row) {
      csv::write_row(out, {ids.external(static_cast<NodeId>(ego)), ids.external(alter), std::to_string(rank)});
    }
  }
}

std::optional<bool> is_cff(const ClosenessTable& closeness, NodeId ego, NodeId alter, std::uint32_t k) {
  if (k == 0) throw std::invalid_argument("CFF cutoff K must be at least 1");
  if (!closeness.has_ego(ego)) return std::nullopt;
  auto r = closeness.rank(ego, alter);
  return r && *r <= k;
}

EvaluationSet evaluate_ties(const Dataset& data, const ClosenessTable& closeness, const PersistenceOptions& options) {
  EvaluationSet out;
  const auto& attrs = data.attributes();
  for (const auto& e : data.edges().events()) {
    if (options.same_school_only && attrs[e.u].school != attrs[e.v].school) continue;
    ++out.ties;
    auto forward = is_cff(closeness, e.u, e.v, options.k);
    auto backward = is_cff(closeness, e.v, e.u, options.k);
    if (options.directed) {
      if (forward) out.evaluations.push_back({e.u, e.v, e.t, *forward});
      if (backward) out.evaluations.push_back({e.v, e.u, e.t, *backward});
      out.excluded += !forward + !backward;
    } else if (forward || backward) {
      out.evaluations.push_back({e.u, e.v, e.t, forward.value_or(false) || backward.value_or(false)});
    } else {
      ++out.excluded;
    }
  }
  return out;
}

std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::FormationWeek: return "formation_week";
    case Grouping::GenderPair: return "gender_pair";
    case Grouping::Cohort: return "cohort";
    case Grouping::School: return "school";
    case Grouping::EntryYearGenderPair: return "entry_year_gender_pair";
  }
  return "?";
}

Grouping parse_grouping(std::string_view s) {
  for (auto g : kAllGroupings) {
    if (to_string(g) == s) return g;
  }
  throw std::invalid_argument("unknown grouping '" + std::string(s) +
                              "' (expected formation_week|gender_pair|cohort|school|entry_year_gender_pair)");
}

namespace {

std::string gender_pair(const Dataset& data, NodeId a, NodeId b) {
  const auto& attrs = data.attributes();
  auto la = attrs.feature_label(Dimension::Gender, attrs.feature(a, Dimension::Gender));
  auto lb = attrs.feature_label(Dimension::Gender, attrs.feature(b, Dimension::Gender));
  if (lb < la) std::swap(la, lb);
  return la + "-" + lb;
}

}  // namespace

std::vector<PersistenceCell> share_cff_by(Grouping grouping, const Dataset& data,
                                          std::span<const TieEvaluation> evaluations) {
  // (numeric part, text part) orders week and year keys numerically
  std::map<std::pair<long, std::string>, std::pair<std::size_t, std::size_t>> cells;
  const auto& attrs = data.attributes();
  for (const auto& ev : evaluations) {
    const auto& co = data.cohort(data.cohort_of(ev.ego));
    std::pair<long, std::string> key;
    switch (grouping) {
      case Grouping::FormationWeek: {
        const auto days = static_cast<long>(ev.t) - co.start_date;
        key.first = days >= 0 ? days / 7 : -((-days + 6) / 7);
        break;
      }
      case Grouping::GenderPair:
        key.second = gender_pair(data, ev.ego, ev.alter);
        break;
      case Grouping::Cohort:
        key.second = co.key();
        break;
      case Grouping::School:
        key.second = attrs.schools().label(static_cast<std::int32_t>(attrs[ev.ego].school));
        break;
      case Grouping::EntryYearGenderPair:
        key.first = co.entry_year;
        key.second = gender_pair(data, ev.ego, ev.alter);
        break;
    }
    auto& cell = cells[key];
    ++cell.first;
    cell.second += ev.cff;
  }

  std::vector<PersistenceCell> out;
  out.reserve(cells.size());
  for (const auto& [key, counts] : cells) {
    PersistenceCell c;
    c.grouping = grouping;
    switch (grouping) {
      case Grouping::FormationWeek: c.key = std::to_string(key.first); break;
      case Grouping::EntryYearGenderPair: c.key = std::to_string(key.first) + ":" + key.second; break;
      default: c.key = key.second; break;
    }
    c.n_ties = counts.first;
    c.n_cff = counts.second;
    if (c.n_ties > 0) c.share_cff = static_cast<double>(c.n_cff) / static_cast<double>(c.n_ties);
    out.push_back(std::move(c));
  }
  return out;
}

WeightedCorrelation weighted_correlation(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size()) throw std::invalid_argument("correlation inputs differ in length");
  WeightedCorrelation out;
  out.n = x.size();
  if (out.n < 2) return out;
  double sw = 0, mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    mx += w[i] * x[i];
    my += w[i] * y[i];
  }
  if (sw <= 0) return out;
  mx /= sw;
  my /= sw;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += w[i] * dx * dx;
    syy += w[i] * dy * dy;
    sxy += w[i] * dx * dy;
  }
  if (sxx <= 0 || syy <= 0) return out;
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  out.rho = rho;
  if (std::abs(rho) < 1.0) out.t = rho * std::sqrt(static_cast<double>(out.n - 2)) / std::sqrt(1.0 - rho * rho);
  return out;
}

SchoolScatter school_scatter(int entry_year, const Dataset& data, std::span<const TieEvaluation> evaluations) {
  SchoolScatter out;
  out.entry_year = entry_year;
  const auto& attrs = data.attributes();
  std::vector<std::size_t> cohort_point(data.cohort_count(), SIZE_MAX);
  for (std::size_t c = 0; c < data.cohort_count(); ++c) {
    const auto& co = data.cohort(c);
    if (co.entry_year != entry_year || co.members.empty()) continue;
    cohort_point[c] = out.points.size();
    out.points.push_back({co.school_id, co.members.size(), 0, 0, std::nullopt});
  }
  if (out.points.empty()) return out;

  std::vector<double> friends(out.points.size(), 0), evaluated(out.points.size(), 0), cff(out.points.size(), 0);
  for (const auto& e : data.edges().events()) {
    if (attrs[e.u].school != attrs[e.v].school) continue;
    for (auto n : {e.u, e.v}) {
      auto p = cohort_point[data.cohort_of(n)];
      if (p != SIZE_MAX) friends[p] += 1;
    }
  }
  for (const auto& ev : evaluations) {
    auto p = cohort_point[data.cohort_of(ev.ego)];
    if (p == SIZE_MAX) continue;
    evaluated[p] += 1;
    cff[p] += ev.cff;
  }
  std::vector<double> fx, cy, sy, w, sfx, sw;
  for (std::size_t p = 0; p < out.points.size(); ++p) {
    auto& pt = out.points[p];
    const auto members = static_cast<double>(pt.members);
    pt.mean_college_friends = friends[p] / members;
    pt.mean_cff = cff[p] / members;
    fx.push_back(pt.mean_college_friends);
    cy.push_back(pt.mean_cff);
    w.push_back(members);
    if (evaluated[p] > 0) {
      pt.share_cff = cff[p] / evaluated[p];
      sfx.push_back(pt.mean_college_friends);
      sy.push_back(*pt.share_cff);
      sw.push_back(members);
    }
  }
  out.friends_vs_cff = weighted_correlation(fx, cy, w);
  out.friends_vs_share = weighted_correlation(sfx, sy, sw);
  return out;
}

}  // namespace campusnet
