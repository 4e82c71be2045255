#include "campusnet/structure.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <queue>
#include <random>
#include <unordered_map>

#include "campusnet/random.hpp"

namespace campusnet {

Components connected_components(const SnapshotView& view) {
  const auto n = static_cast<std::uint32_t>(view.node_count());
  constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
  Components c;
  c.label.assign(n, kNone);
  std::vector<std::uint32_t> queue;
  queue.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (c.label[s] != kNone) continue;
    auto id = static_cast<std::uint32_t>(c.size.size());
    queue.clear();
    queue.push_back(s);
    c.label[s] = id;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      for (auto w : view.neighbors(queue[h])) {
        if (c.label[w] == kNone) {
          c.label[w] = id;
          queue.push_back(w);
        }
      }
    }
    c.size.push_back(static_cast<std::uint32_t>(queue.size()));
    if (c.size[id] > c.size[c.largest]) c.largest = id;
  }
  return c;
}

double lcc_fraction(const SnapshotView& view, std::size_t member_count) {
  if (member_count == 0) throw std::invalid_argument("lcc_fraction needs at least one member");
  if (view.node_count() == 0) return 0.0;
  auto c = connected_components(view);
  return static_cast<double>(c.size[c.largest]) / static_cast<double>(member_count);
}

std::vector<std::uint64_t> local_triangle_counts(const SnapshotView& view) {
  const auto n = static_cast<std::uint32_t>(view.node_count());
  std::vector<std::uint64_t> tri(n, 0);
  for (std::uint32_t u = 0; u < n; ++u) {
    auto nu = view.neighbors(u);
    for (auto v : nu) {
      if (v <= u) continue;
      auto nv = view.neighbors(v);
      // common neighbors w > v
      auto i = std::upper_bound(nu.begin(), nu.end(), v);
      auto j = std::upper_bound(nv.begin(), nv.end(), v);
      while (i != nu.end() && j != nv.end()) {
        if (*i < *j) {
          ++i;
        } else if (*j < *i) {
          ++j;
        } else {
          ++tri[u];
          ++tri[v];
          ++tri[*i];
          ++i;
          ++j;
        }
      }
    }
  }
  return tri;
}

double avg_clustering(const SnapshotView& view) {
  const auto n = view.node_count();
  if (n == 0) throw std::invalid_argument("avg_clustering of an empty view");
  std::vector<std::uint64_t> computed;
  auto tri = view.triangle_counts();
  if (tri.size() != n) {
    computed = local_triangle_counts(view);
    tri = computed;
  }
  double total = 0;
  for (std::uint32_t u = 0; u < n; ++u) {
    const double d = view.degree(u);
    if (d < 2) continue;
    total += 2.0 * static_cast<double>(tri[u]) / (d * (d - 1));
  }
  return total / static_cast<double>(n);
}

double modularity(const SnapshotView& view, std::span<const std::uint32_t> community) {
  const auto n = static_cast<std::uint32_t>(view.node_count());
  if (community.size() != n) throw std::invalid_argument("partition size does not match view");
  const double m = static_cast<double>(view.edge_count());
  if (m == 0) throw std::invalid_argument("modularity of an edgeless view");
  std::uint32_t k = 0;
  for (auto c : community) k = std::max(k, c + 1);
  std::vector<double> intra(k, 0), degree(k, 0);
  for (std::uint32_t u = 0; u < n; ++u) {
    degree[community[u]] += view.degree(u);
    for (auto v : view.neighbors(u)) {
      if (v > u && community[v] == community[u]) intra[community[u]] += 1;
    }
  }
  double q = 0;
  for (std::uint32_t c = 0; c < k; ++c) {
    const double share = degree[c] / (2 * m);
    q += intra[c] / m - share * share;
  }
  return q;
}

namespace {

struct MergeCandidate {
  std::int64_t gain;  // 2m * w_ij - k_i * k_j, proportional to the modularity gain
  std::uint32_t lo;
  std::uint32_t hi;
};

struct CandidateOrder {
  bool operator()(const MergeCandidate& a, const MergeCandidate& b) const {
    if (a.gain != b.gain) return a.gain < b.gain;
    if (a.lo != b.lo) return a.lo > b.lo;
    return a.hi > b.hi;
  }
};

std::vector<std::uint32_t> compact_labels(std::vector<std::uint32_t> raw) {
  std::vector<std::uint32_t> remap(raw.size(), std::numeric_limits<std::uint32_t>::max());
  std::uint32_t next = 0;
  for (auto& r : raw) {
    if (remap[r] == std::numeric_limits<std::uint32_t>::max()) remap[r] = next++;
    r = remap[r];
  }
  return raw;
}

}  // namespace

namespace {

struct Agglomeration {
  std::vector<std::uint32_t> parent;
  std::int64_t gained = 0;
  std::size_t merges = 0;
};

// Hash rows with a lazy max-heap of candidates.
Agglomeration cnm_sparse(const SnapshotView& view, std::int64_t two_m) {
  const auto n = static_cast<std::uint32_t>(view.node_count());
  Agglomeration a;
  std::vector<std::unordered_map<std::uint32_t, std::int64_t>> rows(n);
  std::vector<std::int64_t> k(n);
  a.parent.resize(n);
  std::iota(a.parent.begin(), a.parent.end(), 0u);
  std::vector<MergeCandidate> initial;
  initial.reserve(view.edge_count());
  for (std::uint32_t u = 0; u < n; ++u) {
    k[u] = view.degree(u);
    auto nb = view.neighbors(u);
    rows[u].reserve(nb.size());
    for (auto v : nb) rows[u].emplace(v, 1);
  }
  for (std::uint32_t u = 0; u < n; ++u) {
    for (auto v : view.neighbors(u)) {
      if (v > u && two_m > k[u] * k[v]) initial.push_back({two_m - k[u] * k[v], u, v});
    }
  }
  std::priority_queue<MergeCandidate, std::vector<MergeCandidate>, CandidateOrder> heap(CandidateOrder{},
                                                                                          std::move(initial));
  while (!heap.empty()) {
    auto top = heap.top();
    heap.pop();
    auto it = rows[top.lo].find(top.hi);
    if (it == rows[top.lo].end()) continue;  // a side was merged away
    const std::int64_t current = two_m * it->second - k[top.lo] * k[top.hi];
    if (current != top.gain) continue;  // stale entry
    if (current <= 0) break;

    const auto keep = top.lo;
    const auto gone = top.hi;
    a.gained += current;
    ++a.merges;
    auto& row_keep = rows[keep];
    auto& row_gone = rows[gone];
    row_keep.erase(gone);
    for (auto [l, w] : row_gone) {
      if (l == keep) continue;
      row_keep[l] += w;
      auto& row_l = rows[l];
      row_l.erase(gone);
      row_l[keep] += w;
    }
    std::unordered_map<std::uint32_t, std::int64_t>().swap(row_gone);
    k[keep] += k[gone];
    k[gone] = 0;
    a.parent[gone] = keep;
    // a pair without positive gain can only become useful after another merge re-pushes it
    for (auto [l, w] : row_keep) {
      const std::int64_t g = two_m * w - k[keep] * k[l];
      if (g > 0) heap.push({g, std::min(keep, l), std::max(keep, l)});
    }
  }
  return a;
}

// Same candidate heap over a dense weight matrix.
Agglomeration cnm_dense(const SnapshotView& view, std::int64_t two_m) {
  const auto n = static_cast<std::uint32_t>(view.node_count());
  Agglomeration a;
  a.parent.resize(n);
  std::iota(a.parent.begin(), a.parent.end(), 0u);
  std::vector<std::int32_t> w(static_cast<std::size_t>(n) * n, 0);
  std::vector<std::int64_t> k(n);
  std::vector<MergeCandidate> initial;
  for (std::uint32_t u = 0; u < n; ++u) {
    k[u] = view.degree(u);
    for (auto v : view.neighbors(u)) w[static_cast<std::size_t>(u) * n + v] = 1;
  }
  for (std::uint32_t u = 0; u < n; ++u) {
    for (auto v : view.neighbors(u)) {
      if (v > u && two_m > k[u] * k[v]) initial.push_back({two_m - k[u] * k[v], u, v});
    }
  }
  std::priority_queue<MergeCandidate, std::vector<MergeCandidate>, CandidateOrder> heap(CandidateOrder{},
                                                                                          std::move(initial));
  while (!heap.empty()) {
    auto top = heap.top();
    heap.pop();
    const auto weight = w[static_cast<std::size_t>(top.lo) * n + top.hi];
    if (weight == 0) continue;
    if (two_m * weight - k[top.lo] * k[top.hi] != top.gain) continue;

    const auto keep = top.lo;
    const auto gone = top.hi;
    a.gained += top.gain;
    ++a.merges;
    auto* row_keep = w.data() + static_cast<std::size_t>(keep) * n;
    auto* row_gone = w.data() + static_cast<std::size_t>(gone) * n;
    row_keep[gone] = 0;
    row_gone[keep] = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
      if (row_gone[j] == 0) continue;
      row_keep[j] += row_gone[j];
      w[static_cast<std::size_t>(j) * n + keep] = row_keep[j];
      w[static_cast<std::size_t>(j) * n + gone] = 0;
      row_gone[j] = 0;
    }
    k[keep] += k[gone];
    k[gone] = 0;
    a.parent[gone] = keep;
    for (std::uint32_t l = 0; l < n; ++l) {
      if (row_keep[l] == 0) continue;
      const std::int64_t g = two_m * row_keep[l] - k[keep] * k[l];
      if (g > 0) heap.push({g, std::min(keep, l), std::max(keep, l)});
    }
  }
  return a;
}

}  // namespace

std::optional<CommunityResult> cnm_modularity(const SnapshotView& view, CnmStorage storage) {
  const auto n = static_cast<std::uint32_t>(view.node_count());
  const auto m = static_cast<std::int64_t>(view.edge_count());
  if (m == 0) return std::nullopt;
  std::int64_t sum_k2 = 0;
  for (std::uint32_t u = 0; u < n; ++u) sum_k2 += static_cast<std::int64_t>(view.degree(u)) * view.degree(u);

  if (storage == CnmStorage::Auto) storage = n <= kDenseCnmLimit ? CnmStorage::Dense : CnmStorage::Sparse;
  auto a = storage == CnmStorage::Dense ? cnm_dense(view, 2 * m) : cnm_sparse(view, 2 * m);

  std::vector<std::uint32_t> label(n);
  for (std::uint32_t u = 0; u < n; ++u) {
    auto r = u;
    while (a.parent[r] != r) r = a.parent[r];
    label[u] = r;
  }
  CommunityResult out;
  out.community = compact_labels(std::move(label));
  out.merges = a.merges;
  // Q = (2 * gained - sum k_i^2) / (4 m^2), evaluated once from exact integers
  out.q = static_cast<double>(2 * a.gained - sum_k2) / (4.0 * static_cast<double>(m) * static_cast<double>(m));
  return out;
}

namespace {

template <typename OnReach>
void bit_parallel_bfs(const SnapshotView& view, std::span<const std::uint32_t> sources, OnReach&& on_reach) {
  const auto n = view.node_count();
  std::vector<std::uint64_t> visited(n), frontier(n), next(n);
  for (std::size_t base = 0; base < sources.size(); base += 64) {
    const std::size_t batch = std::min<std::size_t>(64, sources.size() - base);
    const std::uint64_t full = batch == 64 ? ~0ULL : ((1ULL << batch) - 1);
    std::fill(visited.begin(), visited.end(), 0);
    std::fill(frontier.begin(), frontier.end(), 0);
    for (std::size_t b = 0; b < batch; ++b) {
      visited[sources[base + b]] |= 1ULL << b;
      frontier[sources[base + b]] |= 1ULL << b;
    }
    for (std::uint64_t level = 1;; ++level) {
      bool any = false;
      for (std::uint32_t v = 0; v < n; ++v) {
        next[v] = 0;
        if (visited[v] == full) continue;
        std::uint64_t acc = 0;
        for (auto u : view.neighbors(v)) acc |= frontier[u];
        acc &= ~visited[v];
        if (acc) {
          next[v] = acc;
          any = true;
          on_reach(v, level, static_cast<std::uint64_t>(std::popcount(acc)));
        }
      }
      if (!any) break;
      for (std::size_t v = 0; v < n; ++v) visited[v] |= next[v];
      frontier.swap(next);
    }
  }
}

}  // namespace

DistanceTotals distance_totals(const SnapshotView& view, std::span<const std::uint32_t> sources) {
  DistanceTotals t;
  bit_parallel_bfs(view, sources, [&](std::uint32_t, std::uint64_t level, std::uint64_t count) {
    t.sum += level * count;
    t.pairs += count;
  });
  return t;
}

std::vector<DistanceTotals> distance_totals_by_group(const SnapshotView& view, std::span<const std::uint32_t> sources,
                                                     std::span<const std::uint32_t> groups, std::size_t n_groups) {
  if (groups.size() != view.node_count()) throw std::invalid_argument("group vector does not match view");
  std::vector<DistanceTotals> out(n_groups);
  bit_parallel_bfs(view, sources, [&](std::uint32_t v, std::uint64_t level, std::uint64_t count) {
    auto g = groups[v];
    if (g >= n_groups) return;
    out[g].sum += level * count;
    out[g].pairs += count;
  });
  return out;
}

namespace {

std::vector<std::uint32_t> pick_sources(std::vector<std::uint32_t> candidates, std::size_t count, std::uint64_t seed) {
  if (count >= candidates.size()) return candidates;
  std::vector<std::uint32_t> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(out), count, rng);
  return out;
}

}  // namespace

PathLength avg_shortest_path(const SnapshotView& view, const PathOptions& options) {
  PathLength out;
  out.seed = options.seed;
  if (view.node_count() == 0) return out;
  auto comps = connected_components(view);
  if (comps.size[comps.largest] < 2) return out;

  std::vector<std::uint32_t> candidates;
  for (std::uint32_t u = 0; u < view.node_count(); ++u) {
    if (view.degree(u) > 0) candidates.push_back(u);
  }
  std::size_t want = candidates.size();
  if (options.sample_size) {
    want = *options.sample_size;
  } else if (comps.size[comps.largest] > options.exact_threshold) {
    want = options.sampled_sources;
  }
  out.sampled = want < candidates.size();
  auto sources = pick_sources(std::move(candidates), want, options.seed);
  auto totals = distance_totals(view, sources);
  out.sources = sources.size();
  out.pairs = totals.pairs;
  if (totals.pairs > 0) out.mean = static_cast<double>(totals.sum) / static_cast<double>(totals.pairs);
  return out;
}

StructuralSnapshot structural_snapshot(const SnapshotView& view, std::size_t member_count,
                                       const PathOptions& options) {
  StructuralSnapshot s;
  s.idx = view.index();
  s.lcc_fraction = lcc_fraction(view, member_count);
  s.avg_clustering = avg_clustering(view);
  if (auto communities = cnm_modularity(view)) {
    s.modularity = communities->q;
    s.partition = std::move(communities->community);
  }
  s.avg_path = avg_shortest_path(view, options);
  return s;
}

std::vector<StructuralSnapshot> structure_series(const Dataset& data, std::size_t cohort, const TimeGrid& grid,
                                                 const PathOptions& options) {
  const auto members = data.cohort(cohort).members.size();
  std::vector<StructuralSnapshot> out;
  SnapshotBuilder builder(data, cohort, Scope::Cohort, grid);
  while (builder.advance()) {
    auto opts = options;
    opts.seed = derive_seed(options.seed, {static_cast<std::int64_t>(cohort), builder.index()});
    out.push_back(structural_snapshot(builder.view(), members, opts));
  }
  return out;
}

std::vector<MetricSeries> cross_cohort_path_series(const Dataset& data, std::size_t focal,
                                                   std::span<const std::size_t> counterparts, const TimeGrid& grid,
                                                   const PathOptions& options) {
  const auto& co = data.cohort(focal);
  std::vector<MetricSeries> out;
  for (auto c : counterparts) {
    MetricSeries s;
    s.cohort = co.key();
    s.metric = "cross_cohort_path";
    s.series = data.cohort(c).key();
    s.unit = grid.unit();
    out.push_back(std::move(s));
  }

  SnapshotBuilder builder(data, focal, Scope::School, grid, false);
  auto members = builder.members();
  constexpr auto kNoGroup = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> groups(members.size(), kNoGroup);
  for (std::size_t g = 0; g < counterparts.size(); ++g) {
    for (NodeId n : data.cohort(counterparts[g]).members) {
      auto it = std::lower_bound(members.begin(), members.end(), n);
      if (it != members.end() && *it == n) groups[static_cast<std::size_t>(it - members.begin())] = static_cast<std::uint32_t>(g);
    }
  }
  std::vector<std::uint32_t> focal_locals;
  for (NodeId n : co.members) {
    focal_locals.push_back(static_cast<std::uint32_t>(std::lower_bound(members.begin(), members.end(), n) - members.begin()));
  }

  while (builder.advance()) {
    auto view = builder.view();
    std::vector<std::uint32_t> candidates;
    for (auto u : focal_locals) {
      if (view.degree(u) > 0) candidates.push_back(u);
    }
    std::size_t want = candidates.size();
    if (options.sample_size) {
      want = *options.sample_size;
    } else if (candidates.size() > options.exact_threshold) {
      want = options.sampled_sources;
    }
    auto seed = derive_seed(options.seed, {static_cast<std::int64_t>(focal), builder.index(), 1});
    auto sources = pick_sources(std::move(candidates), want, seed);
    auto totals = distance_totals_by_group(view, sources, groups, counterparts.size());
    for (std::size_t g = 0; g < counterparts.size(); ++g) {
      MetricPoint p{builder.index(), std::nullopt, static_cast<std::size_t>(totals[g].pairs)};
      if (totals[g].pairs > 0) p.value = static_cast<double>(totals[g].sum) / static_cast<double>(totals[g].pairs);
      out[g].points.push_back(p);
    }
  }
  return out;
}

}  // namespace campusnet
