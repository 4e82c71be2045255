#include "campusnet/temporal_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

#include "campusnet/csv.hpp"
#include "campusnet/date.hpp"

namespace campusnet {

// ---------------------------------------------------------------------------
// IdMap / TemporalEdgeList

NodeId IdMap::intern(std::string_view external) {
  auto [it, inserted] = index_.try_emplace(std::string(external), static_cast<NodeId>(names_.size()));
  if (inserted) names_.emplace_back(external);
  return it->second;
}

std::optional<NodeId> IdMap::find(std::string_view external) const {
  auto it = index_.find(std::string(external));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TemporalEdgeList TemporalEdgeList::from_events(std::vector<EdgeEvent> raw, IngestReport* report) {
  std::size_t loops = 0;
  std::erase_if(raw, [&](const EdgeEvent& e) {
    bool loop = e.u == e.v;
    loops += loop;
    return loop;
  });
  for (auto& e : raw) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(raw.begin(), raw.end(),
            [](const EdgeEvent& a, const EdgeEvent& b) { return std::tie(a.u, a.v, a.t) < std::tie(b.u, b.v, b.t); });
  auto last = std::unique(raw.begin(), raw.end(),
                          [](const EdgeEvent& a, const EdgeEvent& b) { return a.u == b.u && a.v == b.v; });
  std::size_t dups = static_cast<std::size_t>(raw.end() - last);
  raw.erase(last, raw.end());
  std::sort(raw.begin(), raw.end(),
            [](const EdgeEvent& a, const EdgeEvent& b) { return std::tie(a.t, a.u, a.v) < std::tie(b.t, b.u, b.v); });
  if (report) {
    report->self_loops += loops;
    report->duplicates += dups;
  }
  TemporalEdgeList out;
  out.events_ = std::move(raw);
  return out;
}

EdgeIngest ingest_edges(std::istream& in, IdMap& ids, std::string source_name) {
  csv::Reader reader(in, std::move(source_name));
  const auto c_src = reader.column("src_id");
  const auto c_dst = reader.column("dst_id");
  const auto c_date = reader.column("date");

  EdgeIngest result;
  std::vector<EdgeEvent> raw;
  std::vector<std::string> row;
  while (reader.next(row)) {
    ++result.report.rows;
    const auto& src = row[c_src];
    const auto& dst = row[c_dst];
    if (src.empty() || dst.empty()) reader.fail("empty node id");
    Day t;
    try {
      t = parse_date(row[c_date]);
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    if (src == dst) {
      ++result.report.self_loops;
      continue;
    }
    raw.push_back({ids.intern(src), ids.intern(dst), t});
  }
  IngestReport canon;
  result.edges = TemporalEdgeList::from_events(std::move(raw), &canon);
  result.report.duplicates = canon.duplicates;
  return result;
}

EdgeIngest ingest_edges(const std::filesystem::path& path, IdMap& ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file: " + path.string());
  return ingest_edges(in, ids, path.string());
}

// ---------------------------------------------------------------------------
// Attributes

bool Categories::is_unknown_token(std::string_view label) {
  if (label.empty() || label == "NA" || label == "?") return true;
  if (label.size() != 7) return false;
  std::string lower(label);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "unknown";
}

std::int32_t Categories::intern(std::string_view label) {
  if (is_unknown_token(label)) return kUnknown;
  auto [it, inserted] = index_.try_emplace(std::string(label), static_cast<std::int32_t>(labels_.size()));
  if (inserted) labels_.emplace_back(label);
  return it->second;
}

std::optional<std::int32_t> Categories::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Categories::label(std::int32_t code) const {
  static const std::string unknown = "unknown";
  if (code == kUnknown) return unknown;
  return labels_.at(static_cast<std::size_t>(code));
}

void AttributeTable::append(NodeId node, std::string_view school, int entry_year, std::string_view gender,
                            std::string_view major, std::string_view hometown) {
  if (node != rows_.size()) {
    throw DataError("attribute records must be appended in node-id order");
  }
  if (Categories::is_unknown_token(school)) throw DataError("node without school_id");
  NodeAttributes a;
  a.school = static_cast<std::uint32_t>(schools_.intern(school));
  a.entry_year = entry_year;
  a.features[static_cast<int>(Dimension::Gender)] = dims_[0].intern(gender);
  a.features[static_cast<int>(Dimension::EntryYear)] = dims_[1].intern(std::to_string(entry_year));
  a.features[static_cast<int>(Dimension::Major)] = dims_[2].intern(major);
  a.features[static_cast<int>(Dimension::Hometown)] = dims_[3].intern(hometown);
  rows_.push_back(a);
}

const std::string& AttributeTable::feature_label(Dimension d, std::int32_t code) const {
  return dims_[static_cast<int>(d)].label(code);
}

AttributeTable AttributeTable::read(std::istream& in, IdMap& ids, std::string source_name) {
  csv::Reader reader(in, std::move(source_name));
  const auto c_node = reader.column("node_id");
  const auto c_school = reader.column("school_id");
  const auto c_year = reader.column("entry_year");
  const auto c_gender = reader.column("gender");
  const auto c_major = reader.column("major");
  const auto c_home = reader.column("hometown");

  AttributeTable table;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row[c_node].empty()) reader.fail("empty node_id");
    if (ids.find(row[c_node])) reader.fail("duplicate node_id '" + row[c_node] + "'");
    if (Categories::is_unknown_token(row[c_school])) reader.fail("missing school_id");
    int year;
    try {
      year = static_cast<int>(csv::parse_int(row[c_year]));
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    NodeId id = ids.intern(row[c_node]);
    if (id != table.size()) reader.fail("node ids must be interned before any edge references");
    table.append(id, row[c_school], year, row[c_gender], row[c_major], row[c_home]);
  }
  return table;
}

std::vector<SchoolCovariates> read_school_covariates(std::istream& in, std::string source_name) {
  csv::Reader reader(in, std::move(source_name));
  std::array<std::size_t, kSchoolColumns.size()> col{};
  for (std::size_t i = 0; i < kSchoolColumns.size(); ++i) col[i] = reader.column(kSchoolColumns[i]);

  std::vector<SchoolCovariates> out;
  std::vector<std::string> row;
  std::map<std::string, bool> seen;
  while (reader.next(row)) {
    SchoolCovariates s;
    try {
      s.school_id = row[col[0]];
      s.is_private = csv::parse_bool(row[col[1]]);
      s.is_hbcu = csv::parse_bool(row[col[2]]);
      s.is_womens = csv::parse_bool(row[col[3]]);
      s.is_hispanic_serving = csv::parse_bool(row[col[4]]);
      s.is_religious = csv::parse_bool(row[col[5]]);
      s.is_commuter = csv::parse_bool(row[col[6]]);
      s.greek_rate = csv::parse_double(row[col[7]]);
      s.class_size = static_cast<long>(csv::parse_int(row[col[8]]));
      s.grad_rate = csv::parse_double(row[col[9]]);
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    if (s.school_id.empty()) reader.fail("empty school_id");
    if (!seen.emplace(s.school_id, true).second) reader.fail("duplicate school_id '" + s.school_id + "'");
    if (s.greek_rate < 0 || s.greek_rate > 1) reader.fail("greek_rate outside [0,1]");
    if (s.grad_rate < 0 || s.grad_rate > 1) reader.fail("grad_rate outside [0,1]");
    if (s.class_size <= 0) reader.fail("class_size must be positive");
    out.push_back(std::move(s));
  }
  return out;
}

void write_school_covariates(std::ostream& out, std::span<const SchoolCovariates> schools) {
  csv::write_row(out, {kSchoolColumns.begin(), kSchoolColumns.end()});
  auto b = [](bool v) { return std::string(v ? "1" : "0"); };
  for (const auto& s : schools) {
    csv::write_row(out, {s.school_id, b(s.is_private), b(s.is_hbcu), b(s.is_womens), b(s.is_hispanic_serving),
                         b(s.is_religious), b(s.is_commuter), csv::format_number(s.greek_rate),
                         std::to_string(s.class_size), csv::format_number(s.grad_rate)});
  }
}

std::vector<CohortRecord> read_cohorts(std::istream& in, std::string source_name) {
  csv::Reader reader(in, std::move(source_name));
  const auto c_school = reader.column("school_id");
  const auto c_year = reader.column("entry_year");
  const auto c_start = reader.column("start_date");
  std::vector<CohortRecord> out;
  std::map<std::pair<std::string, int>, bool> seen;
  std::vector<std::string> row;
  while (reader.next(row)) {
    CohortRecord r;
    r.school_id = row[c_school];
    try {
      r.entry_year = static_cast<int>(csv::parse_int(row[c_year]));
      r.start_date = parse_date(row[c_start]);
    } catch (const std::invalid_argument& e) {
      reader.fail(e.what());
    }
    if (!seen.emplace(std::make_pair(r.school_id, r.entry_year), true).second) {
      reader.fail("duplicate cohort " + r.school_id + ":" + std::to_string(r.entry_year));
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid TimeGrid::monthly(Day origin, int first, int end) {
  if (first >= end) throw std::invalid_argument("empty time grid");
  TimeGrid g;
  g.unit_ = TimeUnit::Month;
  g.origin_ = origin;
  g.origin_month_ = month_ordinal(origin);
  g.first_ = first;
  g.end_ = end;
  return g;
}

TimeGrid TimeGrid::weekly(Day origin, int first, int end) {
  if (first >= end) throw std::invalid_argument("empty time grid");
  TimeGrid g;
  g.unit_ = TimeUnit::Week;
  g.origin_ = origin;
  g.first_ = first;
  g.end_ = end;
  return g;
}

TimeGrid TimeGrid::make(TimeUnit unit, Day origin) {
  return unit == TimeUnit::Month ? monthly(origin) : weekly(origin);
}

void TimeGrid::check(int idx) const {
  if (!contains(idx)) {
    throw std::out_of_range("bucket index " + std::to_string(idx) + " outside grid [" + std::to_string(first_) +
                            ", " + std::to_string(end_) + ")");
  }
}

Day TimeGrid::bucket_begin(int idx) const {
  if (unit_ == TimeUnit::Month) return first_day_of_month(origin_month_ + idx);
  return origin_ + 7 * idx;
}

Day TimeGrid::bucket_end(int idx) const { return bucket_begin(idx + 1); }

int TimeGrid::bucket_index(Day t) const {
  if (unit_ == TimeUnit::Month) return month_ordinal(t) - origin_month_;
  int d = t - origin_;
  return d >= 0 ? d / 7 : -((-d + 6) / 7);
}

std::optional<int> TimeGrid::bucket_of(Day t) const {
  int idx = bucket_index(t);
  if (!contains(idx)) return std::nullopt;
  return idx;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(IdMap ids, AttributeTable attributes, TemporalEdgeList edges,
                 std::span<const CohortRecord> cohort_rows, std::vector<SchoolCovariates> schools)
    : ids_(std::move(ids)), attributes_(std::move(attributes)), edges_(std::move(edges)),
      school_rows_(std::move(schools)) {
  if (attributes_.size() < ids_.size()) {
    throw DataError("node '" + ids_.external(static_cast<NodeId>(attributes_.size())) +
                    "' is referenced by an edge but has no attribute record");
  }
  const auto& school_labels = attributes_.schools();

  std::map<std::pair<std::string, int>, Day> starts;
  for (const auto& r : cohort_rows) starts[{r.school_id, r.entry_year}] = r.start_date;

  std::map<std::pair<std::string, int>, std::vector<NodeId>> groups;
  for (NodeId n = 0; n < attributes_.size(); ++n) {
    const auto& a = attributes_[n];
    groups[{school_labels.label(static_cast<std::int32_t>(a.school)), a.entry_year}].push_back(n);
  }
  std::map<std::pair<std::string, int>, std::size_t> cohort_index;
  for (auto& [key, members] : groups) {
    auto it = starts.find(key);
    if (it == starts.end()) {
      throw DataError("no cohort start date for school '" + key.first + "' entry year " +
                      std::to_string(key.second));
    }
    Cohort c;
    c.school = static_cast<std::uint32_t>(*school_labels.find(key.first));
    c.school_id = key.first;
    c.entry_year = key.second;
    c.start_date = it->second;
    c.members = std::move(members);
    cohort_index[key] = cohorts_.size();
    cohorts_.push_back(std::move(c));
  }

  node_cohort_.assign(attributes_.size(), 0);
  school_members_.assign(school_labels.size(), {});
  for (std::size_t c = 0; c < cohorts_.size(); ++c) {
    for (NodeId n : cohorts_[c].members) node_cohort_[n] = c;
  }
  for (NodeId n = 0; n < attributes_.size(); ++n) school_members_[attributes_[n].school].push_back(n);

  school_row_of_.assign(school_labels.size(), -1);
  for (std::size_t i = 0; i < school_rows_.size(); ++i) {
    if (auto code = school_labels.find(school_rows_[i].school_id)) {
      school_row_of_[static_cast<std::size_t>(*code)] = static_cast<std::int32_t>(i);
    }
  }

  cohort_events_.assign(cohorts_.size(), {});
  incident_events_.assign(cohorts_.size(), {});
  school_events_.assign(school_labels.size(), {});
  auto events = edges_.events();
  if (events.size() > std::numeric_limits<std::uint32_t>::max()) throw DataError("too many edge events");
  for (std::uint32_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    std::size_t cu = node_cohort_[e.u];
    std::size_t cv = node_cohort_[e.v];
    if (cu == cv) cohort_events_[cu].push_back(i);
    incident_events_[cu].push_back(i);
    if (cv != cu) incident_events_[cv].push_back(i);
    auto su = attributes_[e.u].school;
    if (su == attributes_[e.v].school) school_events_[su].push_back(i);
  }
}

const Cohort& Dataset::cohort(std::size_t c) const {
  if (c >= cohorts_.size()) throw LookupError("unknown cohort index " + std::to_string(c));
  return cohorts_[c];
}

std::size_t Dataset::find_cohort(std::string_view key) const {
  for (std::size_t c = 0; c < cohorts_.size(); ++c) {
    if (cohorts_[c].key() == key) return c;
  }
  throw LookupError("unknown cohort '" + std::string(key) + "'");
}

std::optional<std::size_t> Dataset::find_cohort(std::string_view school_id, int entry_year) const {
  for (std::size_t c = 0; c < cohorts_.size(); ++c) {
    if (cohorts_[c].school_id == school_id && cohorts_[c].entry_year == entry_year) return c;
  }
  return std::nullopt;
}

const SchoolCovariates* Dataset::covariates(std::uint32_t school) const {
  if (school >= school_row_of_.size() || school_row_of_[school] < 0) return nullptr;
  return &school_rows_[static_cast<std::size_t>(school_row_of_[school])];
}

std::span<const NodeId> Dataset::scope_members(std::size_t c, Scope scope) const {
  const auto& co = cohort(c);
  return scope == Scope::Cohort ? std::span<const NodeId>(co.members) : school_members(co.school);
}

std::span<const std::uint32_t> Dataset::scope_events(std::size_t c, Scope scope) const {
  const auto& co = cohort(c);
  return scope == Scope::Cohort ? cohort_events(c) : school_events(co.school);
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  DatasetPaths p;
  p.edges = dir / "edges.csv";
  p.attributes = dir / "attributes.csv";
  p.cohorts = dir / "cohorts.csv";
  p.schools = dir / "schools.csv";
  p.closeness = dir / "closeness.csv";
  return p;
}

namespace {

std::ifstream open_required(const std::filesystem::path& path, std::string_view what) {
  if (path.empty() || !std::filesystem::exists(path)) {
    throw DataError("missing " + std::string(what) + " file: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + std::string(what) + " file: " + path.string());
  return in;
}

}  // namespace

LoadedDataset load_dataset(const DatasetPaths& paths) {
  auto attr_in = open_required(paths.attributes, "attribute");
  auto cohort_in = open_required(paths.cohorts, "cohort");
  auto edge_in = open_required(paths.edges, "edge");

  IdMap ids;
  auto attributes = AttributeTable::read(attr_in, ids, paths.attributes.string());
  auto cohorts = read_cohorts(cohort_in, paths.cohorts.string());
  auto ingest = ingest_edges(edge_in, ids, paths.edges.string());
  std::vector<SchoolCovariates> schools;
  if (!paths.schools.empty() && std::filesystem::exists(paths.schools)) {
    std::ifstream in(paths.schools);
    schools = read_school_covariates(in, paths.schools.string());
  }
  LoadedDataset out{Dataset(std::move(ids), std::move(attributes), std::move(ingest.edges), cohorts,
                            std::move(schools)),
                    ingest.report};
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

std::uint32_t sorted_intersection_size(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::uint32_t n = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::optional<std::uint32_t> SnapshotView::local_of(NodeId global) const {
  if (!nodes_) {
    if (global < node_count()) return global;
    return std::nullopt;
  }
  auto it = std::lower_bound(nodes_->begin(), nodes_->end(), global);
  if (it == nodes_->end() || *it != global) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes_->begin());
}

SnapshotView SnapshotView::from_edges(std::size_t n, std::span<const std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [a, b] : edges) {
    if (a == b) continue;
    if (a >= n || b >= n) throw std::out_of_range("edge endpoint outside node range");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  SnapshotView v;
  v.offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    std::sort(adj[u].begin(), adj[u].end());
    adj[u].erase(std::unique(adj[u].begin(), adj[u].end()), adj[u].end());
    v.offsets_[u + 1] = v.offsets_[u] + static_cast<std::uint32_t>(adj[u].size());
  }
  v.adjacency_.reserve(v.offsets_[n]);
  for (auto& list : adj) v.adjacency_.insert(v.adjacency_.end(), list.begin(), list.end());
  return v;
}

SnapshotBuilder::SnapshotBuilder(const Dataset& data, std::size_t cohort, Scope scope, TimeGrid grid,
                                 bool track_triangles)
    : grid_(grid), track_triangles_(track_triangles), current_(grid.first_index() - 1) {
  auto members = data.scope_members(cohort, scope);
  members_ = std::make_shared<const std::vector<NodeId>>(members.begin(), members.end());
  const auto& m = *members_;
  auto local = [&](NodeId g) {
    return static_cast<std::uint32_t>(std::lower_bound(m.begin(), m.end(), g) - m.begin());
  };
  auto all = data.edges().events();
  auto idx = data.scope_events(cohort, scope);
  events_.reserve(idx.size());
  for (auto i : idx) {
    const auto& e = all[i];
    events_.push_back({local(e.u), local(e.v), e.t});
  }
  adjacency_.assign(m.size(), {});
  if (track_triangles_) triangles_.assign(m.size(), 0);

  const Day window_start = grid_.bucket_begin(grid_.first_index());
  while (cursor_ < events_.size() && events_[cursor_].t < window_start) insert(events_[cursor_++]);
  bucket_begin_ = cursor_;
}

void SnapshotBuilder::insert(const LocalEdge& e) {
  auto& na = adjacency_[e.a];
  auto& nb = adjacency_[e.b];
  if (track_triangles_) {
    std::uint64_t common = 0;
    auto i = na.begin(), j = nb.begin();
    while (i != na.end() && j != nb.end()) {
      if (*i < *j) {
        ++i;
      } else if (*j < *i) {
        ++j;
      } else {
        ++triangles_[*i];
        ++common;
        ++i;
        ++j;
      }
    }
    triangles_[e.a] += common;
    triangles_[e.b] += common;
  }
  na.insert(std::lower_bound(na.begin(), na.end(), e.b), e.b);
  nb.insert(std::lower_bound(nb.begin(), nb.end(), e.a), e.a);
  ++edge_count_;
}

bool SnapshotBuilder::advance() {
  if (current_ + 1 >= grid_.end_index()) return false;
  ++current_;
  const Day end = grid_.bucket_end(current_);
  bucket_begin_ = cursor_;
  std::size_t stop = cursor_;
  while (stop < events_.size() && events_[stop].t < end) ++stop;
  closure_counts_.clear();
  closure_counts_.reserve(stop - cursor_);
  for (std::size_t k = cursor_; k < stop; ++k) {
    const auto& e = events_[k];
    closure_counts_.push_back(sorted_intersection_size(adjacency_[e.a], adjacency_[e.b]));
  }
  for (; cursor_ < stop; ++cursor_) insert(events_[cursor_]);
  return true;
}

void SnapshotBuilder::advance_to(int idx) {
  grid_.check(idx);
  if (idx < current_) throw std::logic_error("snapshot chain cannot move backwards");
  while (current_ < idx) advance();
}

std::span<const LocalEdge> SnapshotBuilder::bucket_edges() const {
  return {events_.data() + bucket_begin_, events_.data() + cursor_};
}

SnapshotView SnapshotBuilder::view() const {
  SnapshotView v;
  v.index_ = current_;
  v.nodes_ = members_;
  const std::size_t n = adjacency_.size();
  v.offsets_.resize(n + 1);
  v.offsets_[0] = 0;
  for (std::size_t u = 0; u < n; ++u) {
    v.offsets_[u + 1] = v.offsets_[u] + static_cast<std::uint32_t>(adjacency_[u].size());
  }
  v.adjacency_.reserve(v.offsets_[n]);
  for (const auto& list : adjacency_) v.adjacency_.insert(v.adjacency_.end(), list.begin(), list.end());
  v.triangles_ = triangles_;
  return v;
}

SnapshotView snapshot(const Dataset& data, std::size_t cohort, const TimeGrid& grid, int idx, Scope scope) {
  grid.check(idx);
  SnapshotBuilder builder(data, cohort, scope, grid);
  builder.advance_to(idx);
  return builder.view();
}

std::vector<EdgeEvent> new_edges_in(const Dataset& data, std::size_t cohort, const TimeGrid& grid, int idx,
                                    Scope scope) {
  grid.check(idx);
  const Day begin = grid.bucket_begin(idx);
  const Day end = grid.bucket_end(idx);
  std::vector<EdgeEvent> out;
  auto all = data.edges().events();
  for (auto i : data.scope_events(cohort, scope)) {
    const auto& e = all[i];
    if (e.t >= begin && e.t < end) out.push_back(e);
  }
  return out;
}

}  // namespace campusnet
