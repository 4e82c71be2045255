#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "campusnet/common.hpp"

namespace campusnet {

/// Bijection between source identifiers and dense NodeIds, in first-seen order.
class IdMap {
 public:
  NodeId intern(std::string_view external);
  std::optional<NodeId> find(std::string_view external) const;
  const std::string& external(NodeId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
};

/// Undirected friendship event; endpoints are stored with u < v.
struct EdgeEvent {
  NodeId u = 0;
  NodeId v = 0;
  Day t = 0;

  friend bool operator==(const EdgeEvent&, const EdgeEvent&) = default;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
};

/// Immutable, time-ordered event stream. Ordering is (t, u, v); each unordered
/// pair appears once with its earliest timestamp.
class TemporalEdgeList {
 public:
  TemporalEdgeList() = default;

  /// Canonicalizes raw events: orients endpoints, drops self-loops, keeps the
  /// earliest timestamp of repeated pairs and sorts.
  static TemporalEdgeList from_events(std::vector<EdgeEvent> raw, IngestReport* report = nullptr);

  std::span<const EdgeEvent> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const EdgeEvent& operator[](std::size_t i) const { return events_[i]; }

 private:
  std::vector<EdgeEvent> events_;
};

struct EdgeIngest {
  TemporalEdgeList edges;
  IngestReport report;
};

/// Reads `src_id,dst_id,date` rows. Unseen source ids are added to `ids`.
EdgeIngest ingest_edges(std::istream& in, IdMap& ids, std::string source_name = "<edges>");
EdgeIngest ingest_edges(const std::filesystem::path& path, IdMap& ids);

/// Interned categorical labels. "", "unknown" and "NA" map to kUnknown.
class Categories {
 public:
  std::int32_t intern(std::string_view label);
  std::optional<std::int32_t> find(std::string_view label) const;
  const std::string& label(std::int32_t code) const;
  std::size_t size() const { return labels_.size(); }

  static bool is_unknown_token(std::string_view label);

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct NodeAttributes {
  std::uint32_t school = 0;
  int entry_year = 0;
  /// Category code per Dimension (entry year is interned like the others).
  std::array<std::int32_t, 4> features{kUnknown, kUnknown, kUnknown, kUnknown};
};

class AttributeTable {
 public:
  /// Reads `node_id,school_id,entry_year,gender,major,hometown`. Node ids are
  /// interned into `ids` in row order; a repeated node id is a parse error.
  static AttributeTable read(std::istream& in, IdMap& ids, std::string source_name = "<attributes>");

  /// Appends a record for the next dense node id (ids must be added in order).
  void append(NodeId node, std::string_view school, int entry_year, std::string_view gender,
              std::string_view major, std::string_view hometown);

  std::size_t size() const { return rows_.size(); }
  const NodeAttributes& operator[](NodeId n) const { return rows_[n]; }

  std::int32_t feature(NodeId n, Dimension d) const { return rows_[n].features[static_cast<int>(d)]; }
  std::size_t cardinality(Dimension d) const { return dims_[static_cast<int>(d)].size(); }
  const std::string& feature_label(Dimension d, std::int32_t code) const;

  const Categories& schools() const { return schools_; }

 private:
  std::vector<NodeAttributes> rows_;
  Categories schools_;
  std::array<Categories, 4> dims_;
};

struct SchoolCovariates {
  std::string school_id;
  bool is_private = false;
  bool is_hbcu = false;
  bool is_womens = false;
  bool is_hispanic_serving = false;
  bool is_religious = false;
  bool is_commuter = false;
  double greek_rate = 0.0;
  long class_size = 1;
  double grad_rate = 0.0;
};

/// Column order of the school covariate CSV.
inline constexpr std::array<std::string_view, 10> kSchoolColumns{
    "school_id",    "is_private", "is_hbcu",    "is_womens", "is_hispanic_serving",
    "is_religious", "is_commuter", "greek_rate", "class_size", "grad_rate"};

std::vector<SchoolCovariates> read_school_covariates(std::istream& in, std::string source_name = "<schools>");
void write_school_covariates(std::ostream& out, std::span<const SchoolCovariates> schools);

struct CohortRecord {
  std::string school_id;
  int entry_year = 0;
  Day start_date = 0;
};

std::vector<CohortRecord> read_cohorts(std::istream& in, std::string source_name = "<cohorts>");

struct Cohort {
  std::uint32_t school = 0;
  std::string school_id;
  int entry_year = 0;
  Day start_date = 0;
  std::vector<NodeId> members;  // ascending

  std::string key() const { return school_id + ":" + std::to_string(entry_year); }
};

/// Calendar grid of contiguous buckets anchored at a cohort start date. Weekly
/// buckets are 7-day windows from the start date; monthly buckets are calendar
/// months counted from the start month. Index range is half-open [first, end).
class TimeGrid {
 public:
  static TimeGrid monthly(Day origin, int first = -12, int end = 60);
  static TimeGrid weekly(Day origin, int first = -52, int end = 260);
  static TimeGrid make(TimeUnit unit, Day origin);

  TimeUnit unit() const { return unit_; }
  Day origin() const { return origin_; }
  int first_index() const { return first_; }
  int end_index() const { return end_; }
  std::size_t size() const { return static_cast<std::size_t>(end_ - first_); }
  bool contains(int idx) const { return idx >= first_ && idx < end_; }
  /// Throws std::out_of_range for indices outside the grid.
  void check(int idx) const;

  Day bucket_begin(int idx) const;
  /// Exclusive end day of the bucket.
  Day bucket_end(int idx) const;
  /// Bucket index of `t` (may fall outside the grid range).
  int bucket_index(Day t) const;
  std::optional<int> bucket_of(Day t) const;

 private:
  TimeUnit unit_ = TimeUnit::Month;
  Day origin_ = 0;
  int origin_month_ = 0;
  int first_ = 0;
  int end_ = 0;
};

/// Loaded bundle: immutable after construction and safe to share across threads.
class Dataset {
 public:
  Dataset() = default;
  Dataset(IdMap ids, AttributeTable attributes, TemporalEdgeList edges,
          std::span<const CohortRecord> cohort_rows, std::vector<SchoolCovariates> schools = {});

  const IdMap& ids() const { return ids_; }
  const AttributeTable& attributes() const { return attributes_; }
  const TemporalEdgeList& edges() const { return edges_; }
  std::size_t node_count() const { return attributes_.size(); }

  std::size_t cohort_count() const { return cohorts_.size(); }
  /// Throws LookupError for an unknown cohort index.
  const Cohort& cohort(std::size_t c) const;
  std::span<const Cohort> cohorts() const { return cohorts_; }
  /// Looks up "school_id:entry_year". Throws LookupError.
  std::size_t find_cohort(std::string_view key) const;
  std::optional<std::size_t> find_cohort(std::string_view school_id, int entry_year) const;
  std::size_t cohort_of(NodeId n) const { return node_cohort_[n]; }

  std::size_t school_count() const { return school_members_.size(); }
  std::span<const NodeId> school_members(std::uint32_t school) const { return school_members_.at(school); }
  /// Covariates for a school code, if a school table was supplied.
  const SchoolCovariates* covariates(std::uint32_t school) const;
  bool has_covariates() const { return !school_rows_.empty(); }

  /// Indices into edges() with both endpoints in cohort c, in time order.
  std::span<const std::uint32_t> cohort_events(std::size_t c) const { return cohort_events_.at(c); }
  /// Indices into edges() with both endpoints in the school, in time order.
  std::span<const std::uint32_t> school_events(std::uint32_t s) const { return school_events_.at(s); }
  /// Indices into edges() with at least one endpoint in cohort c, in time order.
  std::span<const std::uint32_t> incident_events(std::size_t c) const { return incident_events_.at(c); }

  /// Members and events of a cohort under the given scope.
  std::span<const NodeId> scope_members(std::size_t c, Scope scope) const;
  std::span<const std::uint32_t> scope_events(std::size_t c, Scope scope) const;

  TimeGrid grid(std::size_t c, TimeUnit unit) const { return TimeGrid::make(unit, cohort(c).start_date); }

 private:
  IdMap ids_;
  AttributeTable attributes_;
  TemporalEdgeList edges_;
  std::vector<Cohort> cohorts_;
  std::vector<std::size_t> node_cohort_;
  std::vector<std::vector<NodeId>> school_members_;
  std::vector<SchoolCovariates> school_rows_;
  std::vector<std::int32_t> school_row_of_;
  std::vector<std::vector<std::uint32_t>> cohort_events_;
  std::vector<std::vector<std::uint32_t>> school_events_;
  std::vector<std::vector<std::uint32_t>> incident_events_;
};

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path attributes;
  std::filesystem::path cohorts;
  std::filesystem::path schools;  // optional
  std::filesystem::path closeness;  // optional, read by the persistence module

  /// Conventional file names inside a bundle directory.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct LoadedDataset {
  Dataset data;
  IngestReport edge_report;
};

/// Loads attributes first so node ids follow attribute-file order, then edges.
/// Throws DataError naming a missing file.
LoadedDataset load_dataset(const DatasetPaths& paths);

/// Edge between two local (per-view) node indices.
struct LocalEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  Day t = 0;
};

/// Immutable CSR adjacency over a fixed member set. Local node i corresponds
/// to global node nodes()[i]; neighbor lists are sorted ascending.
class SnapshotView {
 public:
  SnapshotView() = default;

  /// Builds a view over local nodes 0..n-1 (global id == local index).
  /// Repeated pairs and self-loops are ignored.
  static SnapshotView from_edges(std::size_t n, std::span<const std::pair<std::uint32_t, std::uint32_t>> edges);

  int index() const { return index_; }
  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return adjacency_.size() / 2; }
  std::span<const std::uint32_t> neighbors(std::uint32_t u) const {
    return {adjacency_.data() + offsets_[u], adjacency_.data() + offsets_[u + 1]};
  }
  std::uint32_t degree(std::uint32_t u) const { return offsets_[u + 1] - offsets_[u]; }
  NodeId node(std::uint32_t local) const { return nodes_ ? (*nodes_)[local] : local; }
  std::optional<std::uint32_t> local_of(NodeId global) const;

  /// Per-node triangle counts when tracked by the builder; empty otherwise.
  std::span<const std::uint64_t> triangle_counts() const { return triangles_; }

 private:
  friend class SnapshotBuilder;

  int index_ = 0;
  std::shared_ptr<const std::vector<NodeId>> nodes_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> adjacency_;
  std::vector<std::uint64_t> triangles_;
};

/// Walks a cohort's snapshot chain bucket by bucket, extending the previous
/// adjacency by each bucket's new edges. Events dated before the grid are
/// part of every snapshot but of no bucket.
class SnapshotBuilder {
 public:
  SnapshotBuilder(const Dataset& data, std::size_t cohort, Scope scope, TimeGrid grid,
                  bool track_triangles = true);

  /// Moves to the next bucket. Returns false once the grid is exhausted.
  bool advance();
  /// Advances until the current bucket is `idx`. Throws std::out_of_range.
  void advance_to(int idx);

  int index() const { return current_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::span<const NodeId> members() const { return *members_; }

  /// Edges added in the current bucket, in event order.
  std::span<const LocalEdge> bucket_edges() const;
  /// Common-neighbor count of each bucket edge in the previous snapshot.
  std::span<const std::uint32_t> bucket_closure_counts() const { return closure_counts_; }

  SnapshotView view() const;

 private:
  void insert(const LocalEdge& e);

  TimeGrid grid_;
  bool track_triangles_;
  std::shared_ptr<const std::vector<NodeId>> members_;
  std::vector<LocalEdge> events_;
  std::size_t cursor_ = 0;
  std::size_t bucket_begin_ = 0;
  int current_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
  std::vector<std::uint64_t> triangles_;
  std::vector<std::uint32_t> closure_counts_;
  std::size_t edge_count_ = 0;
};

/// Snapshot of every in-scope edge dated on or before the last day of bucket `idx`.
SnapshotView snapshot(const Dataset& data, std::size_t cohort, const TimeGrid& grid, int idx, Scope scope);

/// In-scope events dated inside bucket `idx`.
std::vector<EdgeEvent> new_edges_in(const Dataset& data, std::size_t cohort, const TimeGrid& grid, int idx,
                                    Scope scope);

/// Number of common entries of two ascending sequences.
std::uint32_t sorted_intersection_size(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

}  // namespace campusnet
