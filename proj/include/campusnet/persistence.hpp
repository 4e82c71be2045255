#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "campusnet/temporal_graph.hpp"

namespace campusnet {

inline constexpr std::uint32_t kDefaultCffCutoff = 200;

/// Per-ego closeness rankings of alters (rank 1 = closest).
class ClosenessTable {
 public:
  struct Entry {
    NodeId ego;
    NodeId alter;
    std::uint32_t rank;
  };

  ClosenessTable() = default;
  /// Throws DataError when an ego repeats a rank or an alter, or a rank is 0.
  static ClosenessTable from_entries(std::size_t node_count, std::vector<Entry> entries);

  /// Reads `ego_id,alter_id,rank`; ids must already be known to `ids`.
  static ClosenessTable read(std::istream& in, const IdMap& ids, std::string source_name = "<closeness>");
  static ClosenessTable read(const std::filesystem::path& path, const IdMap& ids);

  bool has_ego(NodeId ego) const { return ego < offsets_.size() - 1 && offsets_[ego + 1] > offsets_[ego]; }
  /// Rank of alter for ego; absent if ego is absent or does not rank alter.
  std::optional<std::uint32_t> rank(NodeId ego, NodeId alter) const;
  std::size_t ego_count() const;
  std::size_t size() const { return alters_.size(); }

  void write(std::ostream& out, const IdMap& ids) const;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> alters_;  // sorted within each ego
  std::vector<std::uint32_t> ranks_;
};

/// True iff ego ranks alter within the top K. Absent when ego has no rankings;
/// an unranked alter of a present ego is not a CFF.
std::optional<bool> is_cff(const ClosenessTable& closeness, NodeId ego, NodeId alter,
                           std::uint32_t k = kDefaultCffCutoff);

struct PersistenceOptions {
  std::uint32_t k = kDefaultCffCutoff;
  /// Two evaluations per tie (one per endpoint). Undirected mode evaluates
  /// each tie once: CFF when either endpoint holds the other in its top K.
  bool directed = true;
  bool same_school_only = true;
};

struct TieEvaluation {
  NodeId ego = 0;
  NodeId alter = 0;
  Day t = 0;
  bool cff = false;
};

struct EvaluationSet {
  std::vector<TieEvaluation> evaluations;
  std::size_t ties = 0;      // ties considered
  std::size_t excluded = 0;  // evaluations dropped because the ego had no rankings
};

EvaluationSet evaluate_ties(const Dataset& data, const ClosenessTable& closeness,
                            const PersistenceOptions& options = {});

enum class Grouping { FormationWeek, GenderPair, Cohort, School, EntryYearGenderPair };

std::string_view to_string(Grouping g);
Grouping parse_grouping(std::string_view s);
inline constexpr Grouping kAllGroupings[] = {Grouping::FormationWeek, Grouping::GenderPair, Grouping::Cohort,
                                             Grouping::School, Grouping::EntryYearGenderPair};

struct PersistenceCell {
  Grouping grouping = Grouping::Cohort;
  std::string key;
  std::optional<double> share_cff;  // absent when n_ties == 0
  std::size_t n_ties = 0;
  std::size_t n_cff = 0;
};

/// Shares over the ego-side groups of the evaluations. FormationWeek counts
/// 7-day windows from the ego's cohort start; gender pairs are unordered
/// ("F-M"). Cells are ordered by key (numerically where the key is numeric).
std::vector<PersistenceCell> share_cff_by(Grouping grouping, const Dataset& data,
                                          std::span<const TieEvaluation> evaluations);

struct WeightedCorrelation {
  std::optional<double> rho;
  std::optional<double> t;  // rho * sqrt(n - 2) / sqrt(1 - rho^2)
  std::size_t n = 0;
};

/// Weighted Pearson correlation. Absent with fewer than 2 points or zero variance.
WeightedCorrelation weighted_correlation(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> w);

struct SchoolPoint {
  std::string school_id;
  std::size_t members = 0;
  double mean_college_friends = 0;  // same-school ties per member
  double mean_cff = 0;              // CFF evaluations per member
  std::optional<double> share_cff;
};

struct SchoolScatter {
  int entry_year = 0;
  std::vector<SchoolPoint> points;
  WeightedCorrelation friends_vs_cff;    // mean_college_friends vs mean_cff
  WeightedCorrelation friends_vs_share;  // mean_college_friends vs share_cff
};

/// Per-school aggregates of the given entry year, weighted by member count.
SchoolScatter school_scatter(int entry_year, const Dataset& data, std::span<const TieEvaluation> evaluations);

}  // namespace campusnet
