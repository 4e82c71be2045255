#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "campusnet/homophily.hpp"
#include "campusnet/inference.hpp"
#include "campusnet/structure.hpp"
#include "campusnet/synthgen.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

inline constexpr std::string_view kToolName = "campusnet";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Metric names accepted by cmd_metrics, in output order.
std::span<const std::string_view> metric_names();

/// Everything that determines the bytes written by cmd_metrics. The thread
/// count is deliberately not part of it.
struct MetricsRequest {
  DatasetPaths inputs;
  std::filesystem::path out_dir;
  Scope scope = Scope::Cohort;
  TimeUnit unit = TimeUnit::Month;
  std::vector<std::string> metrics;  // subset of metric_names(); empty writes the manifest only
  std::uint64_t seed = 0x5eed;
  std::size_t path_exact_threshold = 2000;
  std::size_t path_sampled_sources = 256;
  Baseline baseline = Baseline::Counterpart;
  std::uint32_t k = kDefaultCffCutoff;
  bool directed = true;
  std::optional<int> scatter_year;   // entry year of the school scatter; default: most common year
  std::vector<std::string> cohorts;  // "school:year" keys; empty means every cohort
};

std::string manifest_json(const MetricsRequest& request, const std::vector<std::string>& outputs);
/// Reads a manifest written by cmd_metrics. Relative input paths resolve
/// against the current directory, as when the manifest was written.
MetricsRequest read_manifest(const std::filesystem::path& path);

struct IngestSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t cohorts = 0;
  std::size_t schools = 0;
  IngestReport edge_report;
  std::optional<std::size_t> closeness_entries;
};

IngestSummary cmd_ingest(const DatasetPaths& paths);

struct GenerateSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t cohorts = 0;
  std::size_t schools = 0;
  std::size_t closeness_entries = 0;
  std::size_t dropped_proposals = 0;
};

/// Writes the bundle plus the resolved scenario (scenario.json) into out_dir.
GenerateSummary cmd_generate(const ScenarioConfig& config, const std::filesystem::path& out_dir, unsigned threads);

/// Computes the selected metrics, one CSV each, plus manifest.json. Cohorts
/// run in parallel; their rows are written in cohort order.
void cmd_metrics(const MetricsRequest& request, unsigned threads, std::ostream& log);

struct RegressRequest {
  std::filesystem::path out_dir;  // a metrics output directory
  std::vector<std::string> models{"homophily", "persistence"};
  std::vector<std::string> homophily_covariates{"is_private",   "is_hbcu",    "is_womens",      "is_religious",
                                                "is_commuter",  "greek_rate", "log_class_size", "grad_rate"};
  std::vector<std::string> persistence_covariates{"is_private",  "is_hbcu",    "is_womens",
                                                  "is_hispanic_serving", "is_religious", "is_commuter",
                                                  "greek_rate",  "log_class_size", "grad_rate"};
  std::size_t min_rows_per_month = 0;
  std::size_t min_incidences = kMinHomophilyIncidences;
  ClusterCorrection correction = ClusterCorrection::CR1;
};

/// Fits the homophily month-interaction models (one per dimension) and the
/// persistence model. Writes regression_<model>.csv and regression_<model>.json.
void cmd_regress(const RegressRequest& request, std::ostream& log);

/// Figure names written by cmd_figures.
std::span<const std::string_view> figure_names();

struct FiguresRequest {
  std::filesystem::path out_dir;  // metrics (and regress) output directory
  std::vector<std::string> figures;  // empty: all
  std::optional<std::string> focal_cohort;  // crossyear, path, evcent_snapshots
  std::size_t snapshot_sample = 200;
};

/// Writes figures/<name>.csv from earlier outputs. Throws DataError naming
/// the command that produces a missing input.
void cmd_figures(const FiguresRequest& request, std::ostream& log);

/// School-type group used by the figures: hbcu, womens, private or public.
std::string school_group(const SchoolCovariates& s);

}  // namespace campusnet
