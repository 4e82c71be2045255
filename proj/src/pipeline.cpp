#include "campusnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "campusnet/centrality.hpp"
#include "campusnet/csv.hpp"
#include "campusnet/date.hpp"
#include "campusnet/formation.hpp"
#include "campusnet/parallel.hpp"
#include "campusnet/persistence.hpp"
#include "campusnet/random.hpp"

namespace campusnet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMetricNames[] = {"edge_volume",     "cross_cohort_volume", "degree_percentiles",
                                             "triadic_closure", "homophily",           "structure",
                                             "cross_cohort_path", "centrality",        "persistence"};

constexpr std::string_view kFigureNames[] = {"new_edges",          "crossyear",           "homo_avg",
                                             "homo_avg_cum",       "homo_all",            "path",
                                             "position_time",      "evcent_snapshots",    "evcent_correlation_a",
                                             "evcent_correlation_b", "persistence_time",  "persistence_time_gender",
                                             "persistence_sample", "persistence_coef"};

// Per-cohort output files, in the order their rows are produced.
enum CohortFile {
  kEdgeVolume,
  kCrossVolume,
  kDegree,
  kClosure,
  kHomophily,
  kStructure,
  kCrossPath,
  kRanks,
  kCorrelation,
  kChurn,
  kCohortFileCount
};

struct FileSpec {
  std::string_view metric;
  std::string_view file;
  std::string_view header;
};

constexpr FileSpec kCohortFiles[kCohortFileCount] = {
    {"edge_volume", "edge_volume.csv", "cohort,idx,value,sample_count"},
    {"cross_cohort_volume", "cross_cohort_volume.csv", "cohort,series,idx,value,sample_count"},
    {"degree_percentiles", "degree_percentiles.csv", "cohort,series,idx,value,sample_count"},
    {"triadic_closure", "triadic_closure.csv", "cohort,idx,share_closing,mean_triangles_closed,new_edge_count"},
    {"homophily", "homophily.csv", "cohort,dimension,mode,idx,H,e_sum,expected,n_incidences"},
    {"structure", "structure.csv", "cohort,idx,lcc_fraction,avg_clustering,modularity,avg_path,path_is_sampled,seed"},
    {"cross_cohort_path", "cross_cohort_path.csv", "cohort,series,idx,value,sample_count"},
    {"centrality", "centrality_ranks.csv", "cohort,idx,node,rank"},
    {"centrality", "centrality_correlation.csv", "cohort,idx_a,idx_b,corr"},
    {"centrality", "rank_churn.csv", "cohort,idx,churn"},
};

std::string num(double v) { return csv::format_number(v); }
std::string num(const std::optional<double>& v) { return csv::format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

struct Selection {
  std::set<std::string, std::less<>> names;
  bool has(std::string_view n) const { return names.count(n) > 0; }
};

Selection select(const std::vector<std::string>& metrics) {
  Selection s;
  for (const auto& m : metrics) {
    if (std::find(std::begin(kMetricNames), std::end(kMetricNames), m) == std::end(kMetricNames)) {
      std::string valid;
      for (auto n : kMetricNames) valid += (valid.empty() ? "" : "|") + std::string(n);
      throw std::invalid_argument("unknown metric '" + m + "' (valid: " + valid + ")");
    }
    s.names.insert(m);
  }
  return s;
}

void append_series(std::string& out, const MetricSeries& s, bool family) {
  for (const auto& p : s.points) {
    if (family) {
      csv::append_row(out, {s.cohort, s.series, num(p.idx), num(p.value), num(p.sample_count)});
    } else {
      csv::append_row(out, {s.cohort, num(p.idx), num(p.value), num(p.sample_count)});
    }
  }
}

using Chunk = std::array<std::string, kCohortFileCount>;

Chunk compute_cohort(const Dataset& data, std::size_t c, const MetricsRequest& req, const Selection& sel) {
  Chunk out;
  const auto& co = data.cohort(c);
  const auto key = co.key();
  const auto grid = data.grid(c, req.unit);

  if (sel.has("edge_volume")) append_series(out[kEdgeVolume], edge_volume(data, c, grid, req.scope), false);
  if (sel.has("cross_cohort_volume")) {
    for (const auto& s : cross_cohort_volume(data, c, grid)) append_series(out[kCrossVolume], s, true);
  }
  if (sel.has("homophily")) {
    for (auto mode : {HomophilyMode::New, HomophilyMode::Cumulative}) {
      for (auto d : kAllDimensions) {
        const std::string dim(to_string(d));
        const std::string mode_name(to_string(mode));
        for (const auto& h : homophily_series(data, c, d, grid, mode, req.baseline)) {
          const auto& t = h.terms;
          const bool any = t.n_incidences > 0;
          csv::append_row(out[kHomophily],
                          {key, dim, mode_name, num(h.idx), num(t.h), any ? num(t.e_sum) : std::string(),
                           any ? num(t.expected) : std::string(), num(t.n_incidences)});
        }
      }
    }
  }

  const bool want_degree = sel.has("degree_percentiles");
  const bool want_closure = sel.has("triadic_closure");
  const bool want_structure = sel.has("structure");
  const bool want_centrality = sel.has("centrality");
  if (want_degree || want_closure || want_structure || want_centrality) {
    const bool formation = want_degree || want_closure;
    const bool cohort_graph = want_structure || want_centrality;
    // one builder when the formation scope is the cohort network itself
    const bool shared = req.scope == Scope::Cohort;
    std::optional<SnapshotBuilder> formation_builder, cohort_builder;
    if (formation && !shared) formation_builder.emplace(data, c, req.scope, grid, false);
    if (cohort_graph || shared) cohort_builder.emplace(data, c, Scope::Cohort, grid, want_structure);
    SnapshotBuilder& fb = shared ? *cohort_builder : *formation_builder;

    std::vector<double> percentiles(std::begin(kDefaultPercentiles), std::end(kDefaultPercentiles));
    std::vector<std::string> percentile_names{"p25", "p50", "p75"};
    std::vector<std::uint32_t> locals;
    for (NodeId m : co.members) {
      auto members = fb.members();
      locals.push_back(static_cast<std::uint32_t>(std::lower_bound(members.begin(), members.end(), m) -
                                                  members.begin()));
    }
    PathOptions path_options;
    path_options.exact_threshold = req.path_exact_threshold;
    path_options.sampled_sources = req.path_sampled_sources;
    std::vector<std::optional<CentralityVector>> centrality;

    for (int idx = grid.first_index(); idx < grid.end_index(); ++idx) {
      if (formation) {
        fb.advance();
        if (want_degree) {
          auto values = degree_percentile_values(fb.view(), locals, percentiles);
          for (std::size_t k = 0; k < values.size(); ++k) {
            csv::append_row(out[kDegree], {key, percentile_names[k], num(idx), num(values[k]), num(co.members.size())});
          }
        }
        if (want_closure) {
          auto s = closure_stats(idx, fb.bucket_closure_counts());
          csv::append_row(out[kClosure], {key, num(idx), num(s.share_closing), num(s.mean_triangles_closed),
                                          num(s.new_edge_count)});
        }
      }
      if (!cohort_graph) continue;
      if (!shared || !formation) cohort_builder->advance();
      auto view = cohort_builder->view();
      if (want_structure) {
        auto opts = path_options;
        opts.seed = derive_seed(req.seed, {static_cast<std::int64_t>(c), idx});
        auto s = structural_snapshot(view, co.members.size(), opts);
        csv::append_row(out[kStructure], {key, num(idx), num(s.lcc_fraction), num(s.avg_clustering),
                                          num(s.modularity), num(s.avg_path.mean), s.avg_path.sampled ? "1" : "0",
                                          std::to_string(opts.seed)});
      }
      if (want_centrality) {
        auto v = eigenvector_centrality(view);
        if (v) {
          for (Eigen::Index i = 0; i < v->ranks.size(); ++i) {
            csv::append_row(out[kRanks], {key, num(idx), data.ids().external(view.node(static_cast<std::uint32_t>(i))),
                                          num(v->ranks[i])});
          }
        }
        centrality.push_back(std::move(v));
      }
    }
    if (want_centrality) {
      auto corr = rank_correlation_matrix(centrality);
      for (Eigen::Index a = 0; a < corr.rows(); ++a) {
        for (Eigen::Index b = 0; b < corr.cols(); ++b) {
          csv::append_row(out[kCorrelation], {key, num(grid.first_index() + static_cast<int>(a)),
                                              num(grid.first_index() + static_cast<int>(b)), num(corr(a, b))});
        }
      }
      for (const auto& p : rank_churn(centrality, grid, key).points) {
        csv::append_row(out[kChurn], {key, num(p.idx), num(p.value)});
      }
    }
  }

  if (sel.has("cross_cohort_path")) {
    std::vector<std::size_t> counterparts;
    for (std::size_t o = 0; o < data.cohort_count(); ++o) {
      if (data.cohort(o).school == co.school) counterparts.push_back(o);
    }
    PathOptions opts;
    opts.exact_threshold = req.path_exact_threshold;
    opts.sampled_sources = req.path_sampled_sources;
    opts.seed = req.seed;
    for (const auto& s : cross_cohort_path_series(data, c, counterparts, grid, opts)) {
      append_series(out[kCrossPath], s, true);
    }
  }
  return out;
}

/// Collects per-cohort chunks and appends them to the open files in cohort order.
class OrderedWriter {
 public:
  OrderedWriter(std::vector<std::ofstream*> files, std::size_t n) : files_(std::move(files)), pending_(n) {}

  void submit(std::size_t i, Chunk chunk) {
    std::lock_guard lock(mutex_);
    pending_[i] = std::move(chunk);
    while (next_ < pending_.size() && pending_[next_]) {
      for (std::size_t f = 0; f < kCohortFileCount; ++f) {
        if (files_[f]) *files_[f] << (*pending_[next_])[f];
      }
      pending_[next_].reset();
      ++next_;
    }
  }

 private:
  std::vector<std::ofstream*> files_;
  std::vector<std::optional<Chunk>> pending_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string covariate_header() {
  std::string h = "cohort,school_id,entry_year,members,group";
  for (std::size_t i = 1; i < kSchoolColumns.size(); ++i) h += "," + std::string(kSchoolColumns[i]);
  return h;
}

void write_cohort_covariates(const Dataset& data, std::span<const std::size_t> cohorts, const fs::path& path) {
  auto out = open_output(path);
  out << covariate_header() << '\n';
  for (auto c : cohorts) {
    const auto& co = data.cohort(c);
    const auto* cov = data.covariates(co.school);
    std::vector<std::string> row{co.key(), co.school_id, std::to_string(co.entry_year),
                                 std::to_string(co.members.size()), cov ? school_group(*cov) : "unknown"};
    auto b = [](bool v) { return std::string(v ? "1" : "0"); };
    if (cov) {
      for (auto v : {b(cov->is_private), b(cov->is_hbcu), b(cov->is_womens), b(cov->is_hispanic_serving),
                     b(cov->is_religious), b(cov->is_commuter), num(cov->greek_rate), std::to_string(cov->class_size),
                     num(cov->grad_rate)}) {
        row.push_back(v);
      }
    } else {
      row.resize(row.size() + kSchoolColumns.size() - 1);
    }
    csv::write_row(out, row);
  }
}

void write_persistence(const Dataset& data, const ClosenessTable& closeness, const MetricsRequest& req,
                       const fs::path& dir, std::ostream& log) {
  PersistenceOptions options;
  options.k = req.k;
  options.directed = req.directed;
  auto evaluated = evaluate_ties(data, closeness, options);
  log << "persistence: " << evaluated.ties << " ties, " << evaluated.evaluations.size() << " evaluations, "
      << evaluated.excluded << " excluded (ego without rankings)\n";

  auto out = open_output(dir / "persistence.csv");
  out << "grouping,key,share_cff,n_ties\n";
  for (auto g : kAllGroupings) {
    for (const auto& cell : share_cff_by(g, data, evaluated.evaluations)) {
      csv::write_row(out, {std::string(to_string(g)), cell.key, num(cell.share_cff), num(cell.n_ties)});
    }
  }
  // formation weeks without the two most recent entry years
  std::set<int> years;
  for (const auto& co : data.cohorts()) years.insert(co.entry_year);
  std::vector<int> recent(years.rbegin(), years.rend());
  recent.resize(std::min<std::size_t>(2, recent.size()));
  std::vector<TieEvaluation> early;
  for (const auto& ev : evaluated.evaluations) {
    const int y = data.cohort(data.cohort_of(ev.ego)).entry_year;
    if (std::find(recent.begin(), recent.end(), y) == recent.end()) early.push_back(ev);
  }
  for (const auto& cell : share_cff_by(Grouping::FormationWeek, data, early)) {
    csv::write_row(out, {"formation_week_early", cell.key, num(cell.share_cff), num(cell.n_ties)});
  }

  // school scatter for one entry year
  int year = 0;
  if (req.scatter_year) {
    year = *req.scatter_year;
  } else {
    std::map<int, std::size_t> counts;
    for (const auto& co : data.cohorts()) ++counts[co.entry_year];
    std::size_t best = 0;
    for (auto [y, n] : counts) {
      if (n >= best) {
        best = n;
        year = y;
      }
    }
  }
  auto scatter = school_scatter(year, data, evaluated.evaluations);
  auto schools = open_output(dir / "persistence_schools.csv");
  schools << "entry_year,school_id,group,members,mean_college_friends,mean_cff,share_cff\n";
  for (const auto& p : scatter.points) {
    std::string group = "unknown";
    if (auto code = data.attributes().schools().find(p.school_id)) {
      if (const auto* cov = data.covariates(static_cast<std::uint32_t>(*code))) group = school_group(*cov);
    }
    csv::write_row(schools, {num(year), p.school_id, group, num(p.members), num(p.mean_college_friends),
                             num(p.mean_cff), num(p.share_cff)});
  }
  auto corr = open_output(dir / "persistence_correlations.csv");
  corr << "entry_year,pair,rho,t,n\n";
  csv::write_row(corr, {num(year), "friends_vs_cff", num(scatter.friends_vs_cff.rho), num(scatter.friends_vs_cff.t),
                        num(scatter.friends_vs_cff.n)});
  csv::write_row(corr, {num(year), "friends_vs_share", num(scatter.friends_vs_share.rho),
                        num(scatter.friends_vs_share.t), num(scatter.friends_vs_share.n)});
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

}  // namespace

std::span<const std::string_view> metric_names() { return kMetricNames; }
std::span<const std::string_view> figure_names() { return kFigureNames; }

std::string school_group(const SchoolCovariates& s) {
  if (s.is_hbcu) return "hbcu";
  if (s.is_womens) return "womens";
  return s.is_private ? "private" : "public";
}

// ---------------------------------------------------------------------------
// Manifest

std::string manifest_json(const MetricsRequest& r, const std::vector<std::string>& outputs) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = "metrics";
  j["inputs"] = {{"edges", path_string(r.inputs.edges)},
                 {"attributes", path_string(r.inputs.attributes)},
                 {"cohorts", path_string(r.inputs.cohorts)},
                 {"schools", path_string(r.inputs.schools)},
                 {"closeness", path_string(r.inputs.closeness)}};
  j["out_dir"] = path_string(r.out_dir);
  j["scope"] = to_string(r.scope);
  j["unit"] = to_string(r.unit);
  j["metrics"] = r.metrics;
  j["seed"] = r.seed;
  j["path_exact_threshold"] = r.path_exact_threshold;
  j["path_sampled_sources"] = r.path_sampled_sources;
  j["homophily_baseline"] = to_string(r.baseline);
  j["k"] = r.k;
  j["directed"] = r.directed;
  j["scatter_year"] = r.scatter_year ? json(*r.scatter_year) : json(nullptr);
  j["cohorts"] = r.cohorts;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

MetricsRequest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing manifest file: " + path.string());
  json j;
  try {
    j = json::parse(in);
    MetricsRequest r;
    const auto& inputs = j.at("inputs");
    r.inputs.edges = inputs.at("edges").get<std::string>();
    r.inputs.attributes = inputs.at("attributes").get<std::string>();
    r.inputs.cohorts = inputs.at("cohorts").get<std::string>();
    r.inputs.schools = inputs.at("schools").get<std::string>();
    r.inputs.closeness = inputs.at("closeness").get<std::string>();
    r.out_dir = j.at("out_dir").get<std::string>();
    r.scope = parse_scope(j.at("scope").get<std::string>());
    r.unit = parse_time_unit(j.at("unit").get<std::string>());
    r.metrics = j.at("metrics").get<std::vector<std::string>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.path_exact_threshold = j.at("path_exact_threshold").get<std::size_t>();
    r.path_sampled_sources = j.at("path_sampled_sources").get<std::size_t>();
    r.baseline = parse_baseline(j.at("homophily_baseline").get<std::string>());
    r.k = j.at("k").get<std::uint32_t>();
    r.directed = j.at("directed").get<bool>();
    if (!j.at("scatter_year").is_null()) r.scatter_year = j.at("scatter_year").get<int>();
    r.cohorts = j.at("cohorts").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

IngestSummary cmd_ingest(const DatasetPaths& paths) {
  auto loaded = load_dataset(paths);
  const auto& d = loaded.data;
  IngestSummary s;
  s.nodes = d.node_count();
  s.edges = d.edges().size();
  s.cohorts = d.cohort_count();
  s.schools = d.school_count();
  s.edge_report = loaded.edge_report;
  if (!paths.closeness.empty() && fs::exists(paths.closeness)) {
    s.closeness_entries = ClosenessTable::read(paths.closeness, d.ids()).size();
  }
  return s;
}

GenerateSummary cmd_generate(const ScenarioConfig& config, const fs::path& out_dir, unsigned threads) {
  auto bundle = generate(config, threads);
  bundle.write(out_dir);
  {
    auto out = open_output(out_dir / "scenario.json");
    out << scenario_to_json(config);
  }
  GenerateSummary s;
  s.nodes = bundle.ids.size();
  s.edges = bundle.edges.size();
  s.cohorts = bundle.cohorts.size();
  s.schools = bundle.schools.size();
  s.closeness_entries = bundle.closeness.size();
  s.dropped_proposals = bundle.dropped_proposals;
  return s;
}

void cmd_metrics(const MetricsRequest& req, unsigned threads, std::ostream& log) {
  const auto sel = select(req.metrics);
  fs::create_directories(req.out_dir);
  std::vector<std::string> outputs;

  if (!sel.names.empty()) {
    auto loaded = load_dataset(req.inputs);
    const auto& data = loaded.data;
    log << "loaded " << data.node_count() << " nodes, " << data.edges().size() << " edges, " << data.cohort_count()
        << " cohorts\n";

    std::vector<std::size_t> cohorts;
    if (req.cohorts.empty()) {
      cohorts.resize(data.cohort_count());
      std::iota(cohorts.begin(), cohorts.end(), std::size_t{0});
    } else {
      for (const auto& key : req.cohorts) cohorts.push_back(data.find_cohort(key));
    }

    write_cohort_covariates(data, cohorts, req.out_dir / "cohort_covariates.csv");
    outputs.push_back("cohort_covariates.csv");

    std::vector<std::ofstream> streams(kCohortFileCount);
    std::vector<std::ofstream*> targets(kCohortFileCount, nullptr);
    for (std::size_t f = 0; f < kCohortFileCount; ++f) {
      if (!sel.has(kCohortFiles[f].metric)) continue;
      streams[f] = open_output(req.out_dir / kCohortFiles[f].file);
      streams[f] << kCohortFiles[f].header << '\n';
      targets[f] = &streams[f];
      outputs.emplace_back(kCohortFiles[f].file);
    }
    if (std::any_of(targets.begin(), targets.end(), [](auto* p) { return p != nullptr; })) {
      OrderedWriter writer(targets, cohorts.size());
      parallel_for(cohorts.size(), threads,
                   [&](std::size_t i) { writer.submit(i, compute_cohort(data, cohorts[i], req, sel)); });
    }
    for (auto& s : streams) {
      if (s.is_open()) {
        s.close();
        if (!s) throw DataError("write failed in " + req.out_dir.string());
      }
    }

    if (sel.has("persistence")) {
      if (req.inputs.closeness.empty() || !fs::exists(req.inputs.closeness)) {
        throw DataError("missing closeness file: " + req.inputs.closeness.string() +
                        " (required by metric 'persistence')");
      }
      auto closeness = ClosenessTable::read(req.inputs.closeness, data.ids());
      write_persistence(data, closeness, req, req.out_dir, log);
      outputs.insert(outputs.end(), {"persistence.csv", "persistence_schools.csv", "persistence_correlations.csv"});
    }
  }
  std::sort(outputs.begin(), outputs.end());
  auto manifest = open_output(req.out_dir / "manifest.json");
  manifest << manifest_json(req, outputs);
  log << "wrote " << outputs.size() << " metric files and manifest.json to " << req.out_dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// Reading outputs back

namespace {

/// Whole-file CSV table keyed by column name.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + std::string(name) + "' missing");
    return static_cast<std::size_t>(it - header.begin());
  }
};

fs::path require(const fs::path& dir, std::string_view file, std::string_view producer) {
  auto p = dir / file;
  if (!fs::exists(p)) {
    throw DataError("missing " + p.string() + "; run `" + std::string(producer) + "` first");
  }
  return p;
}

template <typename RowFn>
void scan(const fs::path& path, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  csv::Reader reader(in, path.string());
  std::vector<std::string> row;
  while (reader.next(row)) fn(reader, row);
}

Table load_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  csv::Reader reader(in, path.string());
  Table t;
  t.header = reader.header();
  std::vector<std::string> row;
  while (reader.next(row)) t.rows.push_back(row);
  return t;
}

std::optional<double> opt_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return csv::parse_double(s);
}

struct CohortMeta {
  std::string key;
  std::string school_id;
  int entry_year = 0;
  std::size_t members = 0;
  std::string group;
  std::optional<SchoolCovariates> covariates;
};

std::vector<CohortMeta> load_cohort_meta(const fs::path& dir) {
  auto t = load_table(require(dir, "cohort_covariates.csv", "metrics"));
  std::vector<CohortMeta> out;
  for (const auto& r : t.rows) {
    CohortMeta m;
    m.key = r[t.col("cohort")];
    m.school_id = r[t.col("school_id")];
    m.entry_year = static_cast<int>(csv::parse_int(r[t.col("entry_year")]));
    m.members = static_cast<std::size_t>(csv::parse_int(r[t.col("members")]));
    m.group = r[t.col("group")];
    if (!r[t.col("is_private")].empty()) {
      SchoolCovariates c;
      c.school_id = m.school_id;
      c.is_private = csv::parse_bool(r[t.col("is_private")]);
      c.is_hbcu = csv::parse_bool(r[t.col("is_hbcu")]);
      c.is_womens = csv::parse_bool(r[t.col("is_womens")]);
      c.is_hispanic_serving = csv::parse_bool(r[t.col("is_hispanic_serving")]);
      c.is_religious = csv::parse_bool(r[t.col("is_religious")]);
      c.is_commuter = csv::parse_bool(r[t.col("is_commuter")]);
      c.greek_rate = csv::parse_double(r[t.col("greek_rate")]);
      c.class_size = csv::parse_int(r[t.col("class_size")]);
      c.grad_rate = csv::parse_double(r[t.col("grad_rate")]);
      m.covariates = c;
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// Running mean of optional values per key.
template <typename Key>
struct Averager {
  std::map<Key, std::pair<double, std::size_t>> cells;
  void add(const Key& k, double v) {
    auto& c = cells[k];
    c.first += v;
    ++c.second;
  }
};

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

// ---------------------------------------------------------------------------
// Regressions

namespace {

struct PreparedModel {
  std::vector<std::string> covariates;
  std::vector<std::string> dropped;
};

/// Drops constant covariates, then covariates that are linear combinations of
/// earlier ones over the observed rows (with an intercept).
PreparedModel prune_covariates(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& names) {
  PreparedModel out;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < names.size(); ++c) {
    bool constant = true;
    for (const auto& r : rows) constant = constant && r[c] == rows.front()[c];
    if (rows.empty() || constant) {
      out.dropped.push_back(names[c]);
    } else {
      keep.push_back(c);
    }
  }
  // greedy: add covariates in order, keep those that raise the rank
  std::vector<std::size_t> accepted;
  for (auto c : keep) {
    auto trial = accepted;
    trial.push_back(c);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(trial.size() + 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x(static_cast<Eigen::Index>(i), 0) = 1.0;
      for (std::size_t j = 0; j < trial.size(); ++j) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = rows[i][trial[j]];
      }
    }
    Eigen::VectorXd norms = x.colwise().norm();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x * norms.cwiseInverse().asDiagonal());
    qr.setThreshold(1e-10);
    if (qr.rank() == x.cols()) {
      accepted = std::move(trial);
    } else {
      out.dropped.push_back(names[c]);
    }
  }
  for (auto c : accepted) out.covariates.push_back(names[c]);
  return out;
}

void write_result(std::ostream& out, const std::string& model, const RegressionResult& r) {
  for (std::size_t i = 0; i < r.terms.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    csv::write_row(out, {model, r.terms[i], num(r.coef[k]), num(r.se[k]), num(r.ci_low[k]), num(r.ci_high[k])});
  }
}

json fit_summary(const RegressionResult& r, ClusterCorrection correction, const std::vector<std::string>& covariates,
                 const std::vector<std::string>& dropped) {
  return {{"r2", r.r2},
          {"n_obs", r.n_obs},
          {"n_clusters", r.n_clusters},
          {"n_terms", r.terms.size()},
          {"correction", correction == ClusterCorrection::CR1 ? "CR1" : "CR0"},
          {"covariates", covariates},
          {"dropped_covariates", dropped}};
}

std::vector<double> covariate_row(const SchoolCovariates& s, const std::vector<std::string>& names) {
  std::vector<double> out;
  for (const auto& n : names) out.push_back(covariate_value(s, n));
  return out;
}

std::vector<double> select_columns(const std::vector<double>& row, const std::vector<std::string>& all,
                                   const std::vector<std::string>& keep) {
  std::vector<double> out;
  for (const auto& k : keep) out.push_back(row[static_cast<std::size_t>(std::find(all.begin(), all.end(), k) - all.begin())]);
  return out;
}

}  // namespace

void cmd_regress(const RegressRequest& req, std::ostream& log) {
  const auto meta = load_cohort_meta(req.out_dir);
  std::map<std::string, const CohortMeta*> by_key;
  std::map<std::string, std::int64_t> school_cluster;
  for (const auto& m : meta) {
    if (!m.covariates) throw DataError("regressions need school covariates; rerun `metrics` with a schools file");
    by_key[m.key] = &m;
    school_cluster.try_emplace(m.school_id, static_cast<std::int64_t>(school_cluster.size()));
  }
  for (const auto& model : req.models) {
    if (model != "homophily" && model != "persistence") {
      throw std::invalid_argument("unknown model '" + model + "' (expected homophily|persistence)");
    }
  }
  auto has = [&](std::string_view m) { return std::find(req.models.begin(), req.models.end(), m) != req.models.end(); };

  if (has("homophily")) {
    const auto path = require(req.out_dir, "homophily.csv", "metrics --metrics homophily");
    std::map<std::string, std::vector<std::tuple<int, double, std::string>>> per_dimension;
    scan(path, [&](const csv::Reader& reader, const std::vector<std::string>& row) {
      const std::size_t c_cohort = reader.column("cohort"), c_dim = reader.column("dimension"),
                               c_mode = reader.column("mode"), c_idx = reader.column("idx"), c_h = reader.column("H"),
                               c_n = reader.column("n_incidences");
      if (row[c_mode] != "new" || row[c_h].empty()) return;
      if (static_cast<std::size_t>(csv::parse_int(row[c_n])) < req.min_incidences) return;
      per_dimension[row[c_dim]].emplace_back(static_cast<int>(csv::parse_int(row[c_idx])), csv::parse_double(row[c_h]),
                                             row[c_cohort]);
    });
    auto out = open_output(req.out_dir / "regression_homophily.csv");
    out << "model,term,estimate,se,ci_low,ci_high\n";
    json fits = json::object();
    for (auto d : kAllDimensions) {
      const std::string dim(to_string(d));
      const std::string model = "homophily_" + dim;
      const auto& obs = per_dimension[dim];
      std::vector<std::vector<double>> cov_rows;
      for (const auto& [idx, h, cohort] : obs) {
        auto it = by_key.find(cohort);
        if (it == by_key.end()) throw DataError("homophily.csv names unknown cohort '" + cohort + "'");
        cov_rows.push_back(covariate_row(*it->second->covariates, req.homophily_covariates));
      }
      auto prepared = prune_covariates(cov_rows, req.homophily_covariates);
      for (const auto& name : prepared.dropped) log << "note: " << model << " drops covariate " << name << "\n";

      std::vector<PanelRow> rows;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& [idx, h, cohort] = obs[i];
        rows.push_back({idx, h, school_cluster.at(by_key.at(cohort)->school_id),
                        select_columns(cov_rows[i], req.homophily_covariates, prepared.covariates)});
      }
      // months whose covariates are degenerate on their own rows are left out
      std::map<int, std::vector<std::vector<double>>> month_rows;
      for (const auto& r : rows) month_rows[r.idx].push_back(r.covariates);
      std::set<int> skip;
      for (const auto& [idx, mrows] : month_rows) {
        if (prune_covariates(mrows, prepared.covariates).dropped.size() > 0) skip.insert(idx);
      }
      std::erase_if(rows, [&](const PanelRow& r) { return skip.count(r.idx) > 0; });
      if (!skip.empty()) log << "note: " << model << " skips " << skip.size() << " months with degenerate covariates\n";

      auto reg = month_interaction_design(rows, prepared.covariates, req.min_rows_per_month);
      if (reg.design.cols() == 0) {
        log << "note: " << model << " has no month with enough observations; skipped\n";
        continue;
      }
      auto result = ols_fit(reg.design, reg.y, req.correction);
      write_result(out, model, result);
      fits[model] = fit_summary(result, req.correction, prepared.covariates, prepared.dropped);
      log << model << ": n_obs=" << result.n_obs << " terms=" << result.terms.size() << " r2=" << num(result.r2) << "\n";
    }
    auto summary = open_output(req.out_dir / "regression_homophily.json");
    summary << fits.dump(2) << "\n";
  }

  if (has("persistence")) {
    const auto path = require(req.out_dir, "persistence.csv", "metrics --metrics persistence");
    std::vector<ClassRow> rows;
    std::vector<std::vector<double>> cov_rows;
    scan(path, [&](const csv::Reader& reader, const std::vector<std::string>& row) {
      const std::size_t c_group = reader.column("grouping"), c_key = reader.column("key"),
                               c_share = reader.column("share_cff");
      if (row[c_group] != "cohort" || row[c_share].empty()) return;
      auto it = by_key.find(row[c_key]);
      if (it == by_key.end()) return;  // cohort outside the metrics selection
      const auto& m = *it->second;
      rows.push_back({csv::parse_double(row[c_share]), school_cluster.at(m.school_id), m.entry_year, {}});
      cov_rows.push_back(covariate_row(*m.covariates, req.persistence_covariates));
    });
    auto prepared = prune_covariates(cov_rows, req.persistence_covariates);
    for (const auto& name : prepared.dropped) log << "note: persistence drops covariate " << name << "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].covariates = select_columns(cov_rows[i], req.persistence_covariates, prepared.covariates);
    }
    auto reg = year_fixed_effects_design(rows, prepared.covariates);
    auto result = ols_fit(reg.design, reg.y, req.correction);
    auto out = open_output(req.out_dir / "regression_persistence.csv");
    out << "model,term,estimate,se,ci_low,ci_high\n";
    write_result(out, "persistence", result);
    auto summary = open_output(req.out_dir / "regression_persistence.json");
    summary << json{{"persistence", fit_summary(result, req.correction, prepared.covariates, prepared.dropped)}}.dump(2)
            << "\n";
    log << "persistence: n_obs=" << result.n_obs << " clusters=" << result.n_clusters << " r2=" << num(result.r2)
        << "\n";
  }
}

// ---------------------------------------------------------------------------
// Figures

namespace {

std::string default_focal(const std::vector<CohortMeta>& meta) {
  if (meta.empty()) throw DataError("no cohorts in cohort_covariates.csv");
  std::map<std::string, std::vector<const CohortMeta*>> by_school;
  std::vector<std::string> order;
  for (const auto& m : meta) {
    if (!by_school.count(m.school_id)) order.push_back(m.school_id);
    by_school[m.school_id].push_back(&m);
  }
  const std::vector<const CohortMeta*>* best = nullptr;
  for (const auto& s : order) {
    if (!best || by_school[s].size() > best->size()) best = &by_school[s];
  }
  auto cohorts = *best;
  std::sort(cohorts.begin(), cohorts.end(), [](auto* a, auto* b) { return a->entry_year < b->entry_year; });
  return cohorts[cohorts.size() / 2]->key;
}

void figure_new_edges(const fs::path& dir, std::ofstream& out, const std::string& unit) {
  out << "panel,series,unit,idx,value,n_cohorts\n";
  Averager<int> edges;
  scan(require(dir, "edge_volume.csv", "metrics --metrics edge_volume"), [&](auto& r, auto& row) {
    const auto c_idx = r.column("idx"), c_v = r.column("value");
    if (auto v = opt_number(row[c_v])) edges.add(static_cast<int>(csv::parse_int(row[c_idx])), *v);
  });
  for (const auto& [idx, c] : edges.cells) {
    csv::write_row(out, {"edges", "", unit, num(idx), num(c.first / c.second), num(c.second)});
  }
  Averager<std::pair<std::string, int>> degree;
  scan(require(dir, "degree_percentiles.csv", "metrics --metrics degree_percentiles"), [&](auto& r, auto& row) {
    const auto c_s = r.column("series"), c_idx = r.column("idx"), c_v = r.column("value");
    if (auto v = opt_number(row[c_v])) degree.add({row[c_s], static_cast<int>(csv::parse_int(row[c_idx]))}, *v);
  });
  for (const auto& [key, c] : degree.cells) {
    csv::write_row(out, {"degree", key.first, unit, num(key.second), num(c.first / c.second), num(c.second)});
  }
  Averager<int> share, triangles;
  scan(require(dir, "triadic_closure.csv", "metrics --metrics triadic_closure"), [&](auto& r, auto& row) {
    const auto c_idx = r.column("idx"), c_s = r.column("share_closing"), c_t = r.column("mean_triangles_closed");
    const int idx = static_cast<int>(csv::parse_int(row[c_idx]));
    if (auto v = opt_number(row[c_s])) share.add(idx, *v);
    if (auto v = opt_number(row[c_t])) triangles.add(idx, *v);
  });
  for (const auto& [idx, c] : share.cells) {
    csv::write_row(out, {"share_closing", "", unit, num(idx), num(c.first / c.second), num(c.second)});
  }
  for (const auto& [idx, c] : triangles.cells) {
    csv::write_row(out, {"mean_triangles_closed", "", unit, num(idx), num(c.first / c.second), num(c.second)});
  }
}

void figure_homophily_average(const fs::path& dir, std::ofstream& out, std::string_view mode) {
  out << "dimension,idx,H,n_cohorts\n";
  Averager<std::pair<int, int>> cells;  // (dimension order, idx)
  scan(require(dir, "homophily.csv", "metrics --metrics homophily"), [&](auto& r, auto& row) {
    const auto c_dim = r.column("dimension"), c_mode = r.column("mode"), c_idx = r.column("idx"),
                      c_h = r.column("H"), c_n = r.column("n_incidences");
    if (row[c_mode] != mode || row[c_h].empty()) return;
    if (static_cast<std::size_t>(csv::parse_int(row[c_n])) < kMinHomophilyIncidences) return;
    const int d = static_cast<int>(parse_dimension(row[c_dim]));
    cells.add({d, static_cast<int>(csv::parse_int(row[c_idx]))}, csv::parse_double(row[c_h]));
  });
  for (const auto& [key, c] : cells.cells) {
    csv::write_row(out, {std::string(to_string(static_cast<Dimension>(key.first))), num(key.second),
                         num(c.first / c.second), num(c.second)});
  }
}

void figure_homo_all(const fs::path& dir, std::ofstream& out) {
  out << "dimension,covariate,idx,estimate,se,ci_low,ci_high\n";
  scan(require(dir, "regression_homophily.csv", "regress --model homophily"), [&](auto& r, auto& row) {
    const auto c_model = r.column("model"), c_term = r.column("term"), c_est = r.column("estimate"),
                      c_se = r.column("se"), c_lo = r.column("ci_low"), c_hi = r.column("ci_high");
    const auto& term = row[c_term];
    auto colon = term.find("]:");
    if (term.rfind("month[", 0) != 0 || colon == std::string::npos) return;
    const auto idx = term.substr(6, colon - 6);
    const auto dim = row[c_model].substr(std::string("homophily_").size());
    csv::write_row(out, {dim, term.substr(colon + 2), idx, row[c_est], row[c_se], row[c_lo], row[c_hi]});
  });
}

void figure_position_time(const fs::path& dir, std::ofstream& out, const std::vector<CohortMeta>& meta) {
  std::map<std::string, std::string> group;
  for (const auto& m : meta) group[m.key] = m.group;
  out << "statistic,group,idx,value,n_cohorts\n";
  const char* stats[] = {"lcc_fraction", "avg_clustering", "modularity", "avg_path"};
  std::array<Averager<std::pair<std::string, int>>, 4> avg;
  scan(require(dir, "structure.csv", "metrics --metrics structure"), [&](auto& r, auto& row) {
    const auto c_cohort = r.column("cohort"), c_idx = r.column("idx");
    const std::array<std::size_t, 4> cols{r.column("lcc_fraction"), r.column("avg_clustering"),
                                                 r.column("modularity"), r.column("avg_path")};
    const auto key = std::make_pair(group[row[c_cohort]], static_cast<int>(csv::parse_int(row[c_idx])));
    for (std::size_t s = 0; s < 4; ++s) {
      if (auto v = opt_number(row[cols[s]])) avg[s].add(key, *v);
    }
  });
  for (std::size_t s = 0; s < 4; ++s) {
    for (const auto& [key, c] : avg[s].cells) {
      csv::write_row(out, {stats[s], key.first, num(key.second), num(c.first / c.second), num(c.second)});
    }
  }
}

void figure_evcent_snapshots(const fs::path& dir, std::ofstream& out, const std::string& focal, std::size_t sample,
                             std::uint64_t seed) {
  constexpr int kCompare[] = {-3, 0, 3, 9};
  constexpr int kReference = 45;
  std::map<std::string, std::map<int, double>> ranks;
  scan(require(dir, "centrality_ranks.csv", "metrics --metrics centrality"), [&](auto& r, auto& row) {
    const auto c_cohort = r.column("cohort"), c_idx = r.column("idx"), c_node = r.column("node"),
                      c_rank = r.column("rank");
    if (row[c_cohort] != focal) return;
    const int idx = static_cast<int>(csv::parse_int(row[c_idx]));
    if (idx != kReference && std::find(std::begin(kCompare), std::end(kCompare), idx) == std::end(kCompare)) return;
    ranks[row[c_node]][idx] = csv::parse_double(row[c_rank]);
  });
  std::vector<std::string> nodes;
  for (const auto& [node, r] : ranks) {
    if (r.count(kReference)) nodes.push_back(node);
  }
  std::vector<std::string> chosen;
  std::mt19937_64 rng(derive_seed(seed, {45}));
  std::sample(nodes.begin(), nodes.end(), std::back_inserter(chosen), sample, rng);
  out << "cohort,node,idx,rank,rank_at_45\n";
  for (int idx : kCompare) {
    for (const auto& node : chosen) {
      const auto& r = ranks[node];
      auto it = r.find(idx);
      csv::write_row(out, {focal, node, num(idx), it == r.end() ? "" : num(it->second), num(r.at(kReference))});
    }
  }
}

}  // namespace

void cmd_figures(const FiguresRequest& req, std::ostream& log) {
  const auto& dir = req.out_dir;
  const auto manifest = load_json(require(dir, "manifest.json", "metrics"));
  const std::string unit = manifest.at("unit").get<std::string>();
  const auto seed = manifest.at("seed").get<std::uint64_t>();
  const auto meta = load_cohort_meta(dir);
  const auto focal = req.focal_cohort ? *req.focal_cohort : default_focal(meta);

  std::vector<std::string> figures(req.figures.begin(), req.figures.end());
  if (figures.empty()) figures.assign(std::begin(kFigureNames), std::end(kFigureNames));
  for (const auto& f : figures) {
    if (std::find(std::begin(kFigureNames), std::end(kFigureNames), f) == std::end(kFigureNames)) {
      std::string valid;
      for (auto n : kFigureNames) valid += (valid.empty() ? "" : "|") + std::string(n);
      throw std::invalid_argument("unknown figure '" + f + "' (valid: " + valid + ")");
    }
  }
  const auto fig_dir = dir / "figures";
  fs::create_directories(fig_dir);

  for (const auto& name : figures) {
    auto out = open_output(fig_dir / (name + ".csv"));
    if (name == "new_edges") {
      figure_new_edges(dir, out, unit);
    } else if (name == "crossyear") {
      out << "cohort,friend_entry_year,idx,edges\n";
      scan(require(dir, "cross_cohort_volume.csv", "metrics --metrics cross_cohort_volume"), [&](auto& r, auto& row) {
        const auto c_cohort = r.column("cohort"), c_s = r.column("series"), c_idx = r.column("idx"),
                          c_v = r.column("value");
        if (row[c_cohort] == focal) csv::write_row(out, {focal, row[c_s], row[c_idx], row[c_v]});
      });
    } else if (name == "homo_avg") {
      figure_homophily_average(dir, out, "new");
    } else if (name == "homo_avg_cum") {
      figure_homophily_average(dir, out, "cumulative");
    } else if (name == "homo_all") {
      figure_homo_all(dir, out);
    } else if (name == "path") {
      out << "cohort,other_cohort,idx,avg_path\n";
      scan(require(dir, "cross_cohort_path.csv", "metrics --metrics cross_cohort_path"), [&](auto& r, auto& row) {
        const auto c_cohort = r.column("cohort"), c_s = r.column("series"), c_idx = r.column("idx"),
                          c_v = r.column("value");
        if (row[c_cohort] == focal) csv::write_row(out, {focal, row[c_s], row[c_idx], row[c_v]});
      });
    } else if (name == "position_time") {
      figure_position_time(dir, out, meta);
    } else if (name == "evcent_snapshots") {
      if (unit != "month") throw DataError("evcent_snapshots needs monthly metrics; rerun `metrics --unit month`");
      figure_evcent_snapshots(dir, out, focal, req.snapshot_sample, seed);
    } else if (name == "evcent_correlation_a") {
      out << "idx_a,idx_b,corr,n_cohorts\n";
      Averager<std::pair<int, int>> avg;
      scan(require(dir, "centrality_correlation.csv", "metrics --metrics centrality"), [&](auto& r, auto& row) {
        const auto c_a = r.column("idx_a"), c_b = r.column("idx_b"), c_c = r.column("corr");
        if (auto v = opt_number(row[c_c])) {
          avg.add({static_cast<int>(csv::parse_int(row[c_a])), static_cast<int>(csv::parse_int(row[c_b]))}, *v);
        }
      });
      for (const auto& [k, c] : avg.cells) {
        csv::write_row(out, {num(k.first), num(k.second), num(c.first / c.second), num(c.second)});
      }
    } else if (name == "evcent_correlation_b") {
      out << "idx,churn,n_cohorts\n";
      Averager<int> avg;
      scan(require(dir, "rank_churn.csv", "metrics --metrics centrality"), [&](auto& r, auto& row) {
        const auto c_idx = r.column("idx"), c_v = r.column("churn");
        if (auto v = opt_number(row[c_v])) avg.add(static_cast<int>(csv::parse_int(row[c_idx])), *v);
      });
      for (const auto& [idx, c] : avg.cells) csv::write_row(out, {num(idx), num(c.first / c.second), num(c.second)});
    } else if (name == "persistence_time" || name == "persistence_time_gender") {
      const bool by_week = name == "persistence_time";
      out << (by_week ? "formation_week,share_cff,n_ties\n" : "entry_year,gender_pair,share_cff,n_ties\n");
      scan(require(dir, "persistence.csv", "metrics --metrics persistence"), [&](auto& r, auto& row) {
        const auto c_g = r.column("grouping"), c_k = r.column("key"), c_s = r.column("share_cff"),
                          c_n = r.column("n_ties");
        if (by_week && row[c_g] == "formation_week_early") {
          csv::write_row(out, {row[c_k], row[c_s], row[c_n]});
        } else if (!by_week && row[c_g] == "entry_year_gender_pair") {
          const auto colon = row[c_k].find(':');
          csv::write_row(out, {row[c_k].substr(0, colon), row[c_k].substr(colon + 1), row[c_s], row[c_n]});
        }
      });
    } else if (name == "persistence_sample") {
      auto t = load_table(require(dir, "persistence_schools.csv", "metrics --metrics persistence"));
      csv::write_row(out, t.header);
      for (const auto& row : t.rows) csv::write_row(out, row);
      auto c = load_table(require(dir, "persistence_correlations.csv", "metrics --metrics persistence"));
      auto companion = open_output(fig_dir / "persistence_sample_correlation.csv");
      csv::write_row(companion, c.header);
      for (const auto& row : c.rows) csv::write_row(companion, row);
    } else if (name == "persistence_coef") {
      out << "model,term,estimate,se,ci_low,ci_high\n";
      scan(require(dir, "regression_persistence.csv", "regress --model persistence"), [&](auto& r, auto& row) {
        const auto c_term = r.column("term");
        if (row[c_term].rfind("year[", 0) == 0 || row[c_term] == "intercept") return;  // fixed effects not shown
        csv::write_row(out, row);
      });
    }
    log << "wrote figures/" << name << ".csv\n";
  }
}

}  // namespace campusnet
