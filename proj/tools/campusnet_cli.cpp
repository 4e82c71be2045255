// campusnet: ingest, generate, metrics, regress and figures over campus
// friendship bundles. Errors end with one JSON line on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "campusnet/parallel.hpp"
#include "campusnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace campusnet;

namespace {

int fail(std::string_view kind, const std::string& message) {
  nlohmann::json j{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << "error: " << j.dump() << std::endl;
  return kind == "usage" ? 2 : 1;
}

struct BundleFlags {
  std::string dir;
  std::string edges, attributes, cohorts, schools, closeness;

  void add(CLI::App* app) {
    app->add_option("--data", dir, "Bundle directory with edges.csv, attributes.csv, cohorts.csv, schools.csv, closeness.csv");
    app->add_option("--edges", edges, "Edge CSV (u,v,t)");
    app->add_option("--attributes", attributes, "Attribute CSV");
    app->add_option("--cohorts", cohorts, "Cohort CSV");
    app->add_option("--schools", schools, "School covariate CSV");
    app->add_option("--closeness", closeness, "Closeness ranking CSV (ego_id,alter_id,rank)");
  }

  DatasetPaths paths() const {
    DatasetPaths p = dir.empty() ? DatasetPaths{} : DatasetPaths::in_directory(dir);
    if (!dir.empty() && !fs::exists(p.schools)) p.schools.clear();
    if (!edges.empty()) p.edges = edges;
    if (!attributes.empty()) p.attributes = attributes;
    if (!cohorts.empty()) p.cohorts = cohorts;
    if (!schools.empty()) p.schools = schools;
    if (!closeness.empty()) p.closeness = closeness;
    if (p.edges.empty() || p.attributes.empty() || p.cohorts.empty()) {
      throw CLI::ValidationError("input", "give --data or all of --edges, --attributes, --cohorts");
    }
    return p;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal analysis of campus friendship networks"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = default_thread_count();
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a bundle and print counts");
  BundleFlags ingest_flags;
  ingest_flags.add(ingest);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic bundle");
  std::string preset, config_path, gen_out;
  std::optional<std::uint64_t> gen_seed;
  bool list_presets = false;
  gen->add_option("--preset", preset, "Scenario preset");
  gen->add_option("--config", config_path, "Scenario JSON file")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--seed", gen_seed, "Override the scenario seed");
  gen->add_flag("--list-presets", list_presets, "Print preset names and exit");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Compute metric CSVs and a manifest");
  BundleFlags metric_flags;
  metric_flags.add(metrics);
  MetricsRequest mreq;
  std::string scope = "cohort", unit = "month", baseline = "counterpart", manifest_path, metric_list;
  bool undirected = false;
  metrics->add_option("--out", mreq.out_dir, "Output directory");
  metrics->add_option("--metrics", metric_list, "Comma-separated metric names (default: all)");
  metrics->add_option("--scope", scope, "cohort|school")->check(CLI::IsMember({"cohort", "school"}));
  metrics->add_option("--unit", unit, "month|week")->check(CLI::IsMember({"month", "week"}));
  metrics->add_option("--seed", mreq.seed, "Seed for sampled paths");
  metrics->add_option("--path-exact-threshold", mreq.path_exact_threshold, "Largest component solved exactly");
  metrics->add_option("--path-sources", mreq.path_sampled_sources, "Sampled BFS sources above the threshold");
  metrics->add_option("--baseline", baseline, "Homophily baseline: counterpart|either")
      ->check(CLI::IsMember({"counterpart", "either"}));
  metrics->add_option("-k,--k", mreq.k, "CFF rank cutoff")->check(CLI::PositiveNumber);
  metrics->add_flag("--undirected", undirected, "Count a tie as CFF if either endpoint ranks the other");
  metrics->add_option("--scatter-year", mreq.scatter_year, "Entry year for the school scatter");
  metrics->add_option("--cohort", mreq.cohorts, "Restrict to cohort keys school:year (repeatable)");
  metrics->add_option("--manifest", manifest_path, "Rerun a manifest.json")->check(CLI::ExistingFile);

  // regress
  auto* regress = app.add_subcommand("regress", "Fit the homophily and persistence regressions");
  RegressRequest rreq;
  bool cr0 = false;
  regress->add_option("--out", rreq.out_dir, "Metrics output directory")->required();
  regress->add_option("--model", rreq.models, "homophily|persistence (repeatable)");
  regress->add_option("--min-incidences", rreq.min_incidences, "Smallest incidence count per cohort-month");
  regress->add_option("--min-rows", rreq.min_rows_per_month, "Smallest row count per month");
  regress->add_flag("--cr0", cr0, "Cluster correction without the small-sample factor");

  // figures
  auto* figures = app.add_subcommand("figures", "Write plot-ready CSVs under <out>/figures");
  FiguresRequest freq;
  figures->add_option("--out", freq.out_dir, "Metrics output directory")->required();
  figures->add_option("--figure", freq.figures, "Figure name (repeatable; default all)");
  figures->add_option("--focal", freq.focal_cohort, "Focal cohort key school:year");
  figures->add_option("--sample", freq.snapshot_sample, "Nodes in evcent_snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*ingest) {
      auto s = cmd_ingest(ingest_flags.paths());
      std::cout << "nodes " << s.nodes << "\nedges " << s.edges << "\ncohorts " << s.cohorts << "\nschools "
                << s.schools << "\nrows " << s.edge_report.rows << "\nself_loops " << s.edge_report.self_loops
                << "\nduplicates " << s.edge_report.duplicates << "\n";
      if (s.closeness_entries) std::cout << "closeness_entries " << *s.closeness_entries << "\n";
    } else if (*gen) {
      if (list_presets) {
        for (const auto& n : scenario_preset_names()) std::cout << n << "\n";
        return 0;
      }
      if (preset.empty() == config_path.empty()) throw CLI::ValidationError("generate", "give one of --preset or --config");
      if (gen_out.empty()) throw CLI::ValidationError("generate", "--out is required");
      auto config = preset.empty() ? load_scenario(config_path) : scenario_preset(preset);
      if (gen_seed) config.seed = *gen_seed;
      auto s = cmd_generate(config, gen_out, threads);
      std::cout << "nodes " << s.nodes << "\nedges " << s.edges << "\ncohorts " << s.cohorts << "\nschools "
                << s.schools << "\ncloseness_entries " << s.closeness_entries << "\ndropped_proposals "
                << s.dropped_proposals << "\n";
    } else if (*metrics) {
      MetricsRequest req;
      if (!manifest_path.empty()) {
        req = read_manifest(manifest_path);
        if (!mreq.out_dir.empty()) req.out_dir = mreq.out_dir;
      } else {
        if (mreq.out_dir.empty()) throw CLI::ValidationError("metrics", "--out is required");
        req = mreq;
        req.inputs = metric_flags.paths();
        req.scope = parse_scope(scope);
        req.unit = parse_time_unit(unit);
        req.baseline = parse_baseline(baseline);
        req.directed = !undirected;
        if (metrics->count("--metrics") == 0) {
          for (auto n : metric_names()) req.metrics.emplace_back(n);
        } else {
          std::stringstream ss(metric_list);
          for (std::string item; std::getline(ss, item, ',');) {
            if (!item.empty()) req.metrics.push_back(item);
          }
        }
        // persistence needs rankings; skip it silently only when defaulted
        if (metrics->count("--metrics") == 0 && !fs::exists(req.inputs.closeness)) {
          std::erase(req.metrics, "persistence");
        }
      }
      cmd_metrics(req, threads, std::cerr);
    } else if (*regress) {
      rreq.correction = cr0 ? ClusterCorrection::CR0 : ClusterCorrection::CR1;
      cmd_regress(rreq, std::cerr);
    } else if (*figures) {
      cmd_figures(freq, std::cerr);
    }
  } catch (const CLI::ValidationError& e) {
    return fail("usage", e.what());
  } catch (const ParseError& e) {
    return fail("parse", e.what());
  } catch (const CollinearityError& e) {
    return fail("collinearity", e.what());
  } catch (const LookupError& e) {
    return fail("lookup", e.what());
  } catch (const DataError& e) {
    return fail("data", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
