#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "campusnet/persistence.hpp"
#include "campusnet/temporal_graph.hpp"

namespace campusnet {

/// Attribute draws for one school. Categories are "m0".., "h0".. with
/// Zipf(skew) weights; skew 0 gives uniform draws.
struct AttributeModel {
  double female_share = 0.5;
  int majors = 12;
  double major_skew = 0.5;
  int hometowns = 30;
  double hometown_skew = 1.0;
  double unknown_rate = 0.0;  // chance that major or hometown is unknown
};

/// Edge formation for each cohort over its [-12, 60) month window.
struct FormationModel {
  double mean_degree = 60;           // ties initiated per member, times two
  double pre_college_share = 0.04;   // share of ties dated before month 0
  double burst_intensity = 10;       // month-0 rate over the baseline month
  double first_week_share = 0.5;     // share of month-0 ties in the first 7 days
  double start_of_year = 2.5;        // months 12, 24, 36, 48
  double mid_year = 1.4;             // months 4, 16, ...
  double summer = 0.35;              // months 9-11, 21-23, ...
  double post_decay = 0.3;           // months >= 48
  double closure = 0.5;              // friend-of-friend proposal share
  double pre_college_closure = 0.1;  // its value before month 0
  double cross_cohort = 0.1;         // partner from another cohort of the school
  std::array<double, 4> homophily{0.05, 0.0, 0.08, 0.03};  // feature-matched shares per Dimension
  double pre_college_hometown = 0.15;  // hometown-matched share before month 0
  double greek_rush = 0.0;           // gender-matched share in months 0, 1, 12, 13 per unit greek_rate
  double activity_sigma = 0.5;       // lognormal sd of per-member activity
  int degree_cap = 150;
};

/// Latent closeness s = base + age_weight * exp(-age / tau) + gender terms +
/// sum of covariate effects; a tie is a CFF when a uniform draw is below s.
struct ClosenessModel {
  std::uint32_t k = kDefaultCffCutoff;
  double base = 0.3;
  double age_weight = 0.6;
  double tau_years = 4.0;
  double gender_bonus = 0.08;  // same gender
  double male_bonus = 0.04;    // extra for male-male
  std::map<std::string, double> covariate_effects;
  Day reference_date = 0;      // defaults to 2019-06-30
};

struct SchoolSpec {
  std::string preset;
  SchoolCovariates covariates;
  int cohort_size = 400;
  double cohort_size_jitter = 0.0;  // uniform +/- share per cohort
  std::vector<int> entry_years;     // empty: the scenario's list
  AttributeModel attributes;
  FormationModel formation;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::vector<int> entry_years{2008, 2009, 2010, 2011};
  int start_month = 9;
  int start_day = 1;
  std::vector<SchoolSpec> schools;
  ClosenessModel closeness;
};

/// School templates: residential-private, commuter-public, greek-heavy,
/// womens, hbcu-like.
std::vector<std::string> school_preset_names();
SchoolSpec school_preset(std::string_view name);

/// Named scenarios: one per school template (two schools each), "mixed"
/// (one school per template), "null" (uniform ties, i.i.d. features) and
/// "persistence-regression" (7,586 small classes with a +0.03 womens effect).
std::vector<std::string> scenario_preset_names();
ScenarioConfig scenario_preset(std::string_view name);

/// Parses a JSON scenario. Each school entry may name a "preset" and a
/// "count" and override any field; unknown keys are errors.
ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioConfig& config);

/// Throws std::invalid_argument for negative weights or infeasible sizes.
void validate(const ScenarioConfig& config);

struct SyntheticBundle {
  IdMap ids;
  AttributeTable attributes;
  std::vector<EdgeEvent> edges;  // canonical (t, u, v) order
  std::vector<CohortRecord> cohorts;
  std::vector<SchoolCovariates> schools;
  std::vector<ClosenessTable::Entry> closeness;
  std::size_t dropped_proposals = 0;  // edges abandoned after repeated rejection

  Dataset to_dataset() const;
  ClosenessTable closeness_table() const;
  /// Writes edges, attributes, cohorts, schools and closeness CSVs.
  void write(const std::filesystem::path& dir) const;
};

/// Bit-identical output for a fixed config regardless of `threads`.
SyntheticBundle generate(const ScenarioConfig& config, unsigned threads = 1);

}  // namespace campusnet
