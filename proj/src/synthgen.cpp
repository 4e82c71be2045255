#include "campusnet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "campusnet/csv.hpp"
#include "campusnet/date.hpp"
#include "campusnet/inference.hpp"
#include "campusnet/parallel.hpp"
#include "campusnet/random.hpp"

namespace campusnet {

using nlohmann::json;

namespace {

Day calendar_day(int year, int month, int day) { return first_day_of_month(year * 12 + month - 1) + day - 1; }

Day default_reference_date() { return calendar_day(2019, 6, 30); }

constexpr int kFirstMonth = -12;
constexpr int kEndMonth = 60;

}  // namespace

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> school_preset_names() {
  return {"residential-private", "commuter-public", "greek-heavy", "womens", "hbcu-like"};
}

SchoolSpec school_preset(std::string_view name) {
  SchoolSpec s;
  s.preset = std::string(name);
  auto& cov = s.covariates;
  auto& f = s.formation;
  auto& a = s.attributes;
  if (name == "residential-private") {
    cov.is_private = true;
    cov.grad_rate = 0.9;
    cov.greek_rate = 0.1;
    s.cohort_size = 400;
    f.mean_degree = 70;
    f.closure = 0.6;
  } else if (name == "commuter-public") {
    cov.is_commuter = true;
    cov.grad_rate = 0.55;
    cov.greek_rate = 0.05;
    s.cohort_size = 600;
    f.mean_degree = 35;
    f.burst_intensity = 4;
    f.start_of_year = 1.6;
    f.closure = 0.3;
    f.homophily = {0.05, 0.0, 0.05, 0.15};
    f.pre_college_hometown = 0.6;
    a.hometowns = 12;
    a.hometown_skew = 1.2;
  } else if (name == "greek-heavy") {
    cov.is_private = true;
    cov.grad_rate = 0.8;
    cov.greek_rate = 0.45;
    s.cohort_size = 450;
    f.mean_degree = 65;
    f.closure = 0.5;
    f.greek_rush = 0.8;
  } else if (name == "womens") {
    cov.is_private = true;
    cov.is_womens = true;
    cov.grad_rate = 0.85;
    s.cohort_size = 300;
    f.mean_degree = 55;
    f.closure = 0.55;
    a.female_share = 0.97;
  } else if (name == "hbcu-like") {
    cov.is_hbcu = true;
    cov.grad_rate = 0.6;
    cov.greek_rate = 0.2;
    s.cohort_size = 350;
    f.mean_degree = 55;
    f.closure = 0.5;
    f.greek_rush = 0.3;
  } else {
    std::string valid;
    for (const auto& n : school_preset_names()) valid += (valid.empty() ? "" : "|") + n;
    throw std::invalid_argument("unknown school preset '" + std::string(name) + "' (expected " + valid + ")");
  }
  cov.class_size = s.cohort_size;
  return s;
}

std::vector<std::string> scenario_preset_names() {
  auto names = school_preset_names();
  names.insert(names.end(), {"mixed", "null", "persistence-regression"});
  return names;
}

namespace {

ScenarioConfig null_scenario() {
  ScenarioConfig c;
  c.entry_years = {2010, 2011};
  SchoolSpec s;
  s.preset = "null";
  s.cohort_size = 1000;
  s.covariates.class_size = s.cohort_size;
  s.attributes = {0.5, 12, 0.0, 30, 0.0, 0.0};
  auto& f = s.formation;
  f.mean_degree = 120;
  f.pre_college_share = 0.1;
  f.burst_intensity = 1;
  f.start_of_year = f.mid_year = f.summer = f.post_decay = 1;
  f.closure = f.pre_college_closure = 0;
  f.cross_cohort = 0.5;
  f.homophily = {0, 0, 0, 0};
  f.pre_college_hometown = 0;
  f.activity_sigma = 0;
  f.degree_cap = 1000;
  s.entry_years = {};
  c.schools.push_back(s);
  return c;
}

ScenarioConfig persistence_regression_scenario() {
  // 500 schools with seven classes and 681 with six: 7,586 entry classes
  ScenarioConfig c;
  c.seed = 2012;
  c.entry_years = {2007, 2008, 2009, 2010, 2011, 2012};
  c.closeness.gender_bonus = 0;
  c.closeness.male_bonus = 0;
  c.closeness.covariate_effects = {{"is_womens", 0.03}};
  std::mt19937_64 rng(derive_seed(c.seed, {0}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1181; ++i) {
    SchoolSpec s;
    s.preset = "regression";
    auto& cov = s.covariates;
    cov.is_womens = u(rng) < 0.1;
    cov.is_hbcu = !cov.is_womens && u(rng) < 0.06;
    cov.is_private = cov.is_womens || u(rng) < 0.4;
    cov.is_hispanic_serving = u(rng) < 0.1;
    cov.is_religious = cov.is_private && u(rng) < 0.4;
    cov.is_commuter = !cov.is_private && u(rng) < 0.4;
    cov.greek_rate = 0.4 * u(rng);
    cov.grad_rate = 0.4 + 0.55 * u(rng);
    s.cohort_size = 16 + static_cast<int>(u(rng) * 24);
    cov.class_size = s.cohort_size;
    s.cohort_size_jitter = 0.2;
    if (i < 500) s.entry_years = {2006, 2007, 2008, 2009, 2010, 2011, 2012};
    s.attributes.female_share = cov.is_womens ? 0.97 : 0.5;
    auto& f = s.formation;
    f.mean_degree = 10;
    f.degree_cap = 40;
    f.closure = 0.3;
    f.pre_college_closure = 0.05;
    f.cross_cohort = 0.05;
    c.schools.push_back(std::move(s));
  }
  return c;
}

}  // namespace

ScenarioConfig scenario_preset(std::string_view name) {
  if (name == "null") return null_scenario();
  if (name == "persistence-regression") return persistence_regression_scenario();
  ScenarioConfig c;
  if (name == "mixed") {
    for (const auto& n : school_preset_names()) c.schools.push_back(school_preset(n));
    return c;
  }
  for (const auto& n : school_preset_names()) {
    if (n == name) {
      c.schools.assign(2, school_preset(n));
      return c;
    }
  }
  std::string valid;
  for (const auto& n : scenario_preset_names()) valid += (valid.empty() ? "" : "|") + n;
  throw std::invalid_argument("unknown scenario preset '" + std::string(name) + "' (expected " + valid + ")");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

/// Assigns listed keys and rejects any other key of the object.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }

  template <typename T>
  Fields& take(const char* key, T& field) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        it->get_to(field);
      } catch (const json::exception& e) {
        throw std::invalid_argument(where_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw std::invalid_argument(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void merge(const json& j, SchoolCovariates& c, const std::string& where) {
  Fields(j, where)
      .take("school_id", c.school_id)
      .take("is_private", c.is_private)
      .take("is_hbcu", c.is_hbcu)
      .take("is_womens", c.is_womens)
      .take("is_hispanic_serving", c.is_hispanic_serving)
      .take("is_religious", c.is_religious)
      .take("is_commuter", c.is_commuter)
      .take("greek_rate", c.greek_rate)
      .take("class_size", c.class_size)
      .take("grad_rate", c.grad_rate)
      .finish();
}

void merge(const json& j, AttributeModel& a, const std::string& where) {
  Fields(j, where)
      .take("female_share", a.female_share)
      .take("majors", a.majors)
      .take("major_skew", a.major_skew)
      .take("hometowns", a.hometowns)
      .take("hometown_skew", a.hometown_skew)
      .take("unknown_rate", a.unknown_rate)
      .finish();
}

void merge(const json& j, FormationModel& f, const std::string& where) {
  Fields(j, where)
      .take("mean_degree", f.mean_degree)
      .take("pre_college_share", f.pre_college_share)
      .take("burst_intensity", f.burst_intensity)
      .take("first_week_share", f.first_week_share)
      .take("start_of_year", f.start_of_year)
      .take("mid_year", f.mid_year)
      .take("summer", f.summer)
      .take("post_decay", f.post_decay)
      .take("closure", f.closure)
      .take("pre_college_closure", f.pre_college_closure)
      .take("cross_cohort", f.cross_cohort)
      .take("homophily", f.homophily)
      .take("pre_college_hometown", f.pre_college_hometown)
      .take("greek_rush", f.greek_rush)
      .take("activity_sigma", f.activity_sigma)
      .take("degree_cap", f.degree_cap)
      .finish();
}

void merge(const json& j, ClosenessModel& m, const std::string& where) {
  std::string reference;
  Fields(j, where)
      .take("k", m.k)
      .take("base", m.base)
      .take("age_weight", m.age_weight)
      .take("tau_years", m.tau_years)
      .take("gender_bonus", m.gender_bonus)
      .take("male_bonus", m.male_bonus)
      .take("covariate_effects", m.covariate_effects)
      .take("reference_date", reference)
      .finish();
  if (!reference.empty()) m.reference_date = parse_date(reference);
}

json to_json(const SchoolCovariates& c) {
  return {{"school_id", c.school_id},     {"is_private", c.is_private},
          {"is_hbcu", c.is_hbcu},         {"is_womens", c.is_womens},
          {"is_hispanic_serving", c.is_hispanic_serving},
          {"is_religious", c.is_religious}, {"is_commuter", c.is_commuter},
          {"greek_rate", c.greek_rate},   {"class_size", c.class_size},
          {"grad_rate", c.grad_rate}};
}

json to_json(const AttributeModel& a) {
  return {{"female_share", a.female_share}, {"majors", a.majors},       {"major_skew", a.major_skew},
          {"hometowns", a.hometowns},       {"hometown_skew", a.hometown_skew}, {"unknown_rate", a.unknown_rate}};
}

json to_json(const FormationModel& f) {
  return {{"mean_degree", f.mean_degree},
          {"pre_college_share", f.pre_college_share},
          {"burst_intensity", f.burst_intensity},
          {"first_week_share", f.first_week_share},
          {"start_of_year", f.start_of_year},
          {"mid_year", f.mid_year},
          {"summer", f.summer},
          {"post_decay", f.post_decay},
          {"closure", f.closure},
          {"pre_college_closure", f.pre_college_closure},
          {"cross_cohort", f.cross_cohort},
          {"homophily", f.homophily},
          {"pre_college_hometown", f.pre_college_hometown},
          {"greek_rush", f.greek_rush},
          {"activity_sigma", f.activity_sigma},
          {"degree_cap", f.degree_cap}};
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario is not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  if (j.is_object() && j.contains("preset")) c = scenario_preset(j.at("preset").get<std::string>());
  c.closeness.reference_date = c.closeness.reference_date ? c.closeness.reference_date : default_reference_date();

  json schools = json::array();
  json closeness = json::object();
  std::string preset;
  Fields(j, "scenario")
      .take("preset", preset)
      .take("seed", c.seed)
      .take("entry_years", c.entry_years)
      .take("start_month", c.start_month)
      .take("start_day", c.start_day)
      .take("schools", schools)
      .take("closeness", closeness)
      .finish();
  merge(closeness, c.closeness, "scenario.closeness");

  if (!schools.empty()) c.schools.clear();
  for (std::size_t i = 0; i < schools.size(); ++i) {
    const auto where = "scenario.schools[" + std::to_string(i) + "]";
    const auto& entry = schools[i];
    SchoolSpec s;
    std::string name;
    int count = 1;
    json covariates = json::object(), attributes = json::object(), formation = json::object();
    Fields(entry, where)
        .take("preset", name)
        .take("count", count)
        .take("cohort_size", s.cohort_size)
        .take("cohort_size_jitter", s.cohort_size_jitter)
        .take("entry_years", s.entry_years)
        .take("covariates", covariates)
        .take("attributes", attributes)
        .take("formation", formation)
        .finish();
    if (!name.empty()) {
      s = school_preset(name);
      Fields(entry, where)
          .take("cohort_size", s.cohort_size)
          .take("cohort_size_jitter", s.cohort_size_jitter)
          .take("entry_years", s.entry_years);
      s.covariates.class_size = s.cohort_size;
    }
    merge(covariates, s.covariates, where + ".covariates");
    merge(attributes, s.attributes, where + ".attributes");
    merge(formation, s.formation, where + ".formation");
    if (count < 1) throw std::invalid_argument(where + ".count must be at least 1");
    if (count > 1 && !s.covariates.school_id.empty()) {
      throw std::invalid_argument(where + ": school_id cannot be shared by " + std::to_string(count) + " schools");
    }
    for (int k = 0; k < count; ++k) c.schools.push_back(s);
  }
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing scenario file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json schools = json::array();
  for (const auto& s : c.schools) {
    schools.push_back({{"cohort_size", s.cohort_size},
                       {"cohort_size_jitter", s.cohort_size_jitter},
                       {"entry_years", s.entry_years},
                       {"covariates", to_json(s.covariates)},
                       {"attributes", to_json(s.attributes)},
                       {"formation", to_json(s.formation)}});
  }
  const auto& m = c.closeness;
  json closeness = {{"k", m.k},
                    {"base", m.base},
                    {"age_weight", m.age_weight},
                    {"tau_years", m.tau_years},
                    {"gender_bonus", m.gender_bonus},
                    {"male_bonus", m.male_bonus},
                    {"covariate_effects", m.covariate_effects},
                    {"reference_date", format_date(m.reference_date ? m.reference_date : default_reference_date())}};
  json j = {{"seed", c.seed},         {"entry_years", c.entry_years}, {"start_month", c.start_month},
            {"start_day", c.start_day}, {"closeness", closeness},     {"schools", schools}};
  return j.dump(2) + "\n";
}

void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid scenario: " + what); };
  if (c.start_month < 1 || c.start_month > 12) fail("start_month must be 1-12");
  if (c.start_day < 1 || c.start_day > 28) fail("start_day must be 1-28");
  if (c.closeness.k < 1) fail("closeness.k must be at least 1");
  if (c.closeness.tau_years <= 0) fail("closeness.tau_years must be positive");
  for (const auto& [name, effect] : c.closeness.covariate_effects) covariate_value(SchoolCovariates{}, name);
  for (std::size_t i = 0; i < c.schools.size(); ++i) {
    const auto& s = c.schools[i];
    const auto where = "school " + std::to_string(i) + ": ";
    const auto& years = s.entry_years.empty() ? c.entry_years : s.entry_years;
    if (years.empty()) fail(where + "no entry years");
    if (std::set<int>(years.begin(), years.end()).size() != years.size()) fail(where + "repeated entry year");
    if (s.cohort_size < 2) fail(where + "cohort_size must be at least 2");
    if (s.cohort_size_jitter < 0 || s.cohort_size_jitter >= 1) fail(where + "cohort_size_jitter must be in [0, 1)");
    const auto& a = s.attributes;
    if (a.female_share < 0 || a.female_share > 1) fail(where + "female_share must be in [0, 1]");
    if (a.majors < 1 || a.hometowns < 1) fail(where + "majors and hometowns must be at least 1");
    if (a.major_skew < 0 || a.hometown_skew < 0) fail(where + "skews must be non-negative");
    if (a.unknown_rate < 0 || a.unknown_rate > 1) fail(where + "unknown_rate must be in [0, 1]");
    const auto& f = s.formation;
    const double weights[] = {f.mean_degree,  f.pre_college_share, f.burst_intensity,     f.first_week_share,
                              f.start_of_year, f.mid_year,         f.summer,              f.post_decay,
                              f.closure,       f.pre_college_closure, f.cross_cohort,     f.pre_college_hometown,
                              f.greek_rush,    f.activity_sigma,   f.homophily[0],        f.homophily[1],
                              f.homophily[2],  f.homophily[3]};
    for (double w : weights) {
      if (!(w >= 0) || !std::isfinite(w)) fail(where + "formation weights must be finite and non-negative");
    }
    if (f.pre_college_share >= 1 || f.first_week_share > 1) fail(where + "shares must be below 1");
    if (f.degree_cap < 1) fail(where + "degree_cap must be at least 1");
    const double smallest = std::floor(s.cohort_size * (1.0 - s.cohort_size_jitter));
    if (f.mean_degree > f.degree_cap) fail(where + "mean_degree exceeds degree_cap");
    if (f.mean_degree > smallest - 1) {
      fail(where + "infeasible: " + std::to_string(f.mean_degree * smallest / 2) +
           " expected ties exceed the pairs of a cohort of " + std::to_string(static_cast<long>(smallest)));
    }
  }
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct LocalNode {
  std::string name;
  std::uint32_t cohort = 0;
  bool female = false;
  std::int32_t major = kUnknown;
  std::int32_t hometown = kUnknown;
};

struct LocalEdge3 {
  std::uint32_t u, v;
  Day t;
};

struct SchoolOutput {
  SchoolCovariates covariates;
  std::vector<int> years;
  std::vector<Day> starts;
  std::vector<std::uint32_t> cohort_offset;  // first local node of each cohort, plus total
  std::vector<LocalNode> nodes;
  std::vector<LocalEdge3> edges;
  std::vector<ClosenessTable::Entry> closeness;  // local ids
  std::size_t dropped = 0;
};

std::vector<double> zipf_weights(int n, double skew) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 1.0 / std::pow(i + 1.0, skew);
  return w;
}

double month_weight(const FormationModel& f, int r) {
  if (r < 0) return r + 13.0;  // ramp toward the start date
  double w = 1.0;
  const int phase = r % 12;
  if (r == 0) {
    w = f.burst_intensity;
  } else if (phase == 0) {
    w = f.start_of_year;
  } else if (phase == 4) {
    w = f.mid_year;
  } else if (phase >= 9) {
    w = f.summer;
  }
  if (r >= 48) w *= f.post_decay;
  return w;
}

struct Slot {
  Day t;
  std::uint32_t cohort;
  int r;
};

class SchoolGenerator {
 public:
  SchoolGenerator(const ScenarioConfig& config, const SchoolSpec& spec, std::size_t index)
      : config_(config), spec_(spec), index_(index), rng_(derive_seed(config.seed, {static_cast<std::int64_t>(index)})) {}

  SchoolOutput run() {
    make_nodes();
    schedule();
    for (const auto& slot : slots_) place_edge(slot);
    make_closeness();
    return std::move(out_);
  }

 private:
  void make_nodes() {
    auto& cov = out_.covariates = spec_.covariates;
    if (cov.school_id.empty()) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "s%04zu", index_);
      cov.school_id = buf;
    }
    if (cov.class_size <= 1) cov.class_size = spec_.cohort_size;
    out_.years = spec_.entry_years.empty() ? config_.entry_years : spec_.entry_years;
    std::sort(out_.years.begin(), out_.years.end());

    const auto& a = spec_.attributes;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto majors = zipf_weights(a.majors, a.major_skew);
    auto towns = zipf_weights(a.hometowns, a.hometown_skew);
    std::discrete_distribution<std::int32_t> major_draw(majors.begin(), majors.end());
    std::discrete_distribution<std::int32_t> town_draw(towns.begin(), towns.end());
    std::lognormal_distribution<double> activity_draw(-0.5 * spec_.formation.activity_sigma * spec_.formation.activity_sigma,
                                                      spec_.formation.activity_sigma);

    for (std::uint32_t c = 0; c < out_.years.size(); ++c) {
      const int year = out_.years[c];
      out_.starts.push_back(calendar_day(year, config_.start_month, config_.start_day));
      int size = spec_.cohort_size;
      if (spec_.cohort_size_jitter > 0) {
        size = static_cast<int>(std::lround(size * (1.0 + spec_.cohort_size_jitter * (2.0 * unit(rng_) - 1.0))));
        size = std::max(size, 2);
      }
      out_.cohort_offset.push_back(static_cast<std::uint32_t>(out_.nodes.size()));
      for (int k = 0; k < size; ++k) {
        LocalNode n;
        char buf[48];
        std::snprintf(buf, sizeof buf, "%s-%d-%04d", out_.covariates.school_id.c_str(), year, k);
        n.name = buf;
        n.cohort = c;
        n.female = unit(rng_) < a.female_share;
        n.major = unit(rng_) < a.unknown_rate ? kUnknown : major_draw(rng_);
        n.hometown = unit(rng_) < a.unknown_rate ? kUnknown : town_draw(rng_);
        out_.nodes.push_back(n);
        activity_.push_back(spec_.formation.activity_sigma > 0 ? activity_draw(rng_) : 1.0);
      }
    }
    out_.cohort_offset.push_back(static_cast<std::uint32_t>(out_.nodes.size()));
    friends_.resize(out_.nodes.size());

    for (std::uint32_t c = 0; c + 1 < out_.cohort_offset.size(); ++c) {
      auto first = activity_.begin() + out_.cohort_offset[c];
      auto last = activity_.begin() + out_.cohort_offset[c + 1];
      pickers_.emplace_back(first, last);
      std::array<std::vector<std::vector<std::uint32_t>>, 4> buckets;
      buckets[0].resize(2);
      buckets[2].resize(static_cast<std::size_t>(a.majors));
      buckets[3].resize(static_cast<std::size_t>(a.hometowns));
      for (auto n = out_.cohort_offset[c]; n < out_.cohort_offset[c + 1]; ++n) {
        buckets[0][out_.nodes[n].female].push_back(n);
        if (out_.nodes[n].major != kUnknown) buckets[2][static_cast<std::size_t>(out_.nodes[n].major)].push_back(n);
        if (out_.nodes[n].hometown != kUnknown) {
          buckets[3][static_cast<std::size_t>(out_.nodes[n].hometown)].push_back(n);
        }
      }
      buckets_.push_back(std::move(buckets));
    }
  }

  void schedule() {
    const auto& f = spec_.formation;
    double post_total = 0, pre_total = 0;
    for (int r = kFirstMonth; r < kEndMonth; ++r) (r < 0 ? pre_total : post_total) += month_weight(f, r);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint32_t c = 0; c < out_.years.size(); ++c) {
      const double size = out_.cohort_offset[c + 1] - out_.cohort_offset[c];
      const double ties = f.mean_degree * size / 2.0;
      const Day start = out_.starts[c];
      const int start_month = month_ordinal(start);
      for (int r = kFirstMonth; r < kEndMonth; ++r) {
        const double share = r < 0 ? f.pre_college_share * month_weight(f, r) / pre_total
                                   : (1.0 - f.pre_college_share) * month_weight(f, r) / post_total;
        const double mean = ties * share;
        if (mean <= 0) continue;
        const auto count = std::poisson_distribution<long>(mean)(rng_);
        const Day begin = first_day_of_month(start_month + r);
        const Day end = first_day_of_month(start_month + r + 1);
        for (long k = 0; k < count; ++k) {
          Day t;
          if (r == 0 && unit(rng_) < f.first_week_share) {
            t = start + static_cast<Day>(unit(rng_) * std::min<Day>(7, end - start));
          } else {
            t = begin + static_cast<Day>(unit(rng_) * (end - begin));
          }
          slots_.push_back({t, c, r});
        }
      }
    }
    std::stable_sort(slots_.begin(), slots_.end(), [](const Slot& a, const Slot& b) { return a.t < b.t; });
  }

  bool adjacent(std::uint32_t u, std::uint32_t v) const {
    const auto& a = friends_[u].size() <= friends_[v].size() ? friends_[u] : friends_[v];
    const auto other = friends_[u].size() <= friends_[v].size() ? v : u;
    return std::find(a.begin(), a.end(), other) != a.end();
  }

  std::uint32_t pick_in_cohort(std::uint32_t c) { return out_.cohort_offset[c] + pickers_[c](rng_); }

  std::optional<std::uint32_t> propose(std::uint32_t u, const Slot& slot) {
    const auto& f = spec_.formation;
    const int r = slot.r;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::array<double, 4> h = f.homophily;
    h[1] = 0;  // entry-year matching is the cohort structure itself
    if (r < 0) h[3] = f.pre_college_hometown;
    if (r == 0 || r == 1 || r == 12 || r == 13) h[0] += f.greek_rush * spec_.covariates.greek_rate;
    const double closure = r < 0 ? f.pre_college_closure : f.closure;
    double total = closure + f.cross_cohort + h[0] + h[2] + h[3];
    const double norm = std::max(1.0, total);

    double x = unit(rng_) * norm;
    if ((x -= closure) < 0) {
      const auto& fu = friends_[u];
      if (fu.empty()) return pick_in_cohort(slot.cohort);
      auto w = fu[std::uniform_int_distribution<std::size_t>(0, fu.size() - 1)(rng_)];
      const auto& fw = friends_[w];
      return fw[std::uniform_int_distribution<std::size_t>(0, fw.size() - 1)(rng_)];
    }
    if ((x -= f.cross_cohort) < 0) {
      // another cohort whose window has opened
      std::vector<std::uint32_t> open;
      double weight = 0;
      for (std::uint32_t c = 0; c < out_.years.size(); ++c) {
        if (c == slot.cohort) continue;
        if (slot.t < first_day_of_month(month_ordinal(out_.starts[c]) + kFirstMonth)) continue;
        open.push_back(c);
        weight += out_.cohort_offset[c + 1] - out_.cohort_offset[c];
      }
      if (open.empty()) return pick_in_cohort(slot.cohort);
      double y = unit(rng_) * weight;
      for (auto c : open) {
        y -= out_.cohort_offset[c + 1] - out_.cohort_offset[c];
        if (y < 0) return pick_in_cohort(c);
      }
      return pick_in_cohort(open.back());
    }
    for (int d : {0, 2, 3}) {
      if ((x -= h[static_cast<std::size_t>(d)]) < 0) {
        const auto& node = out_.nodes[u];
        std::int32_t value = d == 0 ? node.female : d == 2 ? node.major : node.hometown;
        if (value == kUnknown) return pick_in_cohort(slot.cohort);
        const auto& bucket = buckets_[slot.cohort][static_cast<std::size_t>(d)][static_cast<std::size_t>(value)];
        return bucket[std::uniform_int_distribution<std::size_t>(0, bucket.size() - 1)(rng_)];
      }
    }
    return pick_in_cohort(slot.cohort);
  }

  void place_edge(const Slot& slot) {
    constexpr int kAttempts = 30;
    const auto cap = static_cast<std::size_t>(spec_.formation.degree_cap);
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const auto u = pick_in_cohort(slot.cohort);
      if (friends_[u].size() >= cap) continue;
      auto v = propose(u, slot);
      if (!v || *v == u || friends_[*v].size() >= cap || adjacent(u, *v)) continue;
      friends_[u].push_back(*v);
      friends_[*v].push_back(u);
      out_.edges.push_back({std::min(u, *v), std::max(u, *v), slot.t});
      return;
    }
    ++out_.dropped;
  }

  void make_closeness() {
    const auto& m = config_.closeness;
    const Day reference = m.reference_date ? m.reference_date : default_reference_date();
    double school_effect = 0;
    for (const auto& [name, effect] : m.covariate_effects) school_effect += effect * covariate_value(out_.covariates, name);

    std::vector<std::vector<std::pair<std::uint32_t, Day>>> ties(out_.nodes.size());
    for (const auto& e : out_.edges) {
      ties[e.u].emplace_back(e.v, e.t);
      ties[e.v].emplace_back(e.u, e.t);
    }
    std::mt19937_64 rng(derive_seed(config_.seed, {static_cast<std::int64_t>(index_), 1}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<double, std::uint32_t>> close, far;
    std::vector<std::uint32_t> slots(m.k);
    for (std::uint32_t ego = 0; ego < ties.size(); ++ego) {
      close.clear();
      far.clear();
      for (auto [alter, t] : ties[ego]) {
        const double age = std::max(0.0, years_between(t, reference));
        double s = m.base + m.age_weight * std::exp(-age / m.tau_years) + school_effect;
        const auto& a = out_.nodes[ego];
        const auto& b = out_.nodes[alter];
        if (a.female == b.female) s += m.gender_bonus + (a.female ? 0.0 : m.male_bonus);
        (unit(rng) < s ? close : far).emplace_back(s, alter);
      }
      // CFF alters take random distinct ranks in 1..K; the rest rank below K
      std::stable_sort(close.begin(), close.end(), [](auto& x, auto& y) { return x.first > y.first; });
      if (close.size() > m.k) {
        far.insert(far.end(), close.begin() + m.k, close.end());
        close.resize(m.k);
      }
      std::iota(slots.begin(), slots.end(), 1u);
      for (std::size_t i = 0; i < close.size(); ++i) {
        std::swap(slots[i], slots[i + std::uniform_int_distribution<std::size_t>(0, m.k - 1 - i)(rng)]);
        out_.closeness.push_back({ego, close[i].second, slots[i]});
      }
      std::shuffle(far.begin(), far.end(), rng);
      for (std::size_t i = 0; i < far.size(); ++i) {
        out_.closeness.push_back({ego, far[i].second, m.k + 1 + static_cast<std::uint32_t>(i)});
      }
    }
  }

  const ScenarioConfig& config_;
  const SchoolSpec& spec_;
  std::size_t index_;
  std::mt19937_64 rng_;
  SchoolOutput out_;
  std::vector<double> activity_;
  std::vector<std::discrete_distribution<std::uint32_t>> pickers_;
  std::vector<std::array<std::vector<std::vector<std::uint32_t>>, 4>> buckets_;
  std::vector<std::vector<std::uint32_t>> friends_;
  std::vector<Slot> slots_;
};

}  // namespace

SyntheticBundle generate(const ScenarioConfig& config, unsigned threads) {
  validate(config);
  if (config.schools.empty()) throw std::invalid_argument("invalid scenario: no schools");
  std::vector<SchoolOutput> parts(config.schools.size());
  parallel_for(parts.size(), threads, [&](std::size_t i) { parts[i] = SchoolGenerator(config, config.schools[i], i).run(); });

  SyntheticBundle b;
  std::set<std::string> school_ids;
  for (auto& part : parts) {
    if (!school_ids.insert(part.covariates.school_id).second) {
      throw std::invalid_argument("invalid scenario: duplicate school_id '" + part.covariates.school_id + "'");
    }
    const auto offset = static_cast<NodeId>(b.ids.size());
    for (const auto& n : part.nodes) {
      const auto id = b.ids.intern(n.name);
      const std::string major = n.major == kUnknown ? "NA" : "m" + std::to_string(n.major);
      const std::string town = n.hometown == kUnknown ? "NA" : "h" + std::to_string(n.hometown);
      b.attributes.append(id, part.covariates.school_id, part.years[n.cohort], n.female ? "F" : "M", major, town);
    }
    for (const auto& e : part.edges) b.edges.push_back({e.u + offset, e.v + offset, e.t});
    for (const auto& c : part.closeness) b.closeness.push_back({c.ego + offset, c.alter + offset, c.rank});
    for (std::size_t c = 0; c < part.years.size(); ++c) {
      b.cohorts.push_back({part.covariates.school_id, part.years[c], part.starts[c]});
    }
    b.schools.push_back(part.covariates);
    b.dropped_proposals += part.dropped;
    std::vector<LocalEdge3>().swap(part.edges);
    std::vector<ClosenessTable::Entry>().swap(part.closeness);
  }
  std::sort(b.edges.begin(), b.edges.end(), [](const EdgeEvent& x, const EdgeEvent& y) {
    return std::tie(x.t, x.u, x.v) < std::tie(y.t, y.u, y.v);
  });
  return b;
}

Dataset SyntheticBundle::to_dataset() const {
  return Dataset(ids, attributes, TemporalEdgeList::from_events(edges), cohorts, schools);
}

ClosenessTable SyntheticBundle::closeness_table() const { return ClosenessTable::from_entries(ids.size(), closeness); }

void SyntheticBundle::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto paths = DatasetPaths::in_directory(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.edges);
    out << "src_id,dst_id,date\n";
    for (const auto& e : edges) {
      out << ids.external(e.u) << ',' << ids.external(e.v) << ',' << format_date(e.t) << '\n';
    }
  }
  {
    auto out = open(paths.attributes);
    out << "node_id,school_id,entry_year,gender,major,hometown\n";
    for (NodeId n = 0; n < attributes.size(); ++n) {
      const auto& row = attributes[n];
      csv::write_row(out, {ids.external(n), attributes.schools().label(static_cast<std::int32_t>(row.school)),
                           std::to_string(row.entry_year),
                           attributes.feature_label(Dimension::Gender, row.features[0]),
                           attributes.feature_label(Dimension::Major, row.features[2]),
                           attributes.feature_label(Dimension::Hometown, row.features[3])});
    }
  }
  {
    auto out = open(paths.cohorts);
    out << "school_id,entry_year,start_date\n";
    for (const auto& c : cohorts) out << c.school_id << ',' << c.entry_year << ',' << format_date(c.start_date) << '\n';
  }
  {
    auto out = open(paths.schools);
    write_school_covariates(out, schools);
  }
  {
    auto out = open(paths.closeness);
    closeness_table().write(out, ids);
  }
}

}  // namespace campusnet
