#include "branchsim/config.hpp"

#include <fstream>

namespace branchsim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const char* where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError(std::string("config: unknown key '") + key + "' in " +
                        where);
  }
}

const json& require(const json& obj, const char* where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw ConfigError(std::string("config: missing key '") + key + "' in " +
                      where);
  return *it;
}

LifetimeLaw parse_lifetime(const json& j) {
  if (!j.is_object()) throw ConfigError("config: lifetime must be an object");
  const std::string kind = require(j, "lifetime", "kind").get<std::string>();
  if (kind == "pareto_tail") {
    reject_unknown_keys(j, "lifetime", {"kind", "gamma", "x_min"});
    return LifetimeLaw::pareto_tail(require(j, "lifetime", "gamma").get<double>(),
                                    j.value("x_min", 1.0));
  }
  if (kind == "light_pareto") {
    reject_unknown_keys(j, "lifetime", {"kind", "eta", "A", "x_min"});
    return LifetimeLaw::light_pareto(require(j, "lifetime", "eta").get<double>(),
                                     j.value("A", 1.0), j.value("x_min", 1.0));
  }
  if (kind == "exponential") {
    reject_unknown_keys(j, "lifetime", {"kind", "rate"});
    return LifetimeLaw::exponential(require(j, "lifetime", "rate").get<double>());
  }
  if (kind == "weibull") {
    reject_unknown_keys(j, "lifetime", {"kind", "shape", "scale"});
    return LifetimeLaw::weibull(require(j, "lifetime", "shape").get<double>(),
                                require(j, "lifetime", "scale").get<double>());
  }
  throw ConfigError("config: unknown lifetime kind '" + kind + "'");
}

json serialize_lifetime(const LifetimeLaw& law) {
  switch (law.kind()) {
    case LifetimeKind::ParetoTail:
      return {{"kind", "pareto_tail"},
              {"gamma", law.gamma()},
              {"x_min", law.x_min()}};
    case LifetimeKind::LightPareto:
      return {{"kind", "light_pareto"},
              {"eta", law.eta()},
              {"A", law.tail_constant()},
              {"x_min", law.x_min()}};
    case LifetimeKind::Exponential:
      return {{"kind", "exponential"}, {"rate", law.rate()}};
    case LifetimeKind::Weibull:
      return {{"kind", "weibull"},
              {"shape", law.shape()},
              {"scale", law.scale()}};
  }
  throw ConfigError("config: unreachable lifetime kind");
}

OffspringLaw parse_offspring(const json& j, std::size_t K) {
  if (!j.is_object()) throw ConfigError("config: offspring must be an object");
  const std::string kind = require(j, "offspring", "kind").get<std::string>();
  if (kind == "factorized") {
    reject_unknown_keys(j, "offspring", {"kind", "beta", "c", "type_row"});
    return OffspringLaw::factorized(
        require(j, "offspring", "beta").get<double>(),
        require(j, "offspring", "c").get<double>(),
        require(j, "offspring", "type_row").get<std::vector<double>>());
  }
  if (kind == "explicit") {
    reject_unknown_keys(j, "offspring", {"kind", "table"});
    std::map<std::vector<std::uint32_t>, double> table;
    for (const auto& row : require(j, "offspring", "table")) {
      reject_unknown_keys(row, "offspring table row", {"counts", "p"});
      table[require(row, "table row", "counts")
                .get<std::vector<std::uint32_t>>()] =
          require(row, "table row", "p").get<double>();
    }
    return OffspringLaw::explicit_table(K, std::move(table));
  }
  throw ConfigError("config: unknown offspring kind '" + kind + "'");
}

json serialize_offspring(const OffspringLaw& law) {
  if (law.kind() == OffspringKind::Factorized)
    return {{"kind", "factorized"},
            {"beta", law.beta()},
            {"c", law.c()},
            {"type_row", law.type_row()}};
  json table = json::array();
  for (std::size_t k = 0; k < law.table_probs().size(); ++k)
    table.push_back(
        {{"counts", law.table_counts()[k]}, {"p", law.table_probs()[k]}});
  return {{"kind", "explicit"}, {"table", std::move(table)}};
}

ModelSpec parse_model(const json& j) {
  if (!j.is_object()) throw ConfigError("config: model must be an object");
  reject_unknown_keys(j, "model",
                      {"K", "d", "alphas", "lifetimes", "offspring",
                       "intensities"});
  const auto K = require(j, "model", "K").get<std::size_t>();
  const auto d = require(j, "model", "d").get<std::size_t>();
  const auto alphas = require(j, "model", "alphas").get<std::vector<double>>();
  std::vector<LifetimeLaw> lifetimes;
  for (const auto& item : require(j, "model", "lifetimes"))
    lifetimes.push_back(parse_lifetime(item));
  OffspringSet offspring;
  for (const auto& item : require(j, "model", "offspring"))
    offspring.push_back(parse_offspring(item, K));
  const auto intensities =
      require(j, "model", "intensities").get<std::vector<double>>();
  try {
    return ModelSpec::create(K, d, alphas, std::move(lifetimes),
                             std::move(offspring), intensities);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid model: ") + e.what());
  }
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::FiniteMean: return "FiniteMean";
    case Scenario::CaseA: return "CaseA";
    case Scenario::CaseB1: return "CaseB1";
    case Scenario::CaseB2: return "CaseB2";
    case Scenario::RenewalOnly: return "RenewalOnly";
    case Scenario::Custom: return "Custom";
  }
  return "?";
}

Scenario scenario_from_name(const std::string& name) {
  for (Scenario s : {Scenario::FiniteMean, Scenario::CaseA, Scenario::CaseB1,
                     Scenario::CaseB2, Scenario::RenewalOnly,
                     Scenario::Custom})
    if (scenario_name(s) == name) return s;
  throw ConfigError("config: unknown scenario '" + name + "'");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: root must be an object");
  reject_unknown_keys(j, "root",
                      {"schema_version", "seed", "scenario", "replicas",
                       "t_grid", "window_L", "ball_radius", "output_dir",
                       "model", "tolerances"});
  const int version = require(j, "root", "schema_version").get<int>();
  if (version != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version " +
                      std::to_string(version));

  ExperimentConfig config{parse_model(require(j, "root", "model"))};
  config.scenario =
      scenario_from_name(require(j, "root", "scenario").get<std::string>());
  config.t_grid = require(j, "root", "t_grid").get<std::vector<double>>();
  config.replicas = require(j, "root", "replicas").get<std::uint64_t>();
  config.seed = require(j, "root", "seed").get<std::uint64_t>();
  config.window_L = j.value("window_L", 1.0);
  config.ball_radius = j.value("ball_radius", 1.0);
  config.output_dir = j.value("output_dir", std::string("out"));
  if (j.contains("tolerances")) {
    for (const auto& [key, value] : j.at("tolerances").items())
      config.tolerances[key] = value.get<double>();
  }

  if (config.replicas < 1) throw ConfigError("config: replicas must be >= 1");
  for (std::size_t k = 1; k < config.t_grid.size(); ++k)
    if (!(config.t_grid[k] > config.t_grid[k - 1]))
      throw ConfigError("config: t_grid must be strictly increasing");
  return config;
}

ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

nlohmann::json serialize_config(const ExperimentConfig& config) {
  json lifetimes = json::array();
  for (const auto& law : config.model.lifetimes)
    lifetimes.push_back(serialize_lifetime(law));
  json offspring = json::array();
  for (const auto& law : config.model.offspring)
    offspring.push_back(serialize_offspring(law));

  json j = {
      {"schema_version", kConfigSchemaVersion},
      {"seed", config.seed},
      {"scenario", scenario_name(config.scenario)},
      {"replicas", config.replicas},
      {"t_grid", config.t_grid},
      {"window_L", config.window_L},
      {"ball_radius", config.ball_radius},
      {"output_dir", config.output_dir},
      {"model",
       {{"K", config.model.K},
        {"d", config.model.d},
        {"alphas", config.model.alphas},
        {"lifetimes", std::move(lifetimes)},
        {"offspring", std::move(offspring)},
        {"intensities", config.model.intensities}}},
  };
  if (!config.tolerances.empty()) j["tolerances"] = config.tolerances;
  return j;
}

std::vector<std::string> preset_names() {
  return {"finite-mean-subcritical", "case-a", "case-b1", "case-b2",
          "renewal-only", "all-exponential"};
}

ExperimentConfig preset(const std::string& name) {
  const std::vector<double> row0{0.6, 0.4};
  const std::vector<double> row1{0.3, 0.7};

  if (name == "finite-mean-subcritical") {
    // d = 1 below the finite-mean threshold alpha/beta = 1.8.
    ExperimentConfig config{ModelSpec::create(
        2, 1, {2.0, 1.8},
        {LifetimeLaw::exponential(1.0), LifetimeLaw::exponential(1.0)},
        {OffspringLaw::factorized(1.0, 0.5, row0),
         OffspringLaw::factorized(1.0, 0.5, row1)},
        {0.05, 0.05})};
    config.scenario = Scenario::FiniteMean;
    config.t_grid = {25, 50, 100, 200};
    config.replicas = 2000;
    config.seed = 20240811;
    return config;
  }
  if (name == "case-a") {
    // Long-living type is also the most mobile: alpha_1 = alpha = 1;
    // d = 1 < alpha*gamma/beta = 1.6 and eta - 1 = 3 > d/alpha = 1.
    ExperimentConfig config{ModelSpec::create(
        2, 1, {1.0, 1.5},
        {LifetimeLaw::pareto_tail(0.8), LifetimeLaw::light_pareto(4.0, 0.5)},
        {OffspringLaw::factorized(0.5, 0.5, row0),
         OffspringLaw::factorized(0.5, 0.5, row1)},
        {0.05, 0.05})};
    config.scenario = Scenario::CaseA;
    config.t_grid = {25, 50, 100, 200};
    config.replicas = 2000;
    config.seed = 20240812;
    return config;
  }
  if (name == "case-b1") {
    // alpha = 1.5 >= alpha_1*gamma = 1; d = 1 < alpha_1*gamma/beta = 2.
    ExperimentConfig config{ModelSpec::create(
        2, 1, {2.0, 1.5},
        {LifetimeLaw::pareto_tail(0.5), LifetimeLaw::light_pareto(4.0, 0.5)},
        {OffspringLaw::factorized(0.5, 0.5, row0),
         OffspringLaw::factorized(0.5, 0.5, row1)},
        {0.05, 0.05})};
    config.scenario = Scenario::CaseB1;
    config.t_grid = {25, 50, 100, 200};
    config.replicas = 2000;
    config.seed = 20240813;
    return config;
  }
  if (name == "case-b2") {
    // alpha_1*gamma = 1.8 > alpha = 1: the finite-mean type's mobility
    // dominates. d = 1 < d_+ = 0.9/(1.5*0.9 - 0.5) ~ 1.0588, and
    // gamma*eta = 3.6 > d/alpha + 1 = 2.
    ExperimentConfig config{ModelSpec::create(
        2, 1, {2.0, 1.0},
        {LifetimeLaw::pareto_tail(0.9), LifetimeLaw::light_pareto(4.0, 0.5)},
        {OffspringLaw::factorized(0.5, 0.5, row0),
         OffspringLaw::factorized(0.5, 0.5, row1)},
        {0.05, 0.05})};
    config.scenario = Scenario::CaseB2;
    config.t_grid = {25, 50, 100, 200};
    config.replicas = 2000;
    config.seed = 20240814;
    return config;
  }
  if (name == "renewal-only") {
    ExperimentConfig config{ModelSpec::create(
        2, 1, {2.0, 2.0},
        {LifetimeLaw::pareto_tail(0.5), LifetimeLaw::light_pareto(4.0, 0.5)},
        {OffspringLaw::factorized(1.0, 0.5, row0),
         OffspringLaw::factorized(1.0, 0.5, row1)},
        {0.0, 0.0})};
    config.scenario = Scenario::RenewalOnly;
    config.t_grid = {1e3, 1e4, 1e5};
    config.replicas = 1000;
    config.seed = 20240815;
    return config;
  }
  if (name == "all-exponential") {
    // Light everywhere; used for renewal-solver cross-checks.
    ExperimentConfig config{ModelSpec::create(
        2, 1, {2.0, 1.5},
        {LifetimeLaw::exponential(1.0), LifetimeLaw::exponential(1.5)},
        {OffspringLaw::factorized(1.0, 0.5, row0),
         OffspringLaw::factorized(1.0, 0.5, row1)},
        {0.05, 0.05})};
    config.scenario = Scenario::RenewalOnly;
    config.t_grid = {2, 5, 10};
    config.replicas = 2000;
    config.seed = 20240816;
    return config;
  }
  throw UnknownPreset("unknown preset '" + name + "'");
}

}  // namespace branchsim
