#include "doctest.h"

#include <string>

#include "branchsim/config.hpp"

using namespace branchsim;
using nlohmann::json;

TEST_CASE("serialization round-trips every preset") {
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    const json doc = serialize_config(cfg);
    const auto back = parse_config(doc);
    CHECK(serialize_config(back) == doc);
    CHECK(back.seed == cfg.seed);
    CHECK(back.scenario == cfg.scenario);
    CHECK(back.t_grid == cfg.t_grid);
    CHECK(back.model.K == cfg.model.K);
    CHECK(back.model.alphas == cfg.model.alphas);
  }
}

TEST_CASE("preset catalog") {
  CHECK(preset_names().size() == 6);
  CHECK_THROWS_AS(preset("no-such-study"), UnknownPreset);

  // declared scenarios match the regime the parameters actually produce
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    if (cfg.scenario == Scenario::RenewalOnly || cfg.scenario == Scenario::Custom)
      continue;
    const auto sd = spectral(build_mean_matrix(cfg.model.offspring));
    const auto fit = offspring_beta(cfg.model, sd);
    const auto rep = classify_regime(cfg.model, fit.beta);
    CHECK(scenario_name(cfg.scenario) == regime_name(rep.regime));
  }
}

TEST_CASE("scenario names round-trip") {
  for (const auto s : {Scenario::FiniteMean, Scenario::CaseA, Scenario::CaseB1,
                       Scenario::CaseB2, Scenario::RenewalOnly,
                       Scenario::Custom})
    CHECK(scenario_from_name(scenario_name(s)) == s);
  CHECK_THROWS_AS(scenario_from_name("bogus"), ConfigError);
}

TEST_CASE("strict parsing rejects malformed documents") {
  const json base = serialize_config(preset("case-a"));

  SUBCASE("unknown root key") {
    json doc = base;
    doc["extra"] = 1;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("unknown model key") {
    json doc = base;
    doc["model"]["color"] = "red";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("unknown lifetime key") {
    json doc = base;
    doc["model"]["lifetimes"][0]["units"] = "s";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("unknown offspring key") {
    json doc = base;
    doc["model"]["offspring"][0]["mood"] = "hungry";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("wrong schema version") {
    json doc = base;
    doc["schema_version"] = kConfigSchemaVersion + 1;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("missing required key") {
    json doc = base;
    doc.erase("model");
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("non-increasing time grid") {
    json doc = base;
    doc["t_grid"] = {10.0, 10.0, 20.0};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc["t_grid"] = {20.0, 10.0};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("unknown lifetime kind") {
    json doc = base;
    doc["model"]["lifetimes"][0] = {{"kind", "lognormal"}, {"mu", 0.0}};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("model invariants propagate as config errors") {
    json doc = base;
    doc["model"]["alphas"][0] = 3.0;
    CHECK_THROWS(parse_config(doc));
  }
}

TEST_CASE("text and json entry points agree") {
  const json doc = serialize_config(preset("renewal-only"));
  const auto from_text = parse_config_text(doc.dump());
  CHECK(serialize_config(from_text) == doc);
  CHECK_THROWS_AS(parse_config_text("{ not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/path/config.json"), ConfigError);
}

TEST_CASE("explicit offspring tables survive the round trip") {
  auto cfg = preset("all-exponential");
  json doc = serialize_config(cfg);
  doc["model"]["offspring"][0] = {
      {"kind", "explicit"},
      {"table",
       {{{"counts", {0, 0}}, {"p", 0.5}}, {{"counts", {1, 1}}, {"p", 0.5}}}}};
  const auto parsed = parse_config(doc);
  CHECK(parsed.model.offspring[0].kind() == OffspringKind::Explicit);
  CHECK(serialize_config(parsed) == doc);
}
