#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "../support/fixtures.hpp"
#include "phsync/config.hpp"

using namespace phsync;
using namespace phsync::testing;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string bundled(const char* name) { return read_file(std::string(PHSYNC_CONFIG_DIR) + "/" + name); }

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("bundled scenario carries the reference parameters") {
    const ScenarioConfig cfg = load_config(std::string(PHSYNC_CONFIG_DIR) + "/ieee_like_3machine.json");
    const SystemParams ref = three_machine();
    CHECK(cfg.name == "ieee_like_3machine");
    CHECK(cfg.params.M == ref.M);
    CHECK(cfg.params.D == ref.D);
    CHECK(cfg.params.L_r == ref.L_r);
    CHECK(cfg.params.R_r == ref.R_r);
    CHECK(cfg.params.L_m == ref.L_m);
    CHECK(cfg.params.L_s == ref.L_s);
    CHECK(cfg.params.R_s == ref.R_s);
    CHECK(cfg.params.C == ref.C);
    CHECK(cfg.params.G == ref.G);
    CHECK(cfg.params.L_t == ref.L_t);
    CHECK(cfg.params.R_t == ref.R_t);
    CHECK(cfg.params.incidence == ref.incidence);
    CHECK(cfg.controller.kind == ControllerKind::mmsf_energy);
    CHECK(cfg.controller.omega0 == doctest::Approx(kOmega0).epsilon(1e-15));
    CHECK(cfg.controller.i_r_star == three_machine_ir());
    CHECK(cfg.initial.kind == InitialKind::zero);
    CHECK(cfg.integrator.dt == 2e-6);
    CHECK(cfg.integrator.t_end == 20.0);
  }

  TEST_CASE("near-steady scenario") {
    const ScenarioConfig cfg = load_config(std::string(PHSYNC_CONFIG_DIR) + "/ieee_like_3machine_near_steady.json");
    CHECK(cfg.initial.kind == InitialKind::custom);
    CHECK(rel_err(cfg.initial.omega, Vec{{0.99, 1.01, 0.999}} * kOmega0) <= 1e-15);
    CHECK(rel_err(cfg.initial.theta, Vec{{0.0, -std::numbers::pi / 4, std::numbers::pi / 4}}) <= 1e-15);
    CHECK(cfg.initial.i_r == three_machine_ir());
    CHECK(cfg.initial.i_s.size() == 6);
    CHECK(cfg.initial.v.size() == 6);
    CHECK(cfg.initial.i_t.size() == 6);
  }

  TEST_CASE("round trip") {
    for (const char* name : {"ieee_like_3machine.json", "ieee_like_3machine_near_steady.json", "two_machine.json"}) {
      const ScenarioConfig a = parse_config(bundled(name));
      const std::string text = serialize_config(a);
      const ScenarioConfig b = parse_config(text);
      CHECK(serialize_config(b) == text);
      CHECK(b.params.M == a.params.M);
      CHECK(b.params.incidence == a.params.incidence);
      CHECK(b.controller.omega0 == a.controller.omega0);
      CHECK(b.controller.i_r_star == a.controller.i_r_star);
      CHECK(b.initial.omega == a.initial.omega);
      CHECK(b.integrator.dt == a.integrator.dt);
      CHECK(b.seed == a.seed);
    }
  }

  TEST_CASE("field diagnostics") {
    json base = json::parse(bundled("ieee_like_3machine.json"));

    json j = base;
    j["machines"][0].erase("M");
    CHECK(error_of(j.dump()) == "machines[0].M: missing field");

    j = base;
    j["buses"][2]["G"] = "one";
    CHECK(error_of(j.dump()).rfind("buses[2].G", 0) == 0);

    j = base;
    j["controller"]["kind"] = "pid";
    CHECK(error_of(j.dump()).rfind("controller.kind", 0) == 0);

    j = base;
    j["incidence"] = json::array({json::array({1, -1, 0})});
    CHECK(error_of(j.dump()).rfind("incidence", 0) == 0);

    j = base;
    j["machines"][1]["L_m"] = 10.0;  // L_s L_r < L_m^2
    CHECK_FALSE(error_of(j.dump()).empty());

    j = base;
    j["integrator"]["dt"] = -1.0;
    CHECK(error_of(j.dump()).rfind("integrator", 0) == 0);

    CHECK_FALSE(error_of("{ not json").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/scenario.json"), ConfigError);
  }

  TEST_CASE("frequency and per-unit speeds") {
    json j = json::parse(bundled("ieee_like_3machine_near_steady.json"));
    const ScenarioConfig a = parse_config(j.dump());
    j["controller"].erase("frequency_hz");
    j["controller"]["omega0"] = 100.0 * std::numbers::pi;
    const ScenarioConfig b = parse_config(j.dump());
    CHECK(b.controller.omega0 == doctest::Approx(a.controller.omega0).epsilon(1e-15));
    CHECK(rel_err(b.initial.omega, a.initial.omega) <= 1e-15);
  }
}
