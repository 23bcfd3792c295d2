#include "phsync/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace phsync {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

std::string child(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

double positive(const json& obj, const std::string& path, const char* key) {
  const double v = number(require(obj, path, key), child(path, key));
  if (!(v > 0.0)) fail(child(path, key), "must be > 0");
  return v;
}

Vec vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], index(path, i));
  return v;
}

Vec sized_vector(const json& obj, const std::string& path, const char* key, Index size) {
  const Vec v = vector(require(obj, path, key), child(path, key));
  if (v.size() != size) {
    fail(child(path, key), "expected " + std::to_string(size) + " entries, got " +
                               std::to_string(v.size()));
  }
  return v;
}

const json& array_section(const json& root, const char* key) {
  const json& a = require(root, "", key);
  if (!a.is_array()) fail(key, "expected an array");
  return a;
}

void parse_network(const json& root, SystemParams& p) {
  const json& machines = array_section(root, "machines");
  if (machines.empty()) fail("machines", "at least one machine is required");
  const auto n = static_cast<Index>(machines.size());
  for (Vec* v : {&p.M, &p.D, &p.L_r, &p.R_r, &p.L_m, &p.L_s, &p.R_s}) v->resize(n);
  for (std::size_t i = 0; i < machines.size(); ++i) {
    const std::string path = index("machines", i);
    const auto k = static_cast<Index>(i);
    p.M[k] = positive(machines[i], path, "M");
    p.D[k] = positive(machines[i], path, "D");
    p.L_r[k] = positive(machines[i], path, "L_r");
    p.R_r[k] = positive(machines[i], path, "R_r");
    p.L_m[k] = positive(machines[i], path, "L_m");
    p.L_s[k] = positive(machines[i], path, "L_s");
    p.R_s[k] = positive(machines[i], path, "R_s");
    if (!(p.L_s[k] * p.L_r[k] > p.L_m[k] * p.L_m[k])) {
      fail(path, "machine inductance must be positive definite (L_s L_r > L_m^2)");
    }
  }

  const json& buses = array_section(root, "buses");
  if (buses.size() != machines.size()) {
    fail("buses", "expected one bus per machine (" + std::to_string(n) + "), got " +
                      std::to_string(buses.size()));
  }
  p.C.resize(n);
  p.G.resize(n);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string path = index("buses", i);
    p.C[static_cast<Index>(i)] = positive(buses[i], path, "C");
    p.G[static_cast<Index>(i)] = positive(buses[i], path, "G");
  }

  const json& lines = root.contains("lines") ? array_section(root, "lines") : json::array();
  const auto m = static_cast<Index>(lines.size());
  p.L_t.resize(m);
  p.R_t.resize(m);
  for (std::size_t e = 0; e < lines.size(); ++e) {
    const std::string path = index("lines", e);
    p.L_t[static_cast<Index>(e)] = positive(lines[e], path, "L_t");
    p.R_t[static_cast<Index>(e)] = positive(lines[e], path, "R_t");
  }

  p.incidence = Mat::Zero(n, m);
  if (m > 0 || root.contains("incidence")) {
    const json& inc = require(root, "", "incidence");
    if (!inc.is_array() || static_cast<Index>(inc.size()) != n) {
      fail("incidence", "expected " + std::to_string(n) + " rows (one per bus)");
    }
    for (std::size_t r = 0; r < inc.size(); ++r) {
      const std::string row = index("incidence", r);
      const Vec v = vector(inc[r], row);
      if (v.size() != m) {
        fail(row, "expected " + std::to_string(m) + " columns (one per line)");
      }
      p.incidence.row(static_cast<Index>(r)) = v.transpose();
    }
  }
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
}

void parse_controller(const json& root, Index n, ControllerSpec& c) {
  const json& j = require(root, "", "controller");
  const std::string path = "controller";
  const json& kind = require(j, path, "kind");
  if (!kind.is_string()) fail(child(path, "kind"), "expected a string");
  try {
    c.kind = controller_kind_from_string(kind.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail(child(path, "kind"), e.what());
  }
  if (j.contains("omega0")) {
    c.omega0 = positive(j, path, "omega0");
  } else if (j.contains("frequency_hz")) {
    c.omega0 = 2.0 * M_PI * positive(j, path, "frequency_hz");
  } else {
    fail(child(path, "omega0"), "missing field (or give frequency_hz)");
  }
  c.i_r_star = sized_vector(j, path, "i_r_star", n);
  for (Index i = 0; i < n; ++i) {
    if (c.i_r_star[i] < 0.0) fail(index(child(path, "i_r_star"), i), "must be >= 0");
  }
  c.theta_dq.reset();
  c.constant_input.reset();
  if (c.kind == ControllerKind::steady_state || j.contains("theta_dq")) {
    c.theta_dq = sized_vector(j, path, "theta_dq", n);
  }
  if (c.kind == ControllerKind::open_loop_constant) {
    c.constant_input = ControlInput{sized_vector(j, path, "u_m", n), sized_vector(j, path, "u_r", n)};
  }
}

void parse_initial(const json& root, const SystemParams& p, double omega0, InitialSpec& s) {
  s = InitialSpec{};
  if (!root.contains("initial")) return;
  const json& j = root["initial"];
  const std::string path = "initial";
  const json& kind = require(j, path, "kind");
  if (!kind.is_string()) fail(child(path, "kind"), "expected a string");
  try {
    s.kind = initial_kind_from_string(kind.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail(child(path, "kind"), e.what());
  }
  const Index n = p.n(), m = p.m();
  if (s.kind == InitialKind::on_gamma) {
    s.theta_dq = j.contains("theta_dq") ? sized_vector(j, path, "theta_dq", n) : Vec::Zero(n);
  } else if (s.kind == InitialKind::custom) {
    if (j.contains("omega_pu")) {
      s.omega = sized_vector(j, path, "omega_pu", n) * omega0;
    } else {
      s.omega = sized_vector(j, path, "omega", n);
    }
    s.theta = sized_vector(j, path, "theta", n);
    s.i_r = sized_vector(j, path, "i_r", n);
    s.i_s = sized_vector(j, path, "i_s", 2 * n);
    s.v = sized_vector(j, path, "v", 2 * n);
    s.i_t = m > 0 ? sized_vector(j, path, "i_t", 2 * m) : Vec(0);
  }
}

void parse_integrator(const json& root, IntegratorConfig& cfg) {
  cfg = IntegratorConfig{};
  if (!root.contains("integrator")) return;
  const json& j = root["integrator"];
  const std::string path = "integrator";
  if (!j.is_object()) fail(path, "expected an object");
  if (j.contains("method")) {
    const json& m = j["method"];
    if (!m.is_string()) fail(child(path, "method"), "expected a string");
    try {
      cfg.method = integration_method_from_string(m.get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(child(path, "method"), e.what());
    }
  }
  for (auto [key, field] : {std::pair{"dt", &cfg.dt}, {"rtol", &cfg.rtol}, {"atol", &cfg.atol},
                            {"dt_min", &cfg.dt_min}, {"dt_max", &cfg.dt_max},
                            {"t_end", &cfg.t_end}, {"record_every", &cfg.record_every}}) {
    if (j.contains(key)) *field = positive(j, path, key);
  }
  if (j.contains("allow_large_dt")) {
    if (!j["allow_large_dt"].is_boolean()) fail(child(path, "allow_large_dt"), "expected a boolean");
    cfg.allow_large_dt = j["allow_large_dt"].get<bool>();
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

std::string string_field(const json& j, const std::string& path, const char* key,
                         const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) fail(child(path, key), "expected a string");
  return j[key].get<std::string>();
}

int int_field(const json& j, const std::string& path, const char* key, int fallback, int min) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) fail(child(path, key), "expected an integer");
  const int v = j[key].get<int>();
  if (v < min) fail(child(path, key), "must be >= " + std::to_string(min));
  return v;
}

json to_array(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("top level: expected an object");

  ScenarioConfig cfg;
  cfg.name = string_field(root, "", "name", "");
  parse_network(root, cfg.params);
  parse_controller(root, cfg.params.n(), cfg.controller);
  parse_initial(root, cfg.params, cfg.controller.omega0, cfg.initial);
  parse_integrator(root, cfg.integrator);

  if (root.contains("outputs")) {
    const json& o = root["outputs"];
    if (!o.is_object()) fail("outputs", "expected an object");
    cfg.outputs.trajectory = string_field(o, "outputs", "trajectory", cfg.outputs.trajectory);
    cfg.outputs.summary = string_field(o, "outputs", "summary", cfg.outputs.summary);
    cfg.outputs.scan = string_field(o, "outputs", "scan", cfg.outputs.scan);
    cfg.outputs.report = string_field(o, "outputs", "report", cfg.outputs.report);
  }
  if (root.contains("potential")) {
    const json& o = root["potential"];
    if (!o.is_object()) fail("potential", "expected an object");
    cfg.potential.resolution = int_field(o, "potential", "resolution", cfg.potential.resolution, 2);
    cfg.potential.restarts = int_field(o, "potential", "restarts", cfg.potential.restarts, 1);
    cfg.potential.full_scan_max_machines =
        int_field(o, "potential", "full_scan_max_machines", cfg.potential.full_scan_max_machines, 0);
  }
  if (root.contains("check")) {
    const json& o = root["check"];
    if (!o.is_object()) fail("check", "expected an object");
    cfg.check_grid = int_field(o, "check", "grid", cfg.check_grid, 1);
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  try {
    cfg.controller.validate(cfg.params.n());
  } catch (const ParameterError& e) {
    fail("controller", e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const ScenarioConfig& cfg, int indent) {
  const SystemParams& p = cfg.params;
  json root;
  root["name"] = cfg.name;
  json machines = json::array();
  for (Index i = 0; i < p.n(); ++i) {
    machines.push_back({{"M", p.M[i]}, {"D", p.D[i]}, {"L_r", p.L_r[i]}, {"R_r", p.R_r[i]},
                        {"L_m", p.L_m[i]}, {"L_s", p.L_s[i]}, {"R_s", p.R_s[i]}});
  }
  root["machines"] = machines;
  json buses = json::array();
  for (Index i = 0; i < p.n(); ++i) buses.push_back({{"C", p.C[i]}, {"G", p.G[i]}});
  root["buses"] = buses;
  json lines = json::array();
  for (Index e = 0; e < p.m(); ++e) lines.push_back({{"L_t", p.L_t[e]}, {"R_t", p.R_t[e]}});
  root["lines"] = lines;
  json inc = json::array();
  for (Index r = 0; r < p.n(); ++r) inc.push_back(to_array(p.incidence.row(r).transpose()));
  root["incidence"] = inc;

  const ControllerSpec& c = cfg.controller;
  json ctrl{{"kind", to_string(c.kind)}, {"omega0", c.omega0}, {"i_r_star", to_array(c.i_r_star)}};
  if (c.theta_dq) ctrl["theta_dq"] = to_array(*c.theta_dq);
  if (c.constant_input) {
    ctrl["u_m"] = to_array(c.constant_input->u_m);
    ctrl["u_r"] = to_array(c.constant_input->u_r);
  }
  root["controller"] = ctrl;

  json init{{"kind", to_string(cfg.initial.kind)}};
  if (cfg.initial.kind == InitialKind::on_gamma) init["theta_dq"] = to_array(cfg.initial.theta_dq);
  if (cfg.initial.kind == InitialKind::custom) {
    init["omega"] = to_array(cfg.initial.omega);
    init["theta"] = to_array(cfg.initial.theta);
    init["i_r"] = to_array(cfg.initial.i_r);
    init["i_s"] = to_array(cfg.initial.i_s);
    init["v"] = to_array(cfg.initial.v);
    init["i_t"] = to_array(cfg.initial.i_t);
  }
  root["initial"] = init;

  const IntegratorConfig& ic = cfg.integrator;
  root["integrator"] = {{"method", to_string(ic.method)}, {"dt", ic.dt},
                        {"rtol", ic.rtol}, {"atol", ic.atol},
                        {"dt_min", ic.dt_min}, {"dt_max", ic.dt_max},
                        {"t_end", ic.t_end}, {"record_every", ic.record_every},
                        {"allow_large_dt", ic.allow_large_dt}};
  root["outputs"] = {{"trajectory", cfg.outputs.trajectory}, {"summary", cfg.outputs.summary},
                     {"scan", cfg.outputs.scan}, {"report", cfg.outputs.report}};
  root["potential"] = {{"resolution", cfg.potential.resolution},
                       {"restarts", cfg.potential.restarts},
                       {"full_scan_max_machines", cfg.potential.full_scan_max_machines}};
  root["check"] = {{"grid", cfg.check_grid}};
  root["seed"] = cfg.seed;
  return root.dump(indent);
}

}  // namespace phsync
