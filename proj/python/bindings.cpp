#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phsync/cli.hpp"
#include "phsync/config.hpp"
#include "phsync/dynamics.hpp"
#include "phsync/sim.hpp"

namespace py = pybind11;
using namespace phsync;

namespace {

py::dict trajectory_to_dict(const SystemParams& p, const Trajectory& traj) {
  const auto rows = static_cast<Index>(traj.size());
  const Index n = p.n(), m = p.m();
  Mat omega(rows, n), theta(rows, n), i_r(rows, n), i_s(rows, 2 * n), v(rows, 2 * n),
      i_t(rows, 2 * m), u_m(rows, n), u_r(rows, n), theta_dq(rows, n);
  Vec t(rows), H(rows), H_tilde(rows), S(rows), err_omega(rows), err_ir(rows);
  for (Index k = 0; k < rows; ++k) {
    const State& x = traj.states[k];
    const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
    const Diagnostics& d = traj.diagnostics[k];
    t[k] = traj.t[k];
    omega.row(k) = x.omega.transpose();
    theta.row(k) = x.theta.transpose();
    i_r.row(k) = cur.i_r.transpose();
    i_s.row(k) = cur.i_s.transpose();
    v.row(k) = x.v.transpose();
    i_t.row(k) = x.i_t.transpose();
    u_m.row(k) = traj.inputs[k].u_m.transpose();
    u_r.row(k) = traj.inputs[k].u_r.transpose();
    theta_dq.row(k) = d.theta_dq.transpose();
    H[k] = d.H;
    H_tilde[k] = d.H_tilde;
    S[k] = d.S;
    err_omega[k] = d.err_omega;
    err_ir[k] = d.err_ir;
  }
  py::dict out;
  out["t"] = t;
  out["omega"] = omega;
  out["theta"] = theta;
  out["i_r"] = i_r;
  out["i_s"] = i_s;
  out["v"] = v;
  out["i_t"] = i_t;
  out["u_m"] = u_m;
  out["u_r"] = u_r;
  out["H"] = H;
  out["H_tilde"] = H_tilde;
  out["S"] = S;
  out["err_omega"] = err_omega;
  out["err_ir"] = err_ir;
  out["theta_dq"] = theta_dq;
  out["status"] = std::string(to_string(traj.status));
  out["message"] = traj.message;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "phsync core bindings";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("incidence", &SystemParams::incidence)
      .def_readwrite("M", &SystemParams::M)
      .def_readwrite("D", &SystemParams::D)
      .def_readwrite("L_r", &SystemParams::L_r)
      .def_readwrite("R_r", &SystemParams::R_r)
      .def_readwrite("L_m", &SystemParams::L_m)
      .def_readwrite("L_s", &SystemParams::L_s)
      .def_readwrite("R_s", &SystemParams::R_s)
      .def_readwrite("C", &SystemParams::C)
      .def_readwrite("G", &SystemParams::G)
      .def_readwrite("L_t", &SystemParams::L_t)
      .def_readwrite("R_t", &SystemParams::R_t)
      .def_property_readonly("n", &SystemParams::n)
      .def_property_readonly("m", &SystemParams::m)
      .def("validate", &SystemParams::validate);

  py::class_<State>(m, "State")
      .def(py::init<>())
      .def_readwrite("omega", &State::omega)
      .def_readwrite("theta", &State::theta)
      .def_readwrite("lambda_r", &State::lambda_r)
      .def_readwrite("lambda_s", &State::lambda_s)
      .def_readwrite("v", &State::v)
      .def_readwrite("i_t", &State::i_t)
      .def("pack", &State::pack)
      .def_static("unpack", &State::unpack)
      .def_static("zeros", &State::zeros);

  py::class_<ControlInput>(m, "ControlInput")
      .def(py::init<>())
      .def(py::init([](Vec u_m, Vec u_r) { return ControlInput{std::move(u_m), std::move(u_r)}; }),
           py::arg("u_m"), py::arg("u_r"))
      .def_readwrite("u_m", &ControlInput::u_m)
      .def_readwrite("u_r", &ControlInput::u_r);

  m.def("state_from_currents", &state_from_currents, py::arg("params"), py::arg("omega"),
        py::arg("theta"), py::arg("i_r"), py::arg("i_s"), py::arg("v"), py::arg("i_t"));
  m.def("hamiltonian", &hamiltonian);
  m.def("electrical_torque", &electrical_torque);
  m.def("rhs_open_loop", [](const SystemParams& p, const State& x, const ControlInput& u) {
    return rhs_open_loop(p, x, u).pack();
  });

  py::enum_<ControllerKind>(m, "ControllerKind")
      .value("open_loop_constant", ControllerKind::open_loop_constant)
      .value("omega_invariance", ControllerKind::omega_invariance)
      .value("steady_state", ControllerKind::steady_state)
      .value("mmsf_energy", ControllerKind::mmsf_energy)
      .value("mmsf_highgain", ControllerKind::mmsf_highgain);

  py::class_<ControllerSpec>(m, "ControllerSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ControllerSpec::kind)
      .def_readwrite("omega0", &ControllerSpec::omega0)
      .def_readwrite("i_r_star", &ControllerSpec::i_r_star)
      .def_readwrite("theta_dq", &ControllerSpec::theta_dq)
      .def_readwrite("constant_input", &ControllerSpec::constant_input);

  py::class_<SteadyStateMap>(m, "SteadyStateMap")
      .def(py::init<const SystemParams&, double, Vec>(), py::arg("params"), py::arg("omega0"),
           py::arg("i_r_star"))
      .def_property_readonly("pi", &SteadyStateMap::pi)
      .def_property_readonly("y_net", &SteadyStateMap::y_net)
      .def_property_readonly("omega0", &SteadyStateMap::omega0)
      .def("sylvester_residual", &SteadyStateMap::sylvester_residual);

  m.def("k_net", &k_net, py::arg("ssmap"), py::arg("params"), py::arg("theta"));
  m.def("network_flow", [](const SteadyStateMap& ss, const SystemParams& p, const Vec& theta) {
    const NetworkFlow f = network_flow(ss, p, theta);
    return py::make_tuple(f.i_s, f.v, f.i_t);
  });
  m.def("slowest_time_constant", &slowest_time_constant);
  m.def("fastest_time_constant", &fastest_time_constant);

  py::class_<PotentialEvaluator>(m, "PotentialEvaluator")
      .def(py::init<const SystemParams&, const SteadyStateMap&>(), py::keep_alive<1, 3>())
      .def("potential", &PotentialEvaluator::potential)
      .def("gradient", &PotentialEvaluator::gradient)
      .def("active_torque", &PotentialEvaluator::active_torque);

  py::enum_<CriticalKind>(m, "CriticalKind")
      .value("minimum", CriticalKind::minimum)
      .value("saddle", CriticalKind::saddle)
      .value("maximum", CriticalKind::maximum)
      .value("degenerate", CriticalKind::degenerate);

  py::class_<CriticalPoint>(m, "CriticalPoint")
      .def_readonly("theta", &CriticalPoint::theta)
      .def_readonly("value", &CriticalPoint::value)
      .def_readonly("gradient_norm", &CriticalPoint::gradient_norm)
      .def_readonly("kind", &CriticalPoint::kind)
      .def_readonly("converged", &CriticalPoint::converged);

  m.def("minimize", [](const PotentialEvaluator& ev, const Vec& theta0) { return minimize(ev, theta0); });
  m.def(
      "scan_torus",
      [](const PotentialEvaluator& ev, int resolution, bool gauge_fixed) {
        const TorusScan s = scan_torus(ev, resolution, gauge_fixed);
        return py::make_tuple(Vec(Eigen::Map<const Vec>(s.values.data(), s.values.size())),
                              s.theta_at(s.argmin()));
      },
      py::arg("evaluator"), py::arg("resolution"), py::arg("gauge_fixed") = true);

  py::class_<DissipationReport>(m, "DissipationReport")
      .def_readonly("worst_margin", &DissipationReport::worst_margin)
      .def_readonly("worst_theta", &DissipationReport::worst_theta)
      .def_readonly("passed", &DissipationReport::pass)
      .def_readonly("routes_agree", &DissipationReport::routes_agree);
  m.def("check_dissipation", &check_dissipation);

  py::class_<Controller>(m, "Controller")
      .def(py::init<const SystemParams&, ControllerSpec>())
      .def("__call__", &Controller::operator());

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readonly("name", &ScenarioConfig::name)
      .def_readonly("params", &ScenarioConfig::params)
      .def_readonly("controller", &ScenarioConfig::controller);
  m.def("load_config", &load_config);
  m.def("parse_config", &parse_config);
  m.def("serialize_config", &serialize_config, py::arg("config"), py::arg("indent") = 2);

  m.def(
      "simulate_config",
      [](const ScenarioConfig& cfg, std::optional<double> t_end) {
        IntegratorConfig ic = cfg.integrator;
        if (t_end) ic.t_end = *t_end;
        Trajectory traj;
        {
          py::gil_scoped_release release;
          const Controller ctrl(cfg.params, cfg.controller);
          const State x0 = build_initial_state(cfg.params, &ctrl.steady_state_map(), cfg.initial);
          traj = simulate(cfg.params, ctrl, x0, ic);
        }
        return trajectory_to_dict(cfg.params, traj);
      },
      py::arg("config"), py::arg("t_end") = py::none());
}
