#include <doctest.h>

#include <sstream>

#include "../support/fixtures.hpp"
#include "phsync/analysis.hpp"
#include "phsync/sim.hpp"

using namespace phsync;
using namespace phsync::testing;

namespace {

ControllerSpec energy_spec() {
  ControllerSpec s;
  s.kind = ControllerKind::mmsf_energy;
  s.omega0 = kOmega0;
  s.i_r_star = three_machine_ir();
  return s;
}

State perturbed_start(const SystemParams& p, const SteadyStateMap& ss) {
  InitialSpec init;
  init.kind = InitialKind::on_gamma;
  init.theta_dq = Vec{{0.0, -0.3, 0.2}};
  State x = build_initial_state(p, &ss, init);
  x.omega += Vec{{1.0, -2.0, 0.5}};
  x.lambda_r *= 0.98;
  x.v.array() += 100.0;
  return x;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("integrator config validation") {
    IntegratorConfig ic;
    CHECK_NOTHROW(ic.validate());
    ic.dt = 0.0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = {};
    ic.t_end = -1.0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = {};
    ic.rtol = 0.0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    CHECK(integration_method_from_string("rk45_adaptive") == IntegrationMethod::rk45_adaptive);
    CHECK_THROWS(integration_method_from_string("euler"));
  }

  TEST_CASE("step guard") {
    const SystemParams p = three_machine();
    IntegratorConfig ic;
    ic.t_end = 1e-3;
    ic.dt = 0.25 * fastest_time_constant(p);
    CHECK_THROWS_AS(simulate(p, energy_spec(), State::zeros(p), ic), ConfigError);
    ic.allow_large_dt = true;
    CHECK_NOTHROW(simulate(p, energy_spec(), State::zeros(p), ic));
    ic.allow_large_dt = false;
    ic.dt = 0.19 * fastest_time_constant(p);
    CHECK_NOTHROW(simulate(p, energy_spec(), State::zeros(p), ic));
  }

  TEST_CASE("initial states") {
    const SystemParams p = three_machine();
    const State z = build_initial_state(p, nullptr, InitialSpec{});
    CHECK(z.pack().isZero(0.0));

    const SteadyStateMap ss(p, kOmega0, three_machine_ir());
    InitialSpec init;
    init.kind = InitialKind::on_gamma;
    init.theta_dq = Vec{{0.1, 0.2, 0.3}};
    const State g = build_initial_state(p, &ss, init);
    const MachineCurrents c = currents_from_fluxes(p, g.theta, g.lambda_s, g.lambda_r);
    const NetworkFlow f = network_flow(ss, p, init.theta_dq);
    CHECK(g.omega == Vec::Constant(3, kOmega0));
    CHECK(rel_err(c.i_r, three_machine_ir()) <= 1e-12);
    CHECK(rel_err(c.i_s, f.i_s) <= 1e-12);
    CHECK(g.v == f.v);
    CHECK(g.i_t == f.i_t);
    CHECK_THROWS(build_initial_state(p, nullptr, init));
  }

  TEST_CASE("one step on the steady flow under the invariance feedback") {
    const SystemParams p = three_machine();
    ControllerSpec s = energy_spec();
    s.kind = ControllerKind::omega_invariance;
    const SteadyStateMap ss(p, kOmega0, s.i_r_star);
    InitialSpec init;
    init.kind = InitialKind::on_gamma;
    init.theta_dq = Vec{{0.0, 0.7, -1.1}};
    IntegratorConfig ic;
    ic.t_end = ic.dt;
    ic.record_every = ic.dt;
    const Trajectory traj = simulate(p, s, build_initial_state(p, &ss, init), ic);
    REQUIRE(traj.size() == 2);
    CHECK(traj.diagnostics.back().err_omega <= 1e-9);
    CHECK(traj.diagnostics.back().err_ir <= 1e-9);
  }

  TEST_CASE("synchronized equilibrium stays put") {
    const SystemParams p = three_machine();
    const Controller ctrl(p, energy_spec());
    const CriticalPoint cp = minimize(ctrl.potential(), Vec{{0.0, 0.5, 0.5}});
    REQUIRE(cp.converged);
    InitialSpec init;
    init.kind = InitialKind::on_gamma;
    init.theta_dq = cp.theta;
    IntegratorConfig ic;
    ic.t_end = 0.05;
    const Trajectory traj = simulate(p, ctrl, build_initial_state(p, &ctrl.steady_state_map(), init), ic);
    REQUIRE(traj.ok());
    const Diagnostics& d0 = traj.diagnostics.front();
    for (const Diagnostics& d : traj.diagnostics) {
      CHECK(d.err_omega <= 1e-6);
      CHECK(d.err_ir <= 1e-6);
      CHECK(std::abs(d.H_tilde - d0.H_tilde) <= 1e-9 * std::abs(d0.H_tilde));
      CHECK((d.theta_dq - d0.theta_dq).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }

  TEST_CASE("fixed-step runs are bit-identical") {
    const SystemParams p = three_machine();
    const Controller ctrl(p, energy_spec());
    const State x0 = perturbed_start(p, ctrl.steady_state_map());
    IntegratorConfig ic;
    ic.t_end = 0.01;
    const Trajectory a = simulate(p, ctrl, x0, ic), b = simulate(p, ctrl, x0, ic);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.states[k].pack() == b.states[k].pack());

    ic.method = IntegrationMethod::rk45_adaptive;
    const Trajectory c = simulate(p, ctrl, x0, ic), d = simulate(p, ctrl, x0, ic);
    REQUIRE(c.ok());
    CHECK(rel_err(c.states.back().pack(), d.states.back().pack()) <= 1e-12);
    REQUIRE(c.t.size() == a.t.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(c.t[k] - a.t[k]) <= 1e-15);
    CHECK(rel_err(c.states.back().pack(), a.states.back().pack()) <= 1e-6);
  }

  TEST_CASE("fourth-order convergence") {
    const SystemParams p = three_machine();
    const Controller ctrl(p, energy_spec());
    const State x0 = perturbed_start(p, ctrl.steady_state_map());
    auto final_state = [&](double dt) {
      IntegratorConfig ic;
      ic.t_end = 0.1;
      ic.record_every = 0.1;
      ic.dt = dt;
      ic.allow_large_dt = true;
      const Trajectory t = simulate(p, ctrl, x0, ic);
      REQUIRE(t.ok());
      return Vec(t.states.back().pack());
    };
    const Vec ref = final_state(2.5e-7);
    const double e1 = (final_state(4e-6) - ref).norm();
    const double e2 = (final_state(2e-6) - ref).norm();
    const double order = std::log2(e1 / e2);
    MESSAGE("errors " << e1 << " " << e2 << " observed order " << order);
    CHECK(order >= 3.5);
  }

  TEST_CASE("non-finite states abort the run") {
    const SystemParams p = three_machine();
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.t_end = 1.0;
    ic.record_every = 1e-3;
    ic.allow_large_dt = true;
    Rng rng(81);
    const Trajectory traj = simulate(p, energy_spec(), random_state(p, rng), ic);
    CHECK(traj.status == SimulationStatus::non_finite_state);
    CHECK(traj.failure_time > 0.0);
    CHECK(traj.failure_time < 1.0);
    for (const State& x : traj.states) CHECK(x.pack().allFinite());
  }

  TEST_CASE("adaptive step underflow aborts the run") {
    const SystemParams p = three_machine();
    IntegratorConfig ic;
    ic.method = IntegrationMethod::rk45_adaptive;
    ic.t_end = 0.01;
    ic.rtol = 1e-14;
    ic.atol = 1e-14;
    ic.dt_min = 1e-4;
    ic.dt = 1e-4;
    Rng rng(82);
    const Trajectory traj = simulate(p, energy_spec(), random_state(p, rng), ic);
    CHECK(traj.status == SimulationStatus::step_underflow);
    CHECK_FALSE(traj.ok());
  }

  TEST_CASE("trajectory csv") {
    const SystemParams p = three_machine();
    const std::string header = trajectory_csv_header(p);
    CHECK(header ==
          "t,omega_1,omega_2,omega_3,theta_1,theta_2,theta_3,i_r_1,i_r_2,i_r_3,"
          "i_s_1,i_s_2,i_s_3,i_s_4,i_s_5,i_s_6,v_1,v_2,v_3,v_4,v_5,v_6,"
          "i_t_1,i_t_2,i_t_3,i_t_4,i_t_5,i_t_6,u_m_1,u_m_2,u_m_3,u_r_1,u_r_2,u_r_3,"
          "H,H_tilde,S,err_omega,err_ir,theta_dq_1,theta_dq_2,theta_dq_3");
    IntegratorConfig ic;
    ic.t_end = 0.005;
    const Trajectory traj = simulate(p, energy_spec(), State::zeros(p), ic);
    std::ostringstream os;
    write_trajectory_csv(os, p, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == header);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == std::count(header.begin(), header.end(), ','));
    }
    CHECK(rows == traj.size());
    CHECK(traj.size() == 6);
    for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj.t[k] > traj.t[k - 1]);
  }

  TEST_CASE("diagnostics wrap angles") {
    const SystemParams p = three_machine();
    const Controller ctrl(p, energy_spec());
    Rng rng(83);
    State x = random_state(p, rng);
    x.theta = Vec{{40.0, -33.0, 7.5}};
    const Diagnostics d = compute_diagnostics(p, ctrl, x, 0.37);
    for (Index i = 0; i < 3; ++i) {
      CHECK(d.theta_dq[i] >= -std::numbers::pi);
      CHECK(d.theta_dq[i] < std::numbers::pi);
      CHECK(std::abs(wrap(d.theta_dq[i] - (x.theta[i] - kOmega0 * 0.37))) <= 1e-9);
    }
    CHECK(d.pairwise.size() == 3);
    CHECK(std::abs(wrap(d.pairwise[0] - (40.0 + 33.0))) <= 1e-12);
    CHECK(d.H == doctest::Approx(hamiltonian(p, x)));
  }

  TEST_CASE("shifted-energy monotonicity verdict") {
    const Vec ir = three_machine_ir();
    Trajectory traj;
    for (int k = 0; k < 10; ++k) {
      traj.t.push_back(0.1 * k);
      Diagnostics d;
      d.err_ir = k < 3 ? 0.5 * ir.norm() : 1e-4 * ir.norm();
      d.H_tilde = 100.0 - k;
      traj.diagnostics.push_back(d);
    }
    traj.diagnostics[1].H_tilde = 1000.0;  // before the window: ignored
    MonotonicityVerdict v = shifted_energy_monotonicity(traj, ir);
    CHECK(v.window_reached);
    CHECK(v.first_index == 3);
    CHECK(v.non_increasing);

    traj.diagnostics[6].H_tilde = 97.0;
    v = shifted_energy_monotonicity(traj, ir);
    CHECK_FALSE(v.non_increasing);
    CHECK(v.worst_time == doctest::Approx(0.6));
  }
}
