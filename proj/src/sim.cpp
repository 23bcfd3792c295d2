#include "phsync/sim.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include "phsync/algebra.hpp"
#include "phsync/dynamics.hpp"

namespace phsync {

namespace odeint = boost::numeric::odeint;

const char* to_string(IntegrationMethod m) {
  return m == IntegrationMethod::rk4_fixed ? "rk4_fixed" : "rk45_adaptive";
}

IntegrationMethod integration_method_from_string(const std::string& name) {
  if (name == "rk4_fixed") return IntegrationMethod::rk4_fixed;
  if (name == "rk45_adaptive") return IntegrationMethod::rk45_adaptive;
  throw std::invalid_argument("unknown integration method '" + name + "'");
}

void IntegratorConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(dt)) throw ConfigError("integrator dt must be > 0");
  if (!positive(t_end)) throw ConfigError("integrator t_end must be > 0");
  if (!positive(record_every)) throw ConfigError("integrator record_every must be > 0");
  if (!positive(rtol) || !positive(atol)) throw ConfigError("rtol and atol must be > 0");
  if (method == IntegrationMethod::rk45_adaptive) {
    if (!positive(dt_min) || !positive(dt_max) || dt_min > dt_max) {
      throw ConfigError("need 0 < dt_min <= dt_max");
    }
  }
}

const char* to_string(SimulationStatus s) {
  switch (s) {
    case SimulationStatus::completed: return "completed";
    case SimulationStatus::non_finite_state: return "non_finite_state";
    case SimulationStatus::step_underflow: return "step_underflow";
  }
  return "unknown";
}

Diagnostics compute_diagnostics(const SystemParams& p, const Controller& ctrl, const State& x,
                                double t) {
  const SteadyStateMap& ss = ctrl.steady_state_map();
  const PotentialEvaluator& ev = ctrl.potential();
  const Index n = p.n();
  const double theta0 = ss.omega0() * t;
  const TildeState tilde = to_tilde(p, ss, x, theta0);
  const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);

  Diagnostics d;
  d.H = hamiltonian(p, x);
  d.S = ev.potential(tilde.theta_dq);
  d.H_tilde = shifted_energy(p, ev, tilde);
  d.err_omega = tilde.omega.norm();
  d.err_ir = (cur.i_r - ss.i_r_star()).norm();
  d.theta_dq = tilde.theta_dq.unaryExpr([](double a) { return algebra::wrap_angle(a); });
  d.pairwise.resize(n * (n - 1) / 2);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) d.pairwise[k++] = algebra::wrap_angle(x.theta[i] - x.theta[j]);
  }
  return d;
}

namespace {

class ClosedLoop {
 public:
  ClosedLoop(const SystemParams& p, const Controller& ctrl) : p_(p), ctrl_(ctrl) {}

  void operator()(const Vec& y, Vec& dydt, double /*t*/) const {
    const State x = State::unpack(p_, y);
    dydt = rhs_open_loop(p_, x, ctrl_(x)).pack();
  }

 private:
  const SystemParams& p_;
  const Controller& ctrl_;
};

struct Recorder {
  const SystemParams& p;
  const Controller& ctrl;
  Trajectory& traj;

  void operator()(const Vec& y, double t) {
    const State x = State::unpack(p, y);
    traj.t.push_back(t);
    traj.inputs.push_back(ctrl(x));
    traj.diagnostics.push_back(compute_diagnostics(p, ctrl, x, t));
    traj.states.push_back(x);
  }
};

void abort_run(Trajectory& traj, SimulationStatus status, double t, const std::string& what) {
  traj.status = status;
  traj.failure_time = t;
  std::ostringstream os;
  os << what << " at t = " << std::setprecision(9) << t << " s";
  traj.message = os.str();
}

void run_fixed(const SystemParams& p, const Controller& ctrl, Vec& y,
               const IntegratorConfig& cfg, Trajectory& traj) {
  odeint::runge_kutta4<Vec, double, Vec, double, odeint::vector_space_algebra> stepper;
  const ClosedLoop sys(p, ctrl);
  Recorder rec{p, ctrl, traj};
  const long steps = std::max(1L, static_cast<long>(std::llround(cfg.t_end / cfg.dt)));
  const long every = std::max(1L, static_cast<long>(std::llround(cfg.record_every / cfg.dt)));
  rec(y, 0.0);
  for (long k = 1; k <= steps; ++k) {
    const double t_prev = (k - 1) * cfg.dt;
    stepper.do_step(sys, y, t_prev, cfg.dt);
    traj.steps = k;
    const double t = k * cfg.dt;
    if (!y.allFinite()) {
      abort_run(traj, SimulationStatus::non_finite_state, t, "non-finite state");
      return;
    }
    if (k % every == 0 || k == steps) rec(y, t);
  }
}

void run_adaptive(const SystemParams& p, const Controller& ctrl, Vec& y,
                  const IntegratorConfig& cfg, Trajectory& traj) {
  using Dopri = odeint::runge_kutta_dopri5<Vec, double, Vec, double, odeint::vector_space_algebra>;
  auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol, Dopri());
  const ClosedLoop sys(p, ctrl);
  Recorder rec{p, ctrl, traj};
  rec(y, 0.0);

  double t = 0.0;
  double dt = std::min(cfg.dt, cfg.dt_max);
  const long records = std::max(1L, static_cast<long>(std::ceil(cfg.t_end / cfg.record_every - 1e-9)));
  for (long r = 1; r <= records; ++r) {
    const double target = std::min(cfg.t_end, r * cfg.record_every);
    while (t < target) {
      const double remaining = target - t;
      const bool clamped = dt >= remaining;
      double step = clamped ? remaining : dt;
      const Vec y_prev = y;
      const double t_prev = t;
      const auto result = stepper.try_step(sys, y, t, step);
      if (result == odeint::success) {
        ++traj.steps;
        if (clamped) t = target;  // land exactly on the record time
        if (!y.allFinite()) {
          abort_run(traj, SimulationStatus::non_finite_state, t, "non-finite state");
          return;
        }
        if (!clamped) dt = std::min(step, cfg.dt_max);
      } else {
        y = y_prev;
        t = t_prev;
        dt = step;
        if (dt < cfg.dt_min) {
          abort_run(traj, SimulationStatus::step_underflow, t, "step size fell below dt_min");
          return;
        }
      }
    }
    rec(y, target);
  }
}

}  // namespace

Trajectory simulate(const SystemParams& p, const Controller& ctrl, const State& x0,
                    const IntegratorConfig& cfg) {
  cfg.validate();
  if (cfg.method == IntegrationMethod::rk4_fixed && !cfg.allow_large_dt) {
    const double tau = fastest_time_constant(p);
    if (cfg.dt > 0.2 * tau) {
      std::ostringstream os;
      os << "dt = " << cfg.dt << " s exceeds 0.2 x fastest electrical time constant (" << tau
         << " s); pass allow_large_dt to override";
      throw ConfigError(os.str());
    }
  }
  Vec y = x0.pack();
  if (y.size() != State::packed_size(p)) throw ConfigError("initial state has wrong dimensions");
  if (!y.allFinite()) throw ConfigError("initial state is not finite");

  Trajectory traj;
  if (cfg.method == IntegrationMethod::rk4_fixed) {
    run_fixed(p, ctrl, y, cfg, traj);
  } else {
    run_adaptive(p, ctrl, y, cfg, traj);
  }
  return traj;
}

Trajectory simulate(const SystemParams& p, const ControllerSpec& spec, const State& x0,
                    const IntegratorConfig& cfg) {
  const Controller ctrl(p, spec);
  return simulate(p, ctrl, x0, cfg);
}

const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::zero: return "zero";
    case InitialKind::on_gamma: return "on_gamma";
    case InitialKind::custom: return "custom";
  }
  return "unknown";
}

InitialKind initial_kind_from_string(const std::string& name) {
  if (name == "zero") return InitialKind::zero;
  if (name == "on_gamma") return InitialKind::on_gamma;
  if (name == "custom") return InitialKind::custom;
  throw std::invalid_argument("unknown initial state kind '" + name + "'");
}

State build_initial_state(const SystemParams& p, const SteadyStateMap* ss,
                          const InitialSpec& spec) {
  const Index n = p.n(), m = p.m();
  switch (spec.kind) {
    case InitialKind::zero:
      return State::zeros(p);
    case InitialKind::on_gamma: {
      if (ss == nullptr) throw std::invalid_argument("on_gamma initial state needs a steady-state map");
      if (spec.theta_dq.size() != n) throw ConfigError("on_gamma theta_dq must have n entries");
      const NetworkFlow f = network_flow(*ss, p, spec.theta_dq);
      return state_from_currents(p, Vec::Constant(n, ss->omega0()), spec.theta_dq, ss->i_r_star(),
                                 f.i_s, f.v, f.i_t);
    }
    case InitialKind::custom: {
      auto check = [](const Vec& v, Index size, const char* name) {
        if (v.size() != size) {
          std::ostringstream os;
          os << "custom initial " << name << " must have " << size << " entries";
          throw ConfigError(os.str());
        }
      };
      check(spec.omega, n, "omega");
      check(spec.theta, n, "theta");
      check(spec.i_r, n, "i_r");
      check(spec.i_s, 2 * n, "i_s");
      check(spec.v, 2 * n, "v");
      check(spec.i_t, 2 * m, "i_t");
      return state_from_currents(p, spec.omega, spec.theta, spec.i_r, spec.i_s, spec.v, spec.i_t);
    }
  }
  throw std::logic_error("unhandled initial state kind");
}

std::string trajectory_csv_header(const SystemParams& p) {
  const Index n = p.n(), m = p.m();
  std::ostringstream os;
  os << "t";
  auto group = [&](const char* name, Index count) {
    for (Index i = 1; i <= count; ++i) os << ',' << name << '_' << i;
  };
  group("omega", n);
  group("theta", n);
  group("i_r", n);
  group("i_s", 2 * n);
  group("v", 2 * n);
  group("i_t", 2 * m);
  group("u_m", n);
  group("u_r", n);
  os << ",H,H_tilde,S,err_omega,err_ir";
  group("theta_dq", n);
  return os.str();
}

void write_trajectory_csv(std::ostream& os, const SystemParams& p, const Trajectory& traj) {
  os << trajectory_csv_header(p) << '\n';
  const auto old_precision = os.precision(17);
  auto put = [&](const Vec& v) {
    for (Index i = 0; i < v.size(); ++i) os << ',' << v[i];
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const State& x = traj.states[k];
    const MachineCurrents cur = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
    const Diagnostics& d = traj.diagnostics[k];
    os << traj.t[k];
    put(x.omega);
    put(x.theta);
    put(cur.i_r);
    put(cur.i_s);
    put(x.v);
    put(x.i_t);
    put(traj.inputs[k].u_m);
    put(traj.inputs[k].u_r);
    os << ',' << d.H << ',' << d.H_tilde << ',' << d.S << ',' << d.err_omega << ',' << d.err_ir;
    put(d.theta_dq);
    os << '\n';
  }
  os.precision(old_precision);
}

MonotonicityVerdict shifted_energy_monotonicity(const Trajectory& traj, const Vec& i_r_star,
                                                double ir_rel, double slack) {
  MonotonicityVerdict v;
  const double threshold = ir_rel * i_r_star.norm();
  std::size_t start = traj.size();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.diagnostics[k].err_ir <= threshold) {
      start = k;
      break;
    }
  }
  if (start == traj.size()) return v;
  v.window_reached = true;
  v.first_index = start;
  for (std::size_t k = start; k + 1 < traj.size(); ++k) {
    const double h0 = traj.diagnostics[k].H_tilde;
    const double h1 = traj.diagnostics[k + 1].H_tilde;
    const double rel = (h1 - h0) / std::max(std::abs(h0), 1e-300);
    if (rel > v.worst_increase) {
      v.worst_increase = rel;
      v.worst_time = traj.t[k + 1];
    }
    if (h1 - h0 > slack * std::abs(h0)) v.non_increasing = false;
  }
  return v;
}

}  // namespace phsync
