#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "../support/fixtures.hpp"
#include "phsync/algebra.hpp"
#include "phsync/model.hpp"

using namespace phsync;
using namespace phsync::testing;

TEST_SUITE("model") {
  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(three_machine().validate());
    CHECK_NOTHROW(single_machine().validate());

    SystemParams p = three_machine();
    p.R_s[1] = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);

    p = three_machine();
    p.L_m[0] = std::sqrt(p.L_s[0] * p.L_r[0]) * 1.001;
    CHECK_THROWS_AS(p.validate(), ParameterError);

    p = three_machine();
    p.incidence(0, 0) = 1;  // column with two +1
    CHECK_THROWS_AS(p.validate(), ParameterError);

    p = two_machine();
    p.incidence = Mat::Zero(2, 0);
    p.L_t.resize(0);
    p.R_t.resize(0);
    CHECK_THROWS_AS(p.validate(), ParameterError);  // disconnected

    p = three_machine();
    p.G.conservativeResize(2);
    CHECK_THROWS_AS(p.validate(), ParameterError);
  }

  TEST_CASE("machine inductance structure") {
    SystemParams p = single_machine();
    const Mat L0 = machine_inductance(p, Vec::Zero(1));
    const Mat expect = (Mat(3, 3) << p.L_s[0], 0, p.L_m[0], 0, p.L_s[0], 0, p.L_m[0], 0, p.L_r[0]).finished();
    CHECK((L0 - expect).cwiseAbs().maxCoeff() == 0.0);

    p = three_machine();
    p.L_m.setZero();
    const Mat Ld = machine_inductance(p, Vec{{0.3, 1.0, -2.0}});
    CHECK(Ld.isDiagonal(0.0));

    p = three_machine();
    Rng rng(21);
    for (int k = 0; k < 50; ++k) {
      const Vec th = rng.angles(3);
      const Mat L = machine_inductance(p, th);
      CHECK((L - dense_inductance(p, th)).cwiseAbs().maxCoeff() <= 1e-15);
      CHECK((L - L.transpose()).isZero(0.0));
      CHECK(Eigen::SelfAdjointEigenSolver<Mat>(L).eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("currents and fluxes are an inverse pair") {
    const SystemParams p = three_machine();
    Rng rng(22);
    const MachineCurrents zero = currents_from_fluxes(p, Vec::Zero(3), Vec::Zero(6), Vec::Zero(3));
    CHECK(zero.i_s.isZero(0.0));
    CHECK(zero.i_r.isZero(0.0));
    for (int k = 0; k < 100; ++k) {
      const Vec th = rng.angles(3), is = rng.uniform(6, -1000, 1000), ir = rng.uniform(3, -4000, 4000);
      const MachineFluxes f = fluxes_from_currents(p, th, is, ir);
      Vec i(9), lam(9);
      i << is, ir;
      lam << f.lambda_s, f.lambda_r;
      CHECK(rel_err(lam, dense_inductance(p, th) * i) <= 1e-14);
      const MachineCurrents c = currents_from_fluxes(p, th, f.lambda_s, f.lambda_r);
      CHECK(rel_err(c.i_s, is) <= 1e-10);
      CHECK(rel_err(c.i_r, ir) <= 1e-10);
    }
    // linearity
    const Vec th = rng.angles(3);
    const Vec a = rng.uniform(6, -1, 1), b = rng.uniform(6, -1, 1), ra = rng.uniform(3, -1, 1),
              rb = rng.uniform(3, -1, 1);
    const MachineFluxes fa = fluxes_from_currents(p, th, a, ra), fb = fluxes_from_currents(p, th, b, rb),
                        fab = fluxes_from_currents(p, th, a + b, ra + rb);
    CHECK((fab.lambda_s - fa.lambda_s - fb.lambda_s).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((fab.lambda_r - fa.lambda_r - fb.lambda_r).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("single machine with unit currents") {
    const SystemParams p = single_machine();
    const MachineFluxes f = fluxes_from_currents(p, Vec::Zero(1), Vec{{1.0, 0.0}}, Vec::Ones(1));
    CHECK(f.lambda_s[0] == doctest::Approx(p.L_s[0] + p.L_m[0]).epsilon(1e-15));
    CHECK(f.lambda_s[1] == 0.0);
    CHECK(f.lambda_r[0] == doctest::Approx(p.L_m[0] + p.L_r[0]).epsilon(1e-15));
    const MachineCurrents c = currents_from_fluxes(p, Vec::Zero(1), f.lambda_s, f.lambda_r);
    CHECK(c.i_s[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(c.i_s[1]) <= 1e-12);
    CHECK(c.i_r[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("electrical torque") {
    const SystemParams p = three_machine();
    Rng rng(23);
    const Vec th = rng.angles(3);
    CHECK(electrical_torque(p, th, Vec::Zero(3), rng.uniform(6, -1, 1)).isZero(0.0));
    CHECK(electrical_torque(p, th, rng.uniform(3, -1, 1), Vec::Zero(6)).isZero(0.0));
    // explicit per-machine formula
    const Vec ir = rng.uniform(3, -10, 10), is = rng.uniform(6, -10, 10);
    const Vec tau = electrical_torque(p, th, ir, is);
    for (Index i = 0; i < 3; ++i) {
      const double expect = -ir[i] * p.L_m[i] * (-std::sin(th[i]) * is[2 * i] + std::cos(th[i]) * is[2 * i + 1]);
      CHECK(tau[i] == doctest::Approx(expect).epsilon(1e-13));
    }
    // derivative of the magnetic energy at fixed fluxes
    for (int k = 0; k < 20; ++k) {
      const State x = random_state(p, rng);
      const MachineCurrents c = currents_from_fluxes(p, x.theta, x.lambda_s, x.lambda_r);
      CHECK(rel_err(electrical_torque(p, x.theta, c.i_r, c.i_s), fd_torque(p, x, 1e-5)) <= 1e-5);
    }
  }

  TEST_CASE("induced voltages") {
    const SystemParams p = three_machine();
    Rng rng(24);
    const Vec th = rng.angles(3), ir = rng.uniform(3, 0, 4000), is = rng.uniform(6, -500, 500);
    CHECK(stator_emf(p, th, Vec::Zero(3), ir, Vec::Zero(3)).isZero(0.0));
    CHECK(rotor_emf(p, th, Vec::Zero(3), is, Vec::Zero(6)).isZero(0.0));

    // constant rotor current at synchronous speed
    const Vec xi = stator_emf(p, th, Vec::Constant(3, kOmega0), ir, Vec::Zero(3));
    const Vec expect = algebra::rotate(th, algebra::embed_e2(p.L_m) * ir) * kOmega0;
    CHECK(rel_err(xi, expect) <= 1e-14);

    // finite differences along a smooth synthetic path
    const Vec w = rng.uniform(3, 300, 330), dir = rng.uniform(3, -50, 50), dis = rng.uniform(6, -2000, 2000);
    auto coupled_s = [&](double t) {
      return Vec(algebra::rotate(th + w * t, algebra::embed_e1(p.L_m) * (ir + dir * t)));
    };
    auto coupled_r = [&](double t) {
      return Vec(algebra::embed_e1(p.L_m).transpose() * algebra::rotate_transpose(th + w * t, is + dis * t));
    };
    const double h = 1e-6;
    CHECK(rel_err(stator_emf(p, th, w, ir, dir), (coupled_s(h) - coupled_s(-h)) / (2 * h)) <= 1e-5);
    CHECK(rel_err(rotor_emf(p, th, w, is, dis), (coupled_r(h) - coupled_r(-h)) / (2 * h)) <= 1e-5);
  }

  TEST_CASE("hamiltonian") {
    const SystemParams p = three_machine();
    CHECK(hamiltonian(p, State::zeros(p)) == 0.0);
    Rng rng(25);
    for (int k = 0; k < 20; ++k) {
      const State x = random_state(p, rng);
      const double H = hamiltonian(p, x);
      CHECK(H > 0.0);
      State x2 = x;
      x2.omega *= 2;
      x2.lambda_r *= 2;
      x2.lambda_s *= 2;
      x2.v *= 2;
      x2.i_t *= 2;
      CHECK(hamiltonian(p, x2) == doctest::Approx(4 * H).epsilon(1e-13));
      CHECK(magnetic_energy(p, x.theta, x.lambda_s, x.lambda_r) ==
            doctest::Approx(dense_magnetic_energy(p, x.theta, x.lambda_s, x.lambda_r)).epsilon(1e-12));
    }
  }

  TEST_CASE("co-energy is the gradient of the hamiltonian") {
    const SystemParams p = three_machine();
    Rng rng(26);
    for (int k = 0; k < 10; ++k) {
      const State x = random_state(p, rng);
      const CoEnergy e = co_energy(p, x);
      // gradient with respect to (M omega, theta, lambda_r, lambda_s, C v, L_t i_t)
      auto H_of = [&](const Vec& q) {
        State y = x;
        Index o = 0;
        y.omega = q.segment(o, 3).cwiseQuotient(p.M), o += 3;
        y.theta = q.segment(o, 3), o += 3;
        y.lambda_r = q.segment(o, 3), o += 3;
        y.lambda_s = q.segment(o, 6), o += 6;
        y.v = q.segment(o, 6).cwiseQuotient(algebra::kron_expand_diag(p.C).diagonal()), o += 6;
        y.i_t = q.segment(o, 6).cwiseQuotient(algebra::kron_expand_diag(p.L_t).diagonal());
        return hamiltonian(p, y);
      };
      Vec q(27);
      q << p.M.cwiseProduct(x.omega), x.theta, x.lambda_r, x.lambda_s,
          algebra::kron_expand_diag(p.C).diagonal().cwiseProduct(x.v),
          algebra::kron_expand_diag(p.L_t).diagonal().cwiseProduct(x.i_t);
      Vec g(27);
      // H is quadratic in everything but the angles, so wide steps only cost
      // truncation error in the angle rows
      for (Index i = 0; i < 27; ++i) {
        const double h = (i >= 3 && i < 6) ? 1e-5 : 1e-3 * std::max(1.0, std::abs(q[i]));
        Vec qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        g[i] = (H_of(qp) - H_of(qm)) / (2 * h);
      }
      CHECK(rel_err(g.segment(0, 3), e.omega) <= 1e-5);
      CHECK(rel_err(g.segment(3, 3), e.tau_e) <= 1e-5);
      CHECK(rel_err(g.segment(6, 3), e.i_r) <= 1e-5);
      CHECK(rel_err(g.segment(9, 6), e.i_s) <= 1e-5);
      CHECK(rel_err(g.segment(15, 6), e.v) <= 1e-5);
      CHECK(rel_err(g.segment(21, 6), e.i_t) <= 1e-5);
    }
  }

  TEST_CASE("hamiltonian is invariant under a common rotation") {
    const SystemParams p = three_machine();
    Rng rng(27);
    for (int k = 0; k < 20; ++k) {
      const State x = random_state(p, rng);
      const double s = rng.uniform(-10, 10);
      State y = x;
      y.theta.array() += s;
      y.lambda_s = algebra::rotate_uniform(s, x.lambda_s);
      y.v = algebra::rotate_uniform(s, x.v);
      y.i_t = algebra::rotate_uniform(s, x.i_t);
      CHECK(std::abs(hamiltonian(p, y) - hamiltonian(p, x)) <= 1e-10 * hamiltonian(p, x));
    }
  }

  TEST_CASE("state packing") {
    const SystemParams p = three_machine();
    Rng rng(28);
    const State x = random_state(p, rng);
    const Vec v = x.pack();
    CHECK(v.size() == State::packed_size(p));
    CHECK(State::unpack(p, v).pack() == v);
  }
}
