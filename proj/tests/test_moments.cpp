#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "qsol/moments.hpp"

using namespace qsol;

namespace {

SystemParams make_params(int n, double el, double gamma, double z_max, double step = 1e-3) {
  SystemParams p;
  p.n_sites = n;
  p.omega = 10.0;
  p.quantum_scale = el;
  p.absorption = gamma;
  p.z_max = z_max;
  p.step = step;
  return p;
}

MomentState soliton_input(const SystemParams& params) {
  const SolitonProfile prof = solve_soliton(seed_profile(SolitonKind::fundamental(), params), params);
  return initial_state(prof, params);
}

}  // namespace

TEST_CASE("single-site rhs against hand values") {
  const SystemParams params = make_params(1, 0.5, 0.0, 1.0);
  MomentState s = initial_state(VectorXc::Constant(1, Complex(2.0, 0.0)), params);
  const MomentState dot = moment_rhs(s, params);
  CHECK(std::abs(dot.alpha(0) - Complex(0.0, 8.0)) < 1e-15);
  CHECK(std::abs(dot.delta_n(0, 0)) < 1e-15);
  // vacuum source i L alpha^2 on the anomalous diagonal
  CHECK(std::abs(dot.delta_a(0, 0) - Complex(0.0, 2.0)) < 1e-15);
}

TEST_CASE("absolute moments are undefined at L = 0") {
  const SystemParams params = make_params(3, 0.0, 0.0, 1.0);
  MomentState s = initial_state(VectorXc::Ones(3), params);
  CHECK(s.rescaled);
  s.rescaled = false;
  try {
    moment_rhs(s, params);
    FAIL("expected zero_scale");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_scale);
  }
}

TEST_CASE("matrix symmetries survive propagation") {
  const SystemParams params = make_params(9, 0.05, 0.1, 0.5);
  PropagationLog log;
  const auto traj = propagate(soliton_input(params), params, {}, {}, &log);
  CHECK(traj.size() >= 2);
  CHECK(log.max_hermiticity_defect < 1e-12);
  CHECK(log.max_symmetry_defect < 1e-12);
  CHECK(log.min_delta_n_diagonal > -1e-10);
}

TEST_CASE("total power is conserved without absorption") {
  const SystemParams params = make_params(11, 0.01, 0.0, 0.5);
  const MomentState init = soliton_input(params);
  const auto traj = propagate(init, params);
  const double p0 = total_power(init, params);
  for (const auto& s : traj)
    CHECK(std::abs(total_power(s, params) - p0) / p0 < 1e-8);
}

TEST_CASE("total power decays exponentially under absorption") {
  const double gamma = 0.3;
  const SystemParams params = make_params(11, 0.01, gamma, 0.5);
  const MomentState init = soliton_input(params);
  const auto traj = propagate(init, params);
  const double p0 = total_power(init, params);
  for (const auto& s : traj) {
    const double expect = p0 * std::exp(-gamma * s.z);
    CHECK(std::abs(total_power(s, params) - expect) / expect < 1e-6);
  }
}

TEST_CASE("weak fields follow the damped linear chain") {
  const int n = 7;
  const SystemParams params = make_params(n, 0.01, 0.4, 1.0);
  VectorXc alpha0(n);
  for (int k = 0; k < n; ++k) alpha0(k) = 1e-3 * std::exp(kI * (0.3 * k)) / (1.0 + k);
  const auto traj = propagate(initial_state(alpha0, params), params);

  MatrixXr hop = MatrixXr::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) hop(k, k + 1) = hop(k + 1, k) = 1.0;
  const Eigen::SelfAdjointEigenSolver<MatrixXr> es(hop);
  for (const auto& s : traj) {
    const VectorXc phases =
        (kI * s.z * es.eigenvalues().cast<Complex>().array()).exp().matrix();
    const VectorXc linear = std::exp(-0.5 * params.absorption * s.z) *
                            (es.eigenvectors().cast<Complex>() * phases.asDiagonal() *
                             es.eigenvectors().transpose().cast<Complex>() * alpha0);
    CHECK((s.alpha - linear).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("global phase covariance of the closed system") {
  const SystemParams params = make_params(9, 0.05, 0.0, 0.3);
  const MomentState init = soliton_input(params);
  MomentState rotated = init;
  const Complex phase = std::exp(kI * 0.9);
  rotated.alpha *= phase;
  const MomentState a = propagate(init, params).back();
  const MomentState b = propagate(rotated, params).back();
  CHECK((b.alpha - phase * a.alpha).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((b.delta_n - a.delta_n).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((b.delta_a - phase * phase * a.delta_a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rescaled and absolute modes agree where both exist") {
  const double el = 1e-3;
  const SystemParams params = make_params(9, el, 0.2, 0.5);
  const MomentState init = soliton_input(params);
  MomentState init_rescaled = init;
  init_rescaled.rescaled = true;
  const MomentState a = propagate(init, params).back();
  const MomentState r = propagate(init_rescaled, params).back();
  CHECK((a.alpha - r.alpha).cwiseAbs().maxCoeff() < 1e-9);
  const double scale = a.delta_n.cwiseAbs().maxCoeff();
  CHECK((a.delta_n - el * r.delta_n).cwiseAbs().maxCoeff() < 1e-9 * scale);
  CHECK((a.delta_a - el * r.delta_a).cwiseAbs().maxCoeff() < 1e-9 * scale);
  // connected moments normalize both representations to the same object
  const auto [dn_a, da_a] = connected_moments(a, params);
  const auto [dn_r, da_r] = connected_moments(r, params);
  CHECK((dn_a - dn_r).cwiseAbs().maxCoeff() / dn_r.cwiseAbs().maxCoeff() < 1e-8);
  CHECK((da_a - da_r).cwiseAbs().maxCoeff() / da_r.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rescaled moments approach the classical limit continuously") {
  auto final_dn = [](double el) {
    const SystemParams params = make_params(9, el, 0.0, 0.3);
    MomentState init = soliton_input(params);
    init.rescaled = true;
    return connected_moments(propagate(init, params).back(), params).first;
  };
  const MatrixXc limit = final_dn(0.0);
  const double scale = limit.cwiseAbs().maxCoeff();
  const double d3 = (final_dn(1e-3) - limit).cwiseAbs().maxCoeff() / scale;
  const double d4 = (final_dn(1e-4) - limit).cwiseAbs().maxCoeff() / scale;
  CHECK(d3 < 1e-2);
  CHECK(d4 < d3);
}

TEST_CASE("fixed-step integration converges at fourth order") {
  VectorXc alpha0(5);
  alpha0 << Complex(0.4, 0.1), Complex(1.5, 0.0), Complex(2.9, -0.2), Complex(1.2, 0.3),
      Complex(0.5, 0.0);
  auto run = [&](double step) {
    const SystemParams params = make_params(5, 0.05, 0.1, 0.2, step);
    return propagate(initial_state(alpha0, params), params, {.output_stride = 1 << 20}).back();
  };
  const MomentState a = run(0.02);
  const MomentState b = run(0.01);
  const MomentState c = run(0.005);
  const double coarse = (pack_moments(a) - pack_moments(b)).cwiseAbs().maxCoeff();
  const double fine = (pack_moments(b) - pack_moments(c)).cwiseAbs().maxCoeff();
  CHECK(coarse / fine > 12.0);
  CHECK(coarse / fine < 30.0);
}

TEST_CASE("adaptive stepping reproduces the fixed-step trajectory") {
  const SystemParams params = make_params(9, 0.05, 0.0, 0.3);
  const MomentState init = soliton_input(params);
  const MomentState fixed = propagate(init, params).back();
  const MomentState adaptive =
      propagate(init, params, {.output_stride = 100, .adaptive = true, .tolerance = 1e-12}).back();
  CHECK((pack_moments(fixed) - pack_moments(adaptive)).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("snapshots are spaced by the output stride") {
  const SystemParams params = make_params(5, 0.01, 0.0, 0.1, 1e-3);
  const auto traj = propagate(initial_state(VectorXc::Ones(5), params), params,
                              {.output_stride = 25});
  REQUIRE(traj.size() == 5);
  CHECK(traj.front().z == 0.0);
  CHECK(traj[1].z == doctest::Approx(0.025));
  CHECK(traj.back().z == doctest::Approx(0.1));
}

TEST_CASE("blowup raises instead of returning garbage") {
  VectorXc flat = VectorXc::Ones(4);
  flat(2) = Complex(1e13, 0.0);
  try {
    check_blowup(flat, 1e12, 0.7);
    FAIL("expected numerical_blowup");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numerical_blowup);
    CHECK(exit_status(e.code()) == 4);
  }
}
