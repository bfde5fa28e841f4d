#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qsol/fock.hpp"

using namespace qsol;

namespace {

double rel_err(const MatrixXc& got, const MatrixXc& want) {
  return (got - want).norm() / want.norm();
}

double rel_err(const VectorXc& got, const VectorXc& want) {
  return (got - want).norm() / want.norm();
}

double tensor_rel_err(const CumulantTensor& got, const CumulantTensor& want) {
  return (got.flat() - want.flat()).norm() / want.flat().norm();
}

}  // namespace

TEST_CASE("basis indexing round trip") {
  const FockBasis basis(2, 5);
  CHECK(basis.dimension() == 36);
  for (int n0 = 0; n0 <= 5; ++n0)
    for (int n1 = 0; n1 <= 5; ++n1) {
      const Index s = basis.index({n0, n1});
      CHECK(basis.occupation(s, 0) == n0);
      CHECK(basis.occupation(s, 1) == n1);
    }
  CHECK_THROWS_AS(FockBasis(4, 5), Error);
  CHECK_THROWS_AS(FockBasis(2, 31), Error);
}

TEST_CASE("coherent state reproduces its amplitudes") {
  const FockBasis basis(2, 20);
  VectorXc a(2);
  a << Complex(1.5, 0.0), Complex(0.0, -0.8);
  const VectorXc psi = coherent_state(basis, a);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
  const VectorXc m = mean_field(basis, psi);
  CHECK(std::abs(m(0) - a(0)) < 1e-9);
  CHECK(std::abs(m(1) - a(1)) < 1e-9);
  const VectorXr occ = mean_occupations(basis, psi);
  CHECK(occ(0) == doctest::Approx(std::norm(a(0))).epsilon(1e-9));
  CHECK(occ(1) == doctest::Approx(std::norm(a(1))).epsilon(1e-9));
}

TEST_CASE("coherent amplitude beyond the cutoff is rejected") {
  const FockBasis basis(2, 6);
  VectorXc a(2);
  a << Complex(3.0, 0.0), Complex(0.0, 0.0);
  try {
    coherent_state(basis, a);
    FAIL("expected truncation overflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::truncation_overflow);
    CHECK(exit_status(e.code()) == 3);
  }
}

TEST_CASE("connected moments of a coherent state vanish") {
  const FockBasis basis(2, 22);
  SystemParams p;
  p.quantum_scale = 0.05;
  VectorXc a(2);
  a << Complex(1.8, 0.4), Complex(-0.6, 0.9);
  const auto ex = exact_moments(basis, coherent_state(basis, a), p);
  CHECK(rel_err(ex.moments.alpha, (std::sqrt(0.05) * a).eval()) < 1e-9);
  CHECK(ex.moments.delta_n.norm() < 1e-9);
  CHECK(ex.moments.delta_a.norm() < 1e-9);
  CHECK(ex.kappa.kappa_aaa.flat().norm() < 1e-9);
  CHECK(ex.kappa.kappa_naa.flat().norm() < 1e-9);
}

TEST_CASE("lossless two-mode hopping matches the closed form") {
  const FockBasis basis(2, 24);
  SystemParams p;
  p.quantum_scale = 0.0;  // linear oracle, pure hopping
  VectorXc a(2);
  a << Complex(2.0, 0.0), Complex(0.0, 0.0);
  const VectorXc psi0 = coherent_state(basis, a);
  const double z = 0.4;
  const VectorXc psi = exact_propagate(basis, psi0, p, z);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-10);

  const VectorXc m = mean_field(basis, psi);
  CHECK(std::abs(m(0) - Complex(2.0 * std::cos(z), 0.0)) < 1e-8);
  CHECK(std::abs(m(1) - Complex(0.0, 2.0 * std::sin(z))) < 1e-8);

  const VectorXr occ = mean_occupations(basis, psi);
  CHECK(occ.sum() == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("ehrenfest derivative matches the classical field equation") {
  const FockBasis basis(2, 24);
  SystemParams p;
  p.quantum_scale = 0.05;
  VectorXc a(2);
  a << Complex(2.0, 0.0), Complex(0.0, 0.5);
  const VectorXc psi0 = coherent_state(basis, a);
  const double h = 1e-3;
  const VectorXc mp = mean_field(basis, exact_propagate(basis, psi0, p, h));
  const VectorXc mm = mean_field(basis, exact_propagate(basis, psi0, p, -h));
  const VectorXc deriv = (mp - mm) / (2.0 * h);
  // On a coherent state the normal ordering factorizes exactly, so the
  // Ehrenfest rhs at z = 0 is the classical one with b-unit Kerr strength L.
  VectorXc want(2);
  want(0) = kI * (a(1) + p.quantum_scale * std::norm(a(0)) * a(0));
  want(1) = kI * (a(0) + p.quantum_scale * std::norm(a(1)) * a(1));
  CHECK(rel_err(deriv, want) < 1e-5);
}

TEST_CASE("absorption is rejected by the oracle") {
  const FockBasis basis(2, 8);
  SystemParams p;
  p.absorption = 0.1;
  VectorXc a(2);
  a << Complex(0.5, 0.0), Complex(0.0, 0.0);
  const VectorXc psi0 = coherent_state(basis, a);
  try {
    exact_propagate(basis, psi0, p, 0.1);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }
}

TEST_CASE("propagation into the cutoff shell is caught") {
  const FockBasis basis(2, 4);
  SystemParams p;
  p.quantum_scale = 0.0;
  VectorXc psi0 = VectorXc::Zero(basis.dimension());
  psi0(basis.index({3, 3})) = 1.0;  // hopping pushes weight onto n = 4
  CHECK_THROWS_AS(exact_propagate(basis, psi0, p, 0.5), Error);
  try {
    exact_propagate(basis, psi0, p, 0.5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::truncation_overflow);
  }
}

TEST_CASE("exact cumulants keep their slot symmetries") {
  const FockBasis basis(2, 24);
  SystemParams p;
  p.quantum_scale = 0.05;
  VectorXc a(2);
  a << Complex(2.0, 0.0), Complex(0.3, 0.0);
  const auto ex = exact_moments(basis, exact_propagate(basis, coherent_state(basis, a), p, 0.3), p);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(ex.kappa.kappa_aaa(i, j, k) - ex.kappa.kappa_aaa(j, i, k)) < 1e-12);
        CHECK(std::abs(ex.kappa.kappa_aaa(i, j, k) - ex.kappa.kappa_aaa(i, k, j)) < 1e-12);
        CHECK(std::abs(ex.kappa.kappa_naa(i, j, k) - ex.kappa.kappa_naa(i, k, j)) < 1e-12);
      }
}

TEST_CASE("oracle and closure agree in the gaussian regime") {
  // Two coupled Kerr modes, |a|^2 = 4 quanta in the driven mode.  The closure
  // and the exact propagation must agree while the state stays near-Gaussian.
  const FockBasis basis(2, 24);
  SystemParams p;
  p.n_sites = 2;
  p.quantum_scale = 0.05;
  p.step = 1e-4;
  p.z_max = 0.1;
  VectorXc a(2);
  a << Complex(2.0, 0.0), Complex(0.0, 0.0);
  const VectorXc psi0 = coherent_state(basis, a);

  MomentState init = initial_state((std::sqrt(p.quantum_scale) * a).eval(), p);
  PropagateOptions opt;
  opt.output_stride = 1 << 20;
  const auto traj = propagate_with_cumulants(init, p, opt);

  for (const auto& snap : traj) {
    const double z = snap.moments.z;
    if (z == 0.0) continue;
    const auto ex = exact_moments(basis, exact_propagate(basis, psi0, p, z), p);
    CHECK(rel_err(snap.moments.alpha, ex.moments.alpha) < 1e-2);
    CHECK(rel_err(snap.moments.delta_n, ex.moments.delta_n) < 1e-2);
    CHECK(rel_err(snap.moments.delta_a, ex.moments.delta_a) < 1e-2);
    CHECK(tensor_rel_err(snap.kappa.kappa_aaa, ex.kappa.kappa_aaa) < 5e-2);
    CHECK(tensor_rel_err(snap.kappa.kappa_naa, ex.kappa.kappa_naa) < 5e-2);
  }
}

TEST_CASE("closure error shrinks with the quantum scale") {
  // Same classical profile, decreasing L: the Gaussian closure's second
  // moments must approach the exact ones.
  const double z = 0.12;
  VectorXc alpha(2);
  alpha << Complex(0.45, 0.0), Complex(0.0, 0.0);
  double previous = 1e300;
  for (const double el : {0.1, 0.05, 0.03}) {
    const FockBasis basis(2, 29);
    SystemParams p;
    p.n_sites = 2;
    p.quantum_scale = el;
    p.step = 1e-4;
    p.z_max = z;
    const VectorXc a = alpha / std::sqrt(el);
    const auto ex = exact_moments(basis, exact_propagate(basis, coherent_state(basis, a), p, z), p);

    PropagateOptions opt;
    opt.output_stride = 1 << 20;
    const auto traj = propagate_with_cumulants(initial_state(alpha, p), p, opt);
    const auto& last = traj.back().moments;
    const double err = rel_err(last.delta_n, ex.moments.delta_n) +
                       rel_err(last.delta_a, ex.moments.delta_a);
    CHECK(err < previous);
    previous = err;
  }
}
