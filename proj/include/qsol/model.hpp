#pragma once

#include "qsol/params.hpp"
#include "qsol/types.hpp"

namespace qsol {

using ClassicalField = VectorXc;

// d(alpha_k)/dz = i(alpha_{k-1} + alpha_{k+1}) + i |alpha_k|^2 alpha_k
// on an open chain: out-of-range neighbours are zero.
template <typename Derived>
VectorXc dnls_rhs(const Eigen::MatrixBase<Derived>& field) {
  const Index n = field.size();
  VectorXc out(n);
  for (Index k = 0; k < n; ++k) {
    Complex nb{0.0, 0.0};
    if (k > 0) nb += field(k - 1);
    if (k + 1 < n) nb += field(k + 1);
    out(k) = kI * (nb + std::norm(Complex(field(k))) * field(k));
  }
  return out;
}

struct ClassicalInvariants {
  double norm = 0.0;         // total power  sum |alpha_k|^2
  double hamiltonian = 0.0;  // sum 2 Re(alpha_k^* alpha_{k+1}) + (1/2) sum |alpha_k|^4
};

template <typename Derived>
ClassicalInvariants classical_invariants(const Eigen::MatrixBase<Derived>& field) {
  ClassicalInvariants inv;
  const Index n = field.size();
  for (Index k = 0; k < n; ++k) {
    const double p = std::norm(Complex(field(k)));
    inv.norm += p;
    inv.hamiltonian += 0.5 * p * p;
    if (k + 1 < n) inv.hamiltonian += 2.0 * std::real(std::conj(Complex(field(k))) * Complex(field(k + 1)));
  }
  return inv;
}

// Fixed-step RK4 propagation of the classical field to distance z (the step is
// snapped to divide z exactly so trajectories are reproducible bit for bit).
ClassicalField propagate_classical(ClassicalField field, double z, double step);

}  // namespace qsol
