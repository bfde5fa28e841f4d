#pragma once

#include <vector>

#include "qsol/cumulants.hpp"
#include "qsol/moments.hpp"

namespace qsol {

// Truncated product Fock space for the few-mode verification oracle.  Mode j
// occupies digit j of the state index in base (cutoff + 1), mode 0 least
// significant.  Deliberately small: at most 3 modes and cutoff 30, enough for
// the two-mode cross-checks the oracle exists for.
class FockBasis {
 public:
  FockBasis(int n_modes, int cutoff);

  int modes() const { return modes_; }
  int cutoff() const { return cutoff_; }
  Index dimension() const { return dim_; }

  Index index(const std::vector<int>& occ) const;
  int occupation(Index state, int mode) const;

 private:
  int modes_ = 0;
  int cutoff_ = 0;
  Index dim_ = 0;
};

// Product of truncated coherent states with the given canonical (b-unit)
// amplitudes, renormalized.  TruncationOverflow if any mode leaves more than
// 1e-10 of its population above the cutoff.
VectorXc coherent_state(const FockBasis& basis, const VectorXc& amplitudes);

VectorXc apply_annihilation(const FockBasis& basis, const VectorXc& psi, int mode);
VectorXc apply_creation(const FockBasis& basis, const VectorXc& psi, int mode);

// Probability mass sitting in the outermost occupation shell (any mode at the
// cutoff); the truncation-quality witness.
double cutoff_shell_population(const FockBasis& basis, const VectorXc& psi);

// Exact lossless propagation to distance z.  The generator is fixed by
// requiring the Ehrenfest equation for <b_k> to reproduce the classical field
// equation term for term: nearest-neighbor hopping plus (L/2) n(n-1) on-site,
// evolved as dpsi/dz = +i H psi.  Absorption is not supported here.
// TruncationOverflow if the cutoff shell holds more than 1e-8 afterwards.
VectorXc exact_propagate(const FockBasis& basis, const VectorXc& psi0, const SystemParams& params,
                         double z);

// <b_k> per mode, canonical units.
VectorXc mean_field(const FockBasis& basis, const VectorXc& psi);

// <n_k> per mode.
VectorXr mean_occupations(const FockBasis& basis, const VectorXc& psi);

// Exact state moments mapped into the pipeline's absolute normalization:
// alpha = sqrt(L) <b>, Delta = L x connected second moments, kappa = L^{3/2} x
// connected third cumulants.  Requires L > 0.
struct ExactMoments {
  MomentState moments;
  ThirdCumulantState kappa;
};

ExactMoments exact_moments(const FockBasis& basis, const VectorXc& psi, const SystemParams& params);

}  // namespace qsol
