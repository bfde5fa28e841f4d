#pragma once

#include <vector>

#include "qsol/moments.hpp"

namespace qsol {

// Dense rank-3 complex tensor over sites; no symmetry packing.
class CumulantTensor {
 public:
  CumulantTensor() = default;
  explicit CumulantTensor(Index n) : n_(n), data_(VectorXc::Zero(n * n * n)) {}

  Index sites() const { return n_; }
  Complex& operator()(Index i, Index j, Index k) { return data_((i * n_ + j) * n_ + k); }
  Complex operator()(Index i, Index j, Index k) const { return data_((i * n_ + j) * n_ + k); }
  VectorXc& flat() { return data_; }
  const VectorXc& flat() const { return data_; }

 private:
  Index n_ = 0;
  VectorXc data_;
};

// Third-order connected cumulants of the field.  kappa_aaa holds the
// all-annihilation pattern (fully symmetric); kappa_naa has the conjugated
// operator in the first slot (symmetric in the last two).  Storage follows the
// moment state's normalization: one extra factor 1/L in the rescaled mode, so
// the tensors vanish identically in the L = 0 classical limit.
struct ThirdCumulantState {
  double z = 0.0;
  CumulantTensor kappa_aaa;
  CumulantTensor kappa_naa;
  bool rescaled = false;
};

ThirdCumulantState initial_cumulants(Index n, bool rescaled);

// One-way coupled hierarchy: the Gaussian block drives the cumulants, with
// fourth- and higher-order cumulants closed to zero.  docs/moment_hierarchy.md
// is the normative derivation.
ThirdCumulantState cumulant_rhs(const ThirdCumulantState& kappa, const MomentState& moments,
                                const SystemParams& params);

enum class MomentPattern { aaa, naa };

// Full (non-centred) third moment of the Gaussian state in canonical operator
// units, reconstructed from alpha and the connected second moments.
Complex gaussian_third_moment(const MomentState& state, const SystemParams& params,
                              MomentPattern pattern, Index k, Index l, Index m);

// Err: largest third cumulant over largest Gaussian third moment, both taken
// over the (k,k,l) slices of the two operator patterns.  +infinity when only
// the denominator underflows.
double err_metric(const MomentState& moments, const ThirdCumulantState& kappa,
                  const SystemParams& params);

struct ValiditySample {
  double z = 0.0;
  double err = 0.0;
};

// First crossing of the cap (linear interpolation between samples); z_max when
// Err stays below it.
double validity_horizon(const std::vector<ValiditySample>& series, double cap, double z_max);

struct CoupledState {
  MomentState moments;
  ThirdCumulantState kappa;
};

// Joint fixed-step integration of the Gaussian block and the cumulant monitor;
// snapshot cadence and blowup policy follow the moment propagator.
std::vector<CoupledState> propagate_with_cumulants(const MomentState& init,
                                                   const SystemParams& params,
                                                   const PropagateOptions& options = {},
                                                   PropagationLog* log = nullptr);

}  // namespace qsol
