#pragma once

#include <utility>

#include "qsol/moments.hpp"
#include "qsol/params.hpp"
#include "qsol/types.hpp"

namespace qsol {

// Two-site quadrature covariance in the ordering (q_k, p_k, q_l, p_l) with
// vacuum = I/2.  Built from the connected moments, so it is independent of
// whether the state is stored in absolute or rescaled form.
struct CovarianceMatrix {
  Eigen::Matrix4d sigma;
  Index site_k = 0;
  Index site_l = 0;
};

CovarianceMatrix covariance(const MomentState& state, const SystemParams& params, Index site_k,
                            Index site_l);

// Symplectic spectrum {nu_minus, nu_plus} of a two-mode covariance matrix.
// Physical states satisfy nu_minus >= 1/2.
std::pair<double, double> symplectic_eigenvalues(const Eigen::Matrix4d& sigma);

// Logarithmic negativity from the partially transposed covariance matrix
// (momentum flip on the second mode); zero for separable Gaussian states.
double log_negativity(const Eigen::Matrix4d& sigma);
double log_negativity(const MomentState& state, const SystemParams& params, Index site_k,
                      Index site_l);

// Pairwise map E_N(k, l) over the whole array; symmetric with zero diagonal.
MatrixXr negativity_map(const MomentState& state, const SystemParams& params);

}  // namespace qsol
