#include "qsol/entanglement.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "qsol/errors.hpp"

namespace qsol {

namespace {

// Quadrature block between two modes from nu = <d^dag_a d_b>, mu = <d_a d_b>;
// rows (q_a, p_a), columns (q_b, p_b).
Eigen::Matrix2d quad_block(Complex nu, Complex mu, bool same_mode) {
  Eigen::Matrix2d blk;
  const double vac = same_mode ? 0.5 : 0.0;
  blk(0, 0) = std::real(nu + mu) + vac;
  blk(0, 1) = std::imag(mu + nu);
  blk(1, 0) = std::imag(mu - nu);
  blk(1, 1) = std::real(nu - mu) + vac;
  return blk;
}

const Eigen::Matrix4d& omega_form() {
  static const Eigen::Matrix4d w = [] {
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m(0, 1) = 1.0;
    m(1, 0) = -1.0;
    m(2, 3) = 1.0;
    m(3, 2) = -1.0;
    return m;
  }();
  return w;
}

std::array<double, 4> symplectic_moduli(const Eigen::Matrix4d& sigma) {
  const Eigen::EigenSolver<Eigen::Matrix4d> es(omega_form() * sigma);
  std::array<double, 4> mod{};
  for (Index i = 0; i < 4; ++i) mod[static_cast<int>(i)] = std::abs(es.eigenvalues()(i));
  std::sort(mod.begin(), mod.end());
  return mod;
}

}  // namespace

CovarianceMatrix covariance(const MomentState& state, const SystemParams& params, Index site_k,
                            Index site_l) {
  const Index n = state.sites();
  if (site_k < 0 || site_k >= n || site_l < 0 || site_l >= n)
    fail(ErrorCode::config, "covariance site index out of range");
  if (site_k == site_l) fail(ErrorCode::config, "covariance needs two distinct sites");
  const auto [nu, mu] = connected_moments(state, params);

  CovarianceMatrix cov;
  cov.site_k = site_k;
  cov.site_l = site_l;
  const std::array<Index, 2> site{site_k, site_l};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      cov.sigma.block<2, 2>(2 * a, 2 * b) =
          quad_block(nu(site[a], site[b]), mu(site[a], site[b]), a == b);
  cov.sigma = (0.5 * (cov.sigma + cov.sigma.transpose())).eval();
  return cov;
}

std::pair<double, double> symplectic_eigenvalues(const Eigen::Matrix4d& sigma) {
  const auto mod = symplectic_moduli(sigma);
  return {0.5 * (mod[0] + mod[1]), 0.5 * (mod[2] + mod[3])};
}

double log_negativity(const Eigen::Matrix4d& sigma) {
  Eigen::Matrix4d tilde = sigma;
  tilde.col(3) *= -1.0;
  tilde.row(3) *= -1.0;
  double en = 0.0;
  for (const double m : symplectic_moduli(tilde)) en -= 0.5 * std::log2(std::min(1.0, 2.0 * m));
  return en < 1e-12 ? 0.0 : en;
}

double log_negativity(const MomentState& state, const SystemParams& params, Index site_k,
                      Index site_l) {
  return log_negativity(covariance(state, params, site_k, site_l).sigma);
}

MatrixXr negativity_map(const MomentState& state, const SystemParams& params) {
  const Index n = state.sites();
  MatrixXr map = MatrixXr::Zero(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index l = k + 1; l < n; ++l)
      map(k, l) = map(l, k) = log_negativity(state, params, k, l);
  return map;
}

}  // namespace qsol
