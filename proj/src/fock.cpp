#include "qsol/fock.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace qsol {

FockBasis::FockBasis(int n_modes, int cutoff) : modes_(n_modes), cutoff_(cutoff) {
  if (n_modes < 1 || n_modes > 3)
    fail(ErrorCode::config, "fock oracle supports 1 to 3 modes");
  if (cutoff < 1 || cutoff > 30) fail(ErrorCode::config, "fock cutoff must lie in [1, 30]");
  dim_ = 1;
  for (int j = 0; j < n_modes; ++j) dim_ *= cutoff + 1;
}

Index FockBasis::index(const std::vector<int>& occ) const {
  if (static_cast<int>(occ.size()) != modes_)
    fail(ErrorCode::dimension_mismatch, "occupation list does not match mode count");
  Index idx = 0;
  Index stride = 1;
  for (int j = 0; j < modes_; ++j) {
    if (occ[j] < 0 || occ[j] > cutoff_) fail(ErrorCode::config, "occupation outside cutoff");
    idx += occ[j] * stride;
    stride *= cutoff_ + 1;
  }
  return idx;
}

int FockBasis::occupation(Index state, int mode) const {
  Index stride = 1;
  for (int j = 0; j < mode; ++j) stride *= cutoff_ + 1;
  return static_cast<int>((state / stride) % (cutoff_ + 1));
}

VectorXc coherent_state(const FockBasis& basis, const VectorXc& amplitudes) {
  if (amplitudes.size() != basis.modes())
    fail(ErrorCode::dimension_mismatch, "amplitude list does not match mode count");
  const int c = basis.cutoff();
  // Per-mode truncated coherent coefficients; the dropped tail must be tiny.
  std::vector<VectorXc> mode_coeff;
  for (int j = 0; j < basis.modes(); ++j) {
    const Complex a = amplitudes(j);
    VectorXc coeff(c + 1);
    Complex term = std::exp(Complex(-0.5 * std::norm(a), 0.0));
    for (int n = 0; n <= c; ++n) {
      coeff(n) = term;
      term *= a / std::sqrt(static_cast<double>(n + 1));
    }
    const double tail = 1.0 - coeff.squaredNorm();
    if (tail > 1e-10)
      fail(ErrorCode::truncation_overflow,
           "coherent amplitude too large for the cutoff (tail " + std::to_string(tail) + ")");
    mode_coeff.push_back(std::move(coeff));
  }
  VectorXc psi(basis.dimension());
  for (Index s = 0; s < basis.dimension(); ++s) {
    Complex v{1.0, 0.0};
    for (int j = 0; j < basis.modes(); ++j) v *= mode_coeff[j](basis.occupation(s, j));
    psi(s) = v;
  }
  psi /= psi.norm();
  return psi;
}

VectorXc apply_annihilation(const FockBasis& basis, const VectorXc& psi, int mode) {
  if (mode < 0 || mode >= basis.modes()) fail(ErrorCode::config, "mode index out of range");
  Index stride = 1;
  for (int j = 0; j < mode; ++j) stride *= basis.cutoff() + 1;
  VectorXc out = VectorXc::Zero(psi.size());
  for (Index s = 0; s < psi.size(); ++s) {
    const int n = basis.occupation(s, mode);
    if (n > 0) out(s - stride) += std::sqrt(static_cast<double>(n)) * psi(s);
  }
  return out;
}

VectorXc apply_creation(const FockBasis& basis, const VectorXc& psi, int mode) {
  if (mode < 0 || mode >= basis.modes()) fail(ErrorCode::config, "mode index out of range");
  Index stride = 1;
  for (int j = 0; j < mode; ++j) stride *= basis.cutoff() + 1;
  VectorXc out = VectorXc::Zero(psi.size());
  for (Index s = 0; s < psi.size(); ++s) {
    const int n = basis.occupation(s, mode);
    if (n < basis.cutoff()) out(s + stride) += std::sqrt(static_cast<double>(n + 1)) * psi(s);
  }
  return out;
}

double cutoff_shell_population(const FockBasis& basis, const VectorXc& psi) {
  double p = 0.0;
  for (Index s = 0; s < psi.size(); ++s)
    for (int j = 0; j < basis.modes(); ++j)
      if (basis.occupation(s, j) == basis.cutoff()) {
        p += std::norm(psi(s));
        break;
      }
  return p;
}

VectorXc exact_propagate(const FockBasis& basis, const VectorXc& psi0, const SystemParams& params,
                         double z) {
  if (psi0.size() != basis.dimension())
    fail(ErrorCode::dimension_mismatch, "state does not match basis dimension");
  if (params.absorption != 0.0) fail(ErrorCode::config, "fock oracle is lossless (gamma must be 0)");
  const double el = params.quantum_scale;
  const Index d = basis.dimension();

  // Real symmetric H in the Fock basis: hopping moves one quantum between
  // neighboring modes, the Kerr term is diagonal.
  MatrixXr h = MatrixXr::Zero(d, d);
  for (Index s = 0; s < d; ++s) {
    double diag = 0.0;
    for (int j = 0; j < basis.modes(); ++j) {
      const double n = basis.occupation(s, j);
      diag += 0.5 * el * n * (n - 1.0);
    }
    h(s, s) = diag;
    for (int j = 0; j + 1 < basis.modes(); ++j) {
      const int nj = basis.occupation(s, j);
      const int nn = basis.occupation(s, j + 1);
      if (nj > 0 && nn < basis.cutoff()) {
        Index stride = 1;
        for (int t = 0; t < j; ++t) stride *= basis.cutoff() + 1;
        const Index s2 = s - stride + stride * (basis.cutoff() + 1);
        const double amp = std::sqrt(static_cast<double>(nj)) *
                           std::sqrt(static_cast<double>(nn + 1));
        h(s2, s) += amp;
        h(s, s2) += amp;
      }
    }
  }

  const Eigen::SelfAdjointEigenSolver<MatrixXr> es(h);
  const VectorXc phase =
      (kI * z * es.eigenvalues().array()).exp().matrix().template cast<Complex>();
  VectorXc psi = es.eigenvectors() *
                 (phase.array() * (es.eigenvectors().transpose() * psi0).array()).matrix();

  const double shell = cutoff_shell_population(basis, psi);
  if (shell > 1e-8)
    fail(ErrorCode::truncation_overflow,
         "cutoff shell populated during propagation (" + std::to_string(shell) + ")");
  return psi;
}

VectorXc mean_field(const FockBasis& basis, const VectorXc& psi) {
  VectorXc m(basis.modes());
  for (int j = 0; j < basis.modes(); ++j) m(j) = psi.dot(apply_annihilation(basis, psi, j));
  return m;
}

VectorXr mean_occupations(const FockBasis& basis, const VectorXc& psi) {
  VectorXr occ(basis.modes());
  for (int j = 0; j < basis.modes(); ++j)
    occ(j) = apply_annihilation(basis, psi, j).squaredNorm();
  return occ;
}

ExactMoments exact_moments(const FockBasis& basis, const VectorXc& psi,
                           const SystemParams& params) {
  const double el = params.quantum_scale;
  if (el <= 0.0)
    fail(ErrorCode::zero_scale, "exact moments need L > 0 to map into absolute units");
  const int n = basis.modes();

  std::vector<VectorXc> bp(n);
  for (int j = 0; j < n; ++j) bp[j] = apply_annihilation(basis, psi, j);

  VectorXc m(n);
  for (int j = 0; j < n; ++j) m(j) = psi.dot(bp[j]);

  MatrixXc nu(n, n), mu(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      nu(k, l) = bp[k].dot(bp[l]) - std::conj(m(k)) * m(l);
      mu(k, l) = psi.dot(apply_annihilation(basis, bp[l], k)) - m(k) * m(l);
    }

  ExactMoments out;
  out.moments.z = 0.0;
  out.moments.rescaled = false;
  out.moments.alpha = std::sqrt(el) * m;
  out.moments.delta_n = el * nu;
  out.moments.delta_a = el * mu;

  out.kappa = initial_cumulants(n, false);
  const double k_scale = el * std::sqrt(el);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int q = 0; q < n; ++q) {
        const VectorXc blq = apply_annihilation(basis, bp[q], l);
        const Complex t_aaa = psi.dot(apply_annihilation(basis, blq, k));
        const Complex t_naa = bp[k].dot(blq);
        out.kappa.kappa_aaa(k, l, q) =
            k_scale * (t_aaa - m(k) * mu(l, q) - m(l) * mu(k, q) - m(q) * mu(k, l) -
                       m(k) * m(l) * m(q));
        out.kappa.kappa_naa(k, l, q) =
            k_scale * (t_naa - std::conj(m(k)) * mu(l, q) - m(l) * nu(k, q) - m(q) * nu(k, l) -
                       std::conj(m(k)) * m(l) * m(q));
      }
  return out;
}

}  // namespace qsol
