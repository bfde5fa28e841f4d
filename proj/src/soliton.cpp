#include "qsol/soliton.hpp"

#include <cmath>
#include <sstream>

namespace qsol {

SolitonKind SolitonKind::multi_twisted(int m) {
  if (m < 1) fail(ErrorCode::config, "multi_twisted requires at least one sign change");
  return {SolitonType::multi_twisted, m};
}

std::string SolitonKind::name() const {
  switch (type) {
    case SolitonType::fundamental: return "fundamental";
    case SolitonType::twisted: return "twisted";
    case SolitonType::multi_twisted: return "multi_twisted(" + std::to_string(sign_changes) + ")";
  }
  return "?";
}

VectorXr stationary_residual(const VectorXr& beta, double omega) {
  const Index n = beta.size();
  VectorXr r(n);
  for (Index k = 0; k < n; ++k) {
    double nb = 0.0;
    if (k > 0) nb += beta(k - 1);
    if (k + 1 < n) nb += beta(k + 1);
    r(k) = -omega * beta(k) + nb + beta(k) * beta(k) * beta(k);
  }
  return r;
}

SolitonProfile seed_profile(SolitonKind kind, const SystemParams& params) {
  params.validate();
  if (!(params.omega > 2.0))
    fail(ErrorCode::unsupported_omega, "localized stationary branches require omega > 2");
  const int n = params.n_sites;
  const int block = kind.block_size();
  if (block > n) fail(ErrorCode::config, "dominant block does not fit the array");
  SolitonProfile p;
  p.beta = VectorXr::Zero(n);
  p.omega = params.omega;
  p.kind = kind;
  const int start = (n - block) / 2;
  const double amp = std::sqrt(params.omega);
  for (int j = 0; j < block; ++j) p.beta(start + j) = (j % 2 == 0) ? amp : -amp;
  p.residual = stationary_residual(p.beta, p.omega).cwiseAbs().maxCoeff();
  return p;
}

namespace {

int count_sign_changes(const VectorXr& beta) {
  const double floor = 1e-8 * beta.cwiseAbs().maxCoeff();
  int changes = 0;
  double prev = 0.0;
  for (Index k = 0; k < beta.size(); ++k) {
    if (std::abs(beta(k)) <= floor) continue;
    if (prev != 0.0 && beta(k) * prev < 0.0) ++changes;
    prev = beta(k);
  }
  return changes;
}

int count_local_maxima(const VectorXr& beta) {
  const VectorXr mag = beta.cwiseAbs();
  const double floor = 1e-8 * mag.maxCoeff();
  int maxima = 0;
  for (Index k = 0; k < mag.size(); ++k) {
    if (mag(k) <= floor) continue;
    const double left = k > 0 ? mag(k - 1) : 0.0;
    const double right = k + 1 < mag.size() ? mag(k + 1) : 0.0;
    if (mag(k) > left && mag(k) > right) ++maxima;
  }
  return maxima;
}

void check_branch(const SolitonProfile& p) {
  const double peak = p.beta.cwiseAbs().maxCoeff();
  if (peak < 1e-6)
    fail(ErrorCode::wrong_branch, p.kind.name() + " iteration collapsed to the zero solution");
  if (count_sign_changes(p.beta) != p.kind.sign_changes)
    fail(ErrorCode::wrong_branch, p.kind.name() + " converged with the wrong sign pattern");
  if (p.kind.type == SolitonType::fundamental && count_local_maxima(p.beta) != 1)
    fail(ErrorCode::wrong_branch, "fundamental profile is not single-humped");
}

}  // namespace

SolitonProfile solve_soliton(const SolitonProfile& seed, const SystemParams& params,
                             int max_iter, double tol) {
  params.validate();
  if (seed.beta.size() != params.n_sites)
    fail(ErrorCode::dimension_mismatch, "seed size does not match n_sites");
  if (!seed.beta.allFinite()) fail(ErrorCode::config, "seed must be finite");
  if (!(params.omega > 2.0))
    fail(ErrorCode::unsupported_omega, "localized stationary branches require omega > 2");

  const Index n = seed.beta.size();
  SolitonProfile p = seed;
  p.omega = params.omega;
  VectorXr f = stationary_residual(p.beta, p.omega);
  for (int iter = 0; iter <= max_iter; ++iter) {
    p.residual = f.cwiseAbs().maxCoeff();
    if (p.residual <= tol) {
      check_branch(p);
      if (edge_amplitude(p.beta) > kEdgeErrorThreshold)
        fail(ErrorCode::edge_leak, "soliton tail reaches the array edge; increase n_sites");
      return p;
    }
    if (iter == max_iter) break;
    MatrixXr jac = MatrixXr::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
      jac(k, k) = 3.0 * p.beta(k) * p.beta(k) - p.omega;
      if (k > 0) jac(k, k - 1) = 1.0;
      if (k + 1 < n) jac(k, k + 1) = 1.0;
    }
    Eigen::FullPivLU<MatrixXr> lu(jac);
    if (!lu.isInvertible())
      fail(ErrorCode::no_convergence, "singular Jacobian in Newton iteration");
    p.beta -= lu.solve(f);
    if (!p.beta.allFinite()) fail(ErrorCode::no_convergence, "Newton iterate diverged");
    f = stationary_residual(p.beta, p.omega);
  }
  std::ostringstream os;
  os << "Newton did not reach residual " << tol << " in " << max_iter << " iterations";
  fail(ErrorCode::no_convergence, os.str());
}

StabilityReport linear_stability(const SolitonProfile& profile) {
  const Index n = profile.beta.size();
  MatrixXr a = MatrixXr::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    a(k, k) = -profile.omega + 2.0 * profile.beta(k) * profile.beta(k);
    if (k > 0) a(k, k - 1) = 1.0;
    if (k + 1 < n) a(k, k + 1) = 1.0;
  }
  const MatrixXr b = profile.beta.array().square().matrix().asDiagonal();
  MatrixXr lin = MatrixXr::Zero(2 * n, 2 * n);
  lin.topRightCorner(n, n) = -(a - b);
  lin.bottomLeftCorner(n, n) = a + b;

  Eigen::EigenSolver<MatrixXr> es(lin);
  StabilityReport report;
  report.eigenvalues = es.eigenvalues();
  report.max_growth_rate = 0.0;
  // The gauge mode sits in a defective zero pair whose numerical images split
  // by roughly sqrt(eps * norm), so the filter radius must track the spectrum
  // scale set by omega.
  const double zero_tol = 1e-5 * std::max(1.0, profile.omega);
  for (Index i = 0; i < report.eigenvalues.size(); ++i) {
    const Complex lam = report.eigenvalues(i);
    if (std::abs(lam) <= zero_tol) continue;
    report.max_growth_rate = std::max(report.max_growth_rate, lam.real());
  }
  report.stable = report.max_growth_rate <= 1e-8;
  return report;
}

ContinuationResult continuation(SolitonKind kind, double omega_from, double omega_to, int steps,
                                const SystemParams& params) {
  if (steps < 1) fail(ErrorCode::config, "continuation needs at least one step");
  ContinuationResult result;
  SystemParams local = params;
  local.omega = omega_from;
  SolitonProfile current;
  for (int i = 0; i <= steps; ++i) {
    local.omega = omega_from + (omega_to - omega_from) * static_cast<double>(i) / steps;
    try {
      const SolitonProfile start = (i == 0) ? seed_profile(kind, local) : current;
      current = solve_soliton(start, local);
    } catch (const Error& e) {
      result.failed_omega = local.omega;
      result.failure = e.what();
      return result;
    }
    result.profiles.push_back(current);
  }
  return result;
}

double edge_amplitude(const VectorXr& beta) {
  if (beta.size() == 0) return 0.0;
  return std::max(std::abs(beta(0)), std::abs(beta(beta.size() - 1)));
}

}  // namespace qsol
