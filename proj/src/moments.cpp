#include "qsol/moments.hpp"

#include <cmath>
#include <sstream>

#include "qsol/integrate.hpp"

namespace qsol {

MomentState initial_state(const VectorXc& alpha0, const SystemParams& params) {
  const Index n = alpha0.size();
  MomentState s;
  s.z = 0.0;
  s.alpha = alpha0;
  s.delta_n = MatrixXc::Zero(n, n);
  s.delta_a = MatrixXc::Zero(n, n);
  s.rescaled = params.quantum_scale == 0.0;
  return s;
}

MomentState initial_state(const SolitonProfile& profile, const SystemParams& params) {
  return initial_state(profile.beta.cast<Complex>(), params);
}

MomentState moment_rhs(const MomentState& state, const SystemParams& params) {
  const Index n = state.alpha.size();
  if (state.delta_n.rows() != n || state.delta_n.cols() != n || state.delta_a.rows() != n ||
      state.delta_a.cols() != n)
    fail(ErrorCode::dimension_mismatch, "moment matrices do not match alpha");
  const double el = params.quantum_scale;
  if (state.rescaled && el < 0.0) fail(ErrorCode::config, "negative quantum_scale");
  if (!state.rescaled && el == 0.0)
    fail(ErrorCode::zero_scale, "absolute moment state undefined at L = 0; use the rescaled mode");
  const double u = state.rescaled ? el : 1.0;  // weight of stored-matrix quadratic terms
  const double s = state.rescaled ? 1.0 : el;  // weight of the mean-field vacuum source
  const double gamma = params.absorption;

  const VectorXc& al = state.alpha;
  const MatrixXc& dn = state.delta_n;
  const MatrixXc& da = state.delta_a;

  MomentState out;
  out.z = 1.0;
  out.rescaled = state.rescaled;
  out.alpha.resize(n);
  out.delta_n.resize(n, n);
  out.delta_a.resize(n, n);

  VectorXr pow(n);
  for (Index k = 0; k < n; ++k) pow(k) = std::norm(al(k));

  for (Index k = 0; k < n; ++k) {
    Complex nb{0.0, 0.0};
    if (k > 0) nb += al(k - 1);
    if (k + 1 < n) nb += al(k + 1);
    out.alpha(k) = kI * (nb + pow(k) * al(k)) +
                   kI * u * (2.0 * al(k) * dn(k, k) + std::conj(al(k)) * da(k, k)) -
                   0.5 * gamma * al(k);
  }

  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      Complex hop_n{0.0, 0.0};
      if (l + 1 < n) hop_n += dn(k, l + 1);
      if (l > 0) hop_n += dn(k, l - 1);
      if (k + 1 < n) hop_n -= dn(k + 1, l);
      if (k > 0) hop_n -= dn(k - 1, l);

      out.delta_n(k, l) =
          kI * hop_n +
          2.0 * kI * (u * (dn(l, l) - dn(k, k)) + pow(l) - pow(k)) * dn(k, l) +
          kI * ((al(l) * al(l) + u * da(l, l)) * std::conj(da(k, l)) -
                (std::conj(al(k)) * std::conj(al(k)) + u * std::conj(da(k, k))) * da(k, l)) -
          gamma * dn(k, l);

      Complex hop_a{0.0, 0.0};
      if (l + 1 < n) hop_a += da(k, l + 1);
      if (l > 0) hop_a += da(k, l - 1);
      if (k + 1 < n) hop_a += da(k + 1, l);
      if (k > 0) hop_a += da(k - 1, l);

      out.delta_a(k, l) =
          kI * hop_a +
          2.0 * kI * (u * (dn(k, k) + dn(l, l)) + pow(k) + pow(l)) * da(k, l) +
          kI * (u * da(k, k) + al(k) * al(k)) * dn(k, l) +
          kI * (u * da(l, l) + al(l) * al(l)) * std::conj(dn(k, l)) -
          gamma * da(k, l);
      if (k == l)
        out.delta_a(k, l) += kI * (s * al(k) * al(k) + el * da(k, k));
    }
  }
  return out;
}

std::pair<MatrixXc, MatrixXc> connected_moments(const MomentState& state,
                                                const SystemParams& params) {
  if (state.rescaled) return {state.delta_n, state.delta_a};
  if (params.quantum_scale == 0.0)
    fail(ErrorCode::zero_scale, "connected moments undefined: absolute state with L = 0");
  return {state.delta_n / params.quantum_scale, state.delta_a / params.quantum_scale};
}

double total_power(const MomentState& state, const SystemParams& params) {
  const double scale = state.rescaled ? params.quantum_scale : 1.0;
  double p = 0.0;
  for (Index k = 0; k < state.alpha.size(); ++k)
    p += std::norm(state.alpha(k)) + scale * state.delta_n(k, k).real();
  return p;
}

VectorXc pack_moments(const MomentState& state) {
  const Index n = state.alpha.size();
  VectorXc flat(n + 2 * n * n);
  flat.head(n) = state.alpha;
  flat.segment(n, n * n) = Eigen::Map<const VectorXc>(state.delta_n.data(), n * n);
  flat.segment(n + n * n, n * n) = Eigen::Map<const VectorXc>(state.delta_a.data(), n * n);
  return flat;
}

void unpack_moments(const VectorXc& flat, MomentState& state) {
  const Index n = state.alpha.size();
  state.alpha = flat.head(n);
  state.delta_n = Eigen::Map<const MatrixXc>(flat.segment(n, n * n).data(), n, n);
  state.delta_a = Eigen::Map<const MatrixXc>(flat.segment(n + n * n, n * n).data(), n, n);
}

void enforce_moment_symmetry(MomentState& state, const PropagateOptions& options,
                             PropagationLog* log) {
  const Index n = state.alpha.size();
  const double scale = std::max({1.0, state.delta_n.cwiseAbs().maxCoeff(),
                                 state.delta_a.cwiseAbs().maxCoeff()});
  const double defect_n = (state.delta_n - state.delta_n.adjoint()).cwiseAbs().maxCoeff();
  const double defect_a = (state.delta_a - state.delta_a.transpose()).cwiseAbs().maxCoeff();
  if (defect_n > options.symmetry_tol * scale || defect_a > options.symmetry_tol * scale) {
    std::ostringstream os;
    os << "moment symmetry defect " << std::max(defect_n, defect_a) << " at z = " << state.z;
    fail(ErrorCode::numerical_blowup, os.str());
  }
  state.delta_n = 0.5 * (state.delta_n + state.delta_n.adjoint()).eval();
  state.delta_a = 0.5 * (state.delta_a + state.delta_a.transpose()).eval();
  if (log) {
    log->max_hermiticity_defect = std::max(log->max_hermiticity_defect, defect_n);
    log->max_symmetry_defect = std::max(log->max_symmetry_defect, defect_a);
    for (Index k = 0; k < n; ++k)
      log->min_delta_n_diagonal = std::min(log->min_delta_n_diagonal, state.delta_n(k, k).real());
  }
}

void check_blowup(const VectorXc& flat, double threshold, double z) {
  if (flat.allFinite() && flat.cwiseAbs().maxCoeff() <= threshold) return;
  std::ostringstream os;
  os << "numerical blowup at z = " << z;
  fail(ErrorCode::numerical_blowup, os.str());
}

std::vector<MomentState> propagate(const MomentState& init, const SystemParams& params,
                                   const PropagateOptions& options,
                                   const std::vector<MomentObserver>& observers,
                                   PropagationLog* log) {
  params.validate();
  if (init.alpha.size() != params.n_sites)
    fail(ErrorCode::dimension_mismatch, "initial state does not match n_sites");
  if (options.output_stride < 1) fail(ErrorCode::config, "output_stride must be positive");

  const long steps = std::max(1L, std::lround(params.z_max / params.step));
  const double h = params.z_max / static_cast<double>(steps);
  const auto rhs = [&](const VectorXc& y) {
    MomentState s = init;
    unpack_moments(y, s);
    return pack_moments(moment_rhs(s, params));
  };

  std::vector<MomentState> snapshots;
  MomentState state = init;
  state.z = 0.0;
  PropagationLog local_log;
  PropagationLog* lg = log ? log : &local_log;

  auto record = [&](const MomentState& s) {
    MomentState copy = s;
    enforce_moment_symmetry(copy, options, lg);
    snapshots.push_back(copy);
    for (const auto& obs : observers) obs(copy);
  };

  VectorXc flat = pack_moments(state);
  record(state);
  for (long i = 0; i < steps;) {
    if (options.adaptive) {
      const long chunk = std::min<long>(options.output_stride, steps - i);
      flat = rk4_adaptive(rhs, flat, chunk * h, options.tolerance, h);
      i += chunk;
    } else {
      flat = rk4_step(rhs, flat, h);
      ++i;
    }
    if (i % options.output_stride == 0 || i == steps) {
      state.z = i * h;
      check_blowup(flat, options.blowup_threshold, state.z);
      unpack_moments(flat, state);
      record(state);
      flat = pack_moments(snapshots.back());  // keep the integrated state symmetric
    }
  }
  return snapshots;
}

}  // namespace qsol
