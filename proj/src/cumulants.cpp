#include "qsol/cumulants.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qsol/integrate.hpp"

namespace qsol {

ThirdCumulantState initial_cumulants(Index n, bool rescaled) {
  ThirdCumulantState s;
  s.kappa_aaa = CumulantTensor(n);
  s.kappa_naa = CumulantTensor(n);
  s.rescaled = rescaled;
  return s;
}

ThirdCumulantState cumulant_rhs(const ThirdCumulantState& kappa, const MomentState& moments,
                                const SystemParams& params) {
  const Index n = moments.sites();
  if (kappa.kappa_aaa.sites() != n || kappa.kappa_naa.sites() != n)
    fail(ErrorCode::dimension_mismatch, "cumulant tensors do not match the moment state");
  if (kappa.rescaled != moments.rescaled)
    fail(ErrorCode::config, "cumulant and moment states use different normalizations");
  const double el = params.quantum_scale;
  const double u = kappa.rescaled ? el : 1.0;
  const double gamma = params.absorption;

  const VectorXc& al = moments.alpha;
  const MatrixXc& dn = moments.delta_n;
  const MatrixXc& da = moments.delta_a;
  const CumulantTensor& ka = kappa.kappa_aaa;
  const CumulantTensor& kn = kappa.kappa_naa;

  // Kerr drive on one plain slot `a` of the all-annihilation cumulant.
  auto r_term = [&](Index a, Index b, Index c) {
    return 2.0 * std::norm(al(a)) * ka(a, b, c) + al(a) * al(a) * kn(a, b, c) +
           u * (2.0 * std::conj(al(a)) * da(a, b) * da(a, c) +
                2.0 * al(a) * (dn(a, b) * da(a, c) + dn(a, c) * da(a, b)) +
                2.0 * dn(a, a) * ka(a, b, c) + dn(a, b) * ka(a, a, c) + dn(a, c) * ka(a, a, b) +
                da(a, a) * kn(a, b, c) + 2.0 * da(a, b) * kn(a, a, c) +
                2.0 * da(a, c) * kn(a, a, b));
  };

  // Conjugate Kerr drive on the daggered slot k of kappa_naa.
  auto rbar_term = [&](Index k, Index l, Index m) {
    return std::conj(al(k) * al(k)) * ka(k, l, m) + 2.0 * std::norm(al(k)) * kn(k, l, m) +
           u * (2.0 * std::conj(al(k)) * (dn(k, l) * da(k, m) + dn(k, m) * da(k, l)) +
                2.0 * al(k) * dn(k, l) * dn(k, m) + std::conj(da(k, k)) * ka(k, l, m) +
                2.0 * dn(k, k) * kn(k, l, m) + 2.0 * dn(k, l) * kn(k, k, m) +
                2.0 * dn(k, m) * kn(k, k, l) + da(k, l) * std::conj(kn(m, k, k)) +
                da(k, m) * std::conj(kn(l, k, k)));
  };

  // Kerr drive on a plain slot b of kappa_naa (daggered slot k, other slot c).
  auto q_term = [&](Index k, Index b, Index c) {
    return 2.0 * std::norm(al(b)) * kn(k, b, c) + al(b) * al(b) * std::conj(kn(c, k, b)) +
           u * (2.0 * std::conj(al(b)) * dn(k, b) * da(b, c) +
                2.0 * al(b) * (std::conj(da(k, b)) * da(b, c) + dn(b, c) * dn(k, b)) +
                2.0 * dn(b, b) * kn(k, b, c) + std::conj(da(k, b)) * ka(b, b, c) +
                dn(b, c) * kn(k, b, b) + da(b, b) * std::conj(kn(c, k, b)) +
                2.0 * dn(k, b) * kn(b, b, c) + 2.0 * da(b, c) * std::conj(kn(b, k, b)));
  };

  ThirdCumulantState out = initial_cumulants(n, kappa.rescaled);
  out.z = 1.0;

  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      for (Index r = 0; r < n; ++r) {
        Complex hop{0.0, 0.0};
        if (p > 0) hop += ka(p - 1, q, r);
        if (p + 1 < n) hop += ka(p + 1, q, r);
        if (q > 0) hop += ka(p, q - 1, r);
        if (q + 1 < n) hop += ka(p, q + 1, r);
        if (r > 0) hop += ka(p, q, r - 1);
        if (r + 1 < n) hop += ka(p, q, r + 1);

        Complex val = kI * hop - 1.5 * gamma * ka(p, q, r) +
                      kI * (r_term(p, q, r) + r_term(q, p, r) + r_term(r, p, q));
        if (p == q) val += kI * el * (2.0 * al(p) * da(p, r) + ka(p, p, r));
        if (p == r) val += kI * el * (2.0 * al(p) * da(p, q) + ka(p, p, q));
        if (q == r) val += kI * el * (2.0 * al(q) * da(p, q) + ka(p, q, q));
        out.kappa_aaa(p, q, r) = val;
      }
    }
  }

  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      for (Index r = 0; r < n; ++r) {
        Complex hop{0.0, 0.0};
        if (p > 0) hop -= kn(p - 1, q, r);
        if (p + 1 < n) hop -= kn(p + 1, q, r);
        if (q > 0) hop += kn(p, q - 1, r);
        if (q + 1 < n) hop += kn(p, q + 1, r);
        if (r > 0) hop += kn(p, q, r - 1);
        if (r + 1 < n) hop += kn(p, q, r + 1);

        Complex val = kI * hop - 1.5 * gamma * kn(p, q, r) - kI * rbar_term(p, q, r) +
                      kI * (q_term(p, q, r) + q_term(p, r, q));
        if (q == r) val += kI * el * (2.0 * al(q) * dn(p, q) + kn(p, q, q));
        out.kappa_naa(p, q, r) = val;
      }
    }
  }
  return out;
}

Complex gaussian_third_moment(const MomentState& state, const SystemParams& params,
                              MomentPattern pattern, Index k, Index l, Index m) {
  const Index n = state.sites();
  if (k < 0 || k >= n || l < 0 || l >= n || m < 0 || m >= n)
    fail(ErrorCode::config, "third-moment index out of range");
  const double el = params.quantum_scale;
  if (el <= 0.0)
    fail(ErrorCode::zero_scale, "canonical-unit third moments diverge in the classical limit");
  const auto [nu, mu] = connected_moments(state, params);
  const VectorXc& al = state.alpha;
  const double s3 = std::pow(el, 1.5);
  const double s1 = std::sqrt(el);
  if (pattern == MomentPattern::aaa)
    return al(k) * al(l) * al(m) / s3 +
           (al(k) * mu(l, m) + al(l) * mu(k, m) + al(m) * mu(k, l)) / s1;
  return std::conj(al(k)) * al(l) * al(m) / s3 +
         (std::conj(al(k)) * mu(l, m) + al(l) * nu(k, m) + al(m) * nu(k, l)) / s1;
}

double err_metric(const MomentState& moments, const ThirdCumulantState& kappa,
                  const SystemParams& params) {
  const Index n = moments.sites();
  if (kappa.kappa_aaa.sites() != n || kappa.kappa_naa.sites() != n)
    fail(ErrorCode::dimension_mismatch, "cumulant tensors do not match the moment state");
  const double el = params.quantum_scale;
  const double kappa_unit = kappa.rescaled ? el : 1.0;
  const double delta_unit = moments.rescaled ? el : 1.0;
  const VectorXc& al = moments.alpha;
  const MatrixXc& dn = moments.delta_n;
  const MatrixXc& da = moments.delta_a;

  double num = 0.0;
  double den = 0.0;
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      num = std::max({num, kappa_unit * std::abs(kappa.kappa_naa(k, k, l)),
                      kappa_unit * std::abs(kappa.kappa_aaa(k, k, l))});
      const Complex naa =
          std::conj(al(k)) * al(k) * al(l) +
          delta_unit * (std::conj(al(k)) * da(k, l) + al(k) * dn(k, l) + al(l) * dn(k, k));
      const Complex aaa =
          al(k) * al(k) * al(l) + delta_unit * (2.0 * al(k) * da(k, l) + al(l) * da(k, k));
      den = std::max({den, std::abs(naa), std::abs(aaa)});
    }
  }
  if (den < 1e-300) {
    if (num < 1e-300)
      fail(ErrorCode::degenerate_denominator, "Err undefined for an all-zero field");
    return std::numeric_limits<double>::infinity();
  }
  return num / den;
}

double validity_horizon(const std::vector<ValiditySample>& series, double cap, double z_max) {
  if (cap <= 0.0) fail(ErrorCode::config, "validity cap must be positive");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].err < cap) continue;
    if (i == 0) return series[0].z;
    const ValiditySample& a = series[i - 1];
    const ValiditySample& b = series[i];
    const double t = (cap - a.err) / (b.err - a.err);
    return a.z + t * (b.z - a.z);
  }
  return z_max;
}

namespace {

VectorXc pack_coupled(const CoupledState& s) {
  const Index n = s.moments.sites();
  const Index nm = n + 2 * n * n;
  const Index nt = n * n * n;
  VectorXc flat(nm + 2 * nt);
  flat.head(nm) = pack_moments(s.moments);
  flat.segment(nm, nt) = s.kappa.kappa_aaa.flat();
  flat.tail(nt) = s.kappa.kappa_naa.flat();
  return flat;
}

void unpack_coupled(const VectorXc& flat, CoupledState& s) {
  const Index n = s.moments.sites();
  const Index nm = n + 2 * n * n;
  const Index nt = n * n * n;
  unpack_moments(flat.head(nm).eval(), s.moments);
  s.kappa.kappa_aaa.flat() = flat.segment(nm, nt);
  s.kappa.kappa_naa.flat() = flat.tail(nt);
}

// Restores the exact index symmetries and reports the worst defect found.
double enforce_tensor_symmetry(ThirdCumulantState& kappa) {
  const Index n = kappa.kappa_aaa.sites();
  CumulantTensor& ka = kappa.kappa_aaa;
  CumulantTensor& kn = kappa.kappa_naa;
  double defect = 0.0;
  for (Index p = 0; p < n; ++p) {
    for (Index q = p; q < n; ++q) {
      for (Index r = q; r < n; ++r) {
        const Complex mean = (ka(p, q, r) + ka(p, r, q) + ka(q, p, r) + ka(q, r, p) +
                              ka(r, p, q) + ka(r, q, p)) /
                             6.0;
        for (const Complex v : {ka(p, q, r), ka(p, r, q), ka(q, p, r), ka(q, r, p), ka(r, p, q),
                                ka(r, q, p)})
          defect = std::max(defect, std::abs(v - mean));
        ka(p, q, r) = ka(p, r, q) = ka(q, p, r) = ka(q, r, p) = ka(r, p, q) = ka(r, q, p) = mean;
      }
    }
  }
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      for (Index r = q; r < n; ++r) {
        const Complex mean = 0.5 * (kn(p, q, r) + kn(p, r, q));
        defect = std::max(defect, std::abs(kn(p, q, r) - mean));
        kn(p, q, r) = kn(p, r, q) = mean;
      }
    }
  }
  return defect;
}

}  // namespace

std::vector<CoupledState> propagate_with_cumulants(const MomentState& init,
                                                   const SystemParams& params,
                                                   const PropagateOptions& options,
                                                   PropagationLog* log) {
  params.validate();
  const Index n = init.sites();
  if (n != params.n_sites) fail(ErrorCode::dimension_mismatch, "initial state does not match n_sites");
  if (options.output_stride < 1) fail(ErrorCode::config, "output_stride must be positive");

  const long steps = std::max(1L, std::lround(params.z_max / params.step));
  const double h = params.z_max / static_cast<double>(steps);

  CoupledState state{init, initial_cumulants(n, init.rescaled)};
  state.moments.z = 0.0;

  const auto rhs = [&](const VectorXc& y) {
    CoupledState s = state;
    unpack_coupled(y, s);
    CoupledState dot{moment_rhs(s.moments, params), cumulant_rhs(s.kappa, s.moments, params)};
    return pack_coupled(dot);
  };

  PropagationLog local_log;
  PropagationLog* lg = log ? log : &local_log;
  std::vector<CoupledState> snapshots;

  auto record = [&](CoupledState s) {
    enforce_moment_symmetry(s.moments, options, lg);
    const double scale =
        std::max({1.0, s.kappa.kappa_aaa.flat().cwiseAbs().maxCoeff(),
                  s.kappa.kappa_naa.flat().cwiseAbs().maxCoeff()});
    const double defect = enforce_tensor_symmetry(s.kappa);
    if (defect > options.symmetry_tol * scale) {
      std::ostringstream os;
      os << "cumulant symmetry defect " << defect << " at z = " << s.moments.z;
      fail(ErrorCode::numerical_blowup, os.str());
    }
    lg->max_symmetry_defect = std::max(lg->max_symmetry_defect, defect);
    s.kappa.z = s.moments.z;
    snapshots.push_back(std::move(s));
  };

  VectorXc flat = pack_coupled(state);
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
      check_blowup(flat, options.blowup_threshold, i * h);
      unpack_coupled(flat, state);
      state.moments.z = i * h;
      record(state);
      flat = pack_coupled(snapshots.back());
    }
  }
  return snapshots;
}

}  // namespace qsol
