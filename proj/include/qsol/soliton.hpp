#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsol/params.hpp"
#include "qsol/types.hpp"

namespace qsol {

enum class SolitonType { fundamental, twisted, multi_twisted };

// A localized stationary family: a centred block of dominant sites whose signs
// alternate `sign_changes` times (0 fundamental, 1 twisted, m >= 2 multi-twisted).
struct SolitonKind {
  SolitonType type = SolitonType::fundamental;
  int sign_changes = 0;

  static SolitonKind fundamental() { return {SolitonType::fundamental, 0}; }
  static SolitonKind twisted() { return {SolitonType::twisted, 1}; }
  static SolitonKind multi_twisted(int m);
  int block_size() const { return sign_changes + 1; }
  std::string name() const;
};

struct SolitonProfile {
  VectorXr beta;
  double omega = 0.0;
  SolitonKind kind;
  double residual = 0.0;
};

struct StabilityReport {
  VectorXc eigenvalues;          // spectrum of the 2N x 2N linearization
  double max_growth_rate = 0.0;  // max Re(lambda) with the zero-mode pair filtered out
  bool stable = false;
};

// Residual of the stationary system  -omega beta_k + beta_{k-1} + beta_{k+1} + beta_k^3.
VectorXr stationary_residual(const VectorXr& beta, double omega);

// Anticontinuum seed: dominant block at +/- sqrt(omega), zeros elsewhere.
SolitonProfile seed_profile(SolitonKind kind, const SystemParams& params);

// Newton iteration with the analytic tridiagonal-plus-diagonal Jacobian.
SolitonProfile solve_soliton(const SolitonProfile& seed, const SystemParams& params,
                             int max_iter = 50, double tol = 1e-12);

StabilityReport linear_stability(const SolitonProfile& profile);

struct ContinuationResult {
  std::vector<SolitonProfile> profiles;       // partial results on failure
  std::optional<double> failed_omega;
  std::string failure;
};

// Walks omega from `omega_from` to `omega_to` in `steps` equal increments,
// re-converging at each value from the previous profile.
ContinuationResult continuation(SolitonKind kind, double omega_from, double omega_to, int steps,
                                const SystemParams& params);

double edge_amplitude(const VectorXr& beta);

// Tail-leak gradations: above 1e-8 the array only approximates the infinite
// lattice (warning); above 1e-3 the profile is visibly truncated (hard error).
inline constexpr double kEdgeWarnThreshold = 1e-8;
inline constexpr double kEdgeErrorThreshold = 1e-3;
inline bool edge_leak_warning(const SolitonProfile& p) {
  return edge_amplitude(p.beta) > kEdgeWarnThreshold;
}

}  // namespace qsol
