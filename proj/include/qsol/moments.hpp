#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qsol/params.hpp"
#include "qsol/soliton.hpp"
#include "qsol/types.hpp"

namespace qsol {

// Second-moment closure state: mean field alpha plus the connected fluctuation
// matrices delta_n (Hermitian) and delta_a (symmetric).
//
// With `rescaled` set the matrices hold delta / L, which stays finite in the
// classical limit and is the only representation admissible at L = 0.
struct MomentState {
  double z = 0.0;
  VectorXc alpha;
  MatrixXc delta_n;
  MatrixXc delta_a;
  bool rescaled = false;

  Index sites() const { return alpha.size(); }
};

// Coherent input: mean field from the profile, fluctuation matrices zero.
MomentState initial_state(const SolitonProfile& profile, const SystemParams& params);
MomentState initial_state(const VectorXc& alpha0, const SystemParams& params);

MomentState moment_rhs(const MomentState& state, const SystemParams& params);

// Covariance-scale connected moments D^n = delta_n / L, D^a = delta_a / L.
std::pair<MatrixXc, MatrixXc> connected_moments(const MomentState& state,
                                                const SystemParams& params);

// sum_k |alpha_k|^2 + delta_n_kk: conserved at Gamma = 0, decays as exp(-Gamma z).
double total_power(const MomentState& state, const SystemParams& params);

struct PropagateOptions {
  int output_stride = 100;
  bool adaptive = false;
  double tolerance = 1e-10;
  double blowup_threshold = 1e12;
  double symmetry_tol = 1e-10;
};

struct PropagationLog {
  double max_hermiticity_defect = 0.0;
  double max_symmetry_defect = 0.0;
  double min_delta_n_diagonal = 0.0;
};

using MomentObserver = std::function<void(const MomentState&)>;

// Integrates the closed moment system to params.z_max, recording a snapshot
// every `output_stride` steps (plus the initial and final states).  Matrix
// symmetries are restored at each snapshot and the worst defect is logged.
std::vector<MomentState> propagate(const MomentState& init, const SystemParams& params,
                                   const PropagateOptions& options = {},
                                   const std::vector<MomentObserver>& observers = {},
                                   PropagationLog* log = nullptr);

// Internal flat layout [alpha | delta_n | delta_a]; shared with the coupled
// validity-monitored integration.
VectorXc pack_moments(const MomentState& state);
void unpack_moments(const VectorXc& flat, MomentState& state);

void enforce_moment_symmetry(MomentState& state, const PropagateOptions& options,
                             PropagationLog* log);
void check_blowup(const VectorXc& flat, double threshold, double z);

}  // namespace qsol
