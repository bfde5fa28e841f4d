#pragma once

#include "qsol/errors.hpp"

namespace qsol {

// Physical and numerical parameters shared by all modules.
//
// quantum_scale is the parameter L controlling the strength of quantum
// fluctuations relative to the classical field (inverse photon-number scale);
// L = 0 selects the rescaled classical-limit mode of the propagator.
struct SystemParams {
  int n_sites = 15;
  double omega = 10.0;
  double quantum_scale = 0.01;
  double absorption = 0.0;
  double z_max = 1.5;
  double step = 1e-4;

  void validate() const;
};

}  // namespace qsol
