#include "qsol/model.hpp"

#include <cmath>

#include "qsol/integrate.hpp"

namespace qsol {

void SystemParams::validate() const {
  if (n_sites < 2) fail(ErrorCode::config, "n_sites must be at least 2");
  if (!std::isfinite(omega)) fail(ErrorCode::config, "omega must be finite");
  if (!(quantum_scale >= 0.0) || !std::isfinite(quantum_scale))
    fail(ErrorCode::config, "quantum_scale must be finite and non-negative");
  if (!(absorption >= 0.0) || !std::isfinite(absorption))
    fail(ErrorCode::config, "absorption must be finite and non-negative");
  if (!(z_max > 0.0) || !std::isfinite(z_max)) fail(ErrorCode::config, "z_max must be positive");
  if (!(step > 0.0) || !std::isfinite(step)) fail(ErrorCode::config, "step must be positive");
}

ClassicalField propagate_classical(ClassicalField field, double z, double step) {
  if (!(z > 0.0)) return field;
  const long n = std::max(1L, std::lround(z / step));
  const double h = z / static_cast<double>(n);
  const auto rhs = [](const VectorXc& y) { return dnls_rhs(y); };
  for (long i = 0; i < n; ++i) field = rk4_step(rhs, field, h);
  return field;
}

}  // namespace qsol
