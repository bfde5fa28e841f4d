#pragma once

#include <Eigen/Dense>
#include <complex>

namespace qsol {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Real = double;
using Complex = std::complex<Real>;
using Index = Eigen::Index;

using VectorXr = VectorX<Real>;
using VectorXc = VectorX<Complex>;
using MatrixXr = MatrixX<Real>;
using MatrixXc = MatrixX<Complex>;

inline constexpr Complex kI{0.0, 1.0};

}  // namespace qsol
