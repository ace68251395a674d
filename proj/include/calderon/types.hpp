#pragma once

#include <complex>

#include <Eigen/Core>

namespace calderon {

using cdouble = std::complex<double>;

// Points of R^n. The analytic modules work in any dimension n >= 3, the
// finite-element side is three-dimensional.
using Point = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace calderon
