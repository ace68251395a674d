#pragma once

#include <functional>
#include <vector>

#include "calderon/geometry.hpp"

namespace calderon {

using AngularWeight = std::function<double(const Vec3& omega)>;

// Optional factor ((x0 - x) . nu)^power, the depth below the face with outward normal nu.
struct DepthWeight {
  int power = 0;
  Vec3 x0 = Vec3::Zero();
  Vec3 nu = Vec3::UnitZ();
};

struct IntegralOptions {
  double rel_tol = 1e-9;
  int max_depth = 12;
};

// Integral over B_rho(z) intersected with the box of |x - z|^e * angular(omega) * depth
// weight, omega = (x - z)/|x - z|. The radial integral along each ray is exact; the two
// angles about `axis` are integrated by adaptive Gauss-Kronrod quadrature.
double weighted_integral(const BoxDomain& box, const Vec3& z, double rho, double e,
                         const AngularWeight& angular = {}, const DepthWeight& depth = {},
                         const Vec3& axis = -Vec3::UnitZ(), IntegralOptions options = {});

// Closed form of the e = 2 - 2n = -4 integral over B_rho(z) cut by a half-space whose
// boundary lies at distance tau < rho from z: pi/tau - 2 pi/rho + pi tau/rho^2.
double half_space_inverse_quartic(double tau, double rho);

struct RichardsonResult {
  std::vector<std::vector<double>> table;  // table[j][l], l <= min(j, levels)
  double value = 0.0;
  double residual = 0.0;  // |difference between the two best entries|
};

// Eliminates error terms c_l tau^l, l = 1..levels, from values on a geometric grid with
// ratio r = tau_j / tau_{j-1}.
RichardsonResult richardson(const std::vector<double>& values, double ratio, int levels);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Slope of log y against log x; all entries must be positive.
LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace calderon
