#include "calderon/quadrature.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Geometry>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "calderon/errors.hpp"

namespace calderon {

namespace {

// Parameter interval of the ray z + r omega inside the closed box (empty when lo > hi).
std::pair<double, double> ray_box(const BoxDomain& box, const Vec3& z, const Vec3& w) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(w[a]) < 1e-300) {
      if (z[a] < box.lo[a] || z[a] > box.hi[a]) return {1.0, 0.0};
      continue;
    }
    double t1 = (box.lo[a] - z[a]) / w[a];
    double t2 = (box.hi[a] - z[a]) / w[a];
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
  }
  return {lo, hi};
}

double power_integral(double p, double a, double b) {
  if (std::abs(p + 1.0) < 1e-14) return std::log(b / a);
  return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

double weighted_integral(const BoxDomain& box, const Vec3& z, double rho, double e, const AngularWeight& angular,
                         const DepthWeight& depth, const Vec3& axis, IntegralOptions options) {
  if (!(rho > 0.0)) return 0.0;
  if (depth.power < 0) throw RangeError("depth weight power must be non-negative");
  Vec3 a3 = axis.normalized();
  Vec3 helper = std::abs(a3.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 a1 = (helper - helper.dot(a3) * a3).normalized();
  const Vec3 a2 = a3.cross(a1);
  const bool inside = box.contains_closed(z);
  if (inside && e <= -3.0) throw RangeError("integral diverges at an interior singularity");

  auto radial = [&](const Vec3& w) -> double {
    auto [t0, t1] = ray_box(box, z, w);
    const double r0 = std::max(0.0, t0);
    const double r1 = std::min(rho, t1);
    if (!(r1 > r0)) return 0.0;
    const double ang = angular ? angular(w) : 1.0;
    if (depth.power == 0) return ang * power_integral(e + 2.0, r0, r1);
    const double d0 = (depth.x0 - z).dot(depth.nu);
    const double d1 = -w.dot(depth.nu);
    double s = 0.0;
    for (int k = 0; k <= depth.power; ++k)
      s += binomial(depth.power, k) * std::pow(d0, depth.power - k) * std::pow(d1, k) *
           power_integral(e + 2.0 + k, r0, r1);
    return ang * s;
  };

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto over_phi = [&](double theta) -> double {
    const double st = std::sin(theta), ct = std::cos(theta);
    auto f = [&](double phi) {
      const Vec3 w = st * (std::cos(phi) * a1 + std::sin(phi) * a2) + ct * a3;
      return radial(w);
    };
    return st * GK::integrate(f, 0.0, 2.0 * kPi, options.max_depth, options.rel_tol);
  };
  // Break the polar range where the cap cut by the nearest face plane ends.
  std::vector<double> breaks{0.0};
  if (!inside) {
    const double dist = box.boundary_distance(z);
    if (dist >= rho) return 0.0;
    breaks.push_back(std::acos(dist / rho));
  }
  breaks.push_back(kPi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i])
      total += GK::integrate(over_phi, breaks[i], breaks[i + 1], options.max_depth, options.rel_tol);
  return total;
}

double half_space_inverse_quartic(double tau, double rho) {
  if (!(tau > 0.0 && tau < rho)) throw RangeError("half-space integral needs 0 < tau < rho");
  return kPi / tau - 2.0 * kPi / rho + kPi * tau / (rho * rho);
}

RichardsonResult richardson(const std::vector<double>& values, double ratio, int levels) {
  if (values.empty()) throw RangeError("Richardson extrapolation needs at least one value");
  if (!(ratio > 0.0 && ratio < 1.0)) throw RangeError("Richardson ratio must lie in (0,1)");
  RichardsonResult r;
  const int n = static_cast<int>(values.size());
  levels = std::max(0, std::min(levels, n - 1));
  r.table.resize(n);
  for (int j = 0; j < n; ++j) {
    r.table[j].push_back(values[j]);
    for (int l = 1; l <= std::min(j, levels); ++l) {
      const double f = std::pow(ratio, l);
      r.table[j].push_back((r.table[j][l - 1] - f * r.table[j - 1][l - 1]) / (1.0 - f));
    }
  }
  const auto& last = r.table[n - 1];
  r.value = last.back();
  if (last.size() >= 2) r.residual = std::abs(last.back() - last[last.size() - 2]);
  else if (n >= 2) r.residual = std::abs(values[n - 1] - values[n - 2]);
  return r;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw RangeError("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericError("line fit with identical abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw NumericError("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

}  // namespace calderon
