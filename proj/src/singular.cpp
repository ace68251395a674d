#include "calderon/singular.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "calderon/errors.hpp"
#include "calderon/gegenbauer.hpp"

namespace calderon {

namespace {

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

struct LeadingParts {
  ComplexVector y;      // x - z as complex
  ComplexVector ainv_y; // A^{-1} y
  cdouble q;            // A^{-1} y . y
  cdouble log_q;
  cdouble b;            // A^{-1}_n . y
  cdouble t;
  GegenbauerSpec spec;
};

LeadingParts parts(const SingularProbe& p, const Point& x) {
  if (x.size() != p.n) throw UsageError("point dimension does not match the probe");
  LeadingParts L;
  L.y = (x - p.z).cast<cdouble>();
  if (L.y.cwiseAbs().maxCoeff() == 0.0) throw SingularityError("evaluation at the singularity");
  const ComplexMatrix& Ai = p.frozen_inv.matrix();
  L.ainv_y = Ai * L.y;
  L.q = L.ainv_y.cwiseProduct(L.y).sum();
  L.log_q = std::log(L.q);
  L.b = Ai.row(p.n - 1).transpose().cwiseProduct(L.y).sum();
  L.t = L.b / (p.inv_nn_sqrt * std::exp(0.5 * L.log_q));
  L.spec = GegenbauerSpec::for_dimension(p.m, p.n);
  return L;
}

}  // namespace

SingularProbe make_probe(const ComplexMatrix& frozen, const Point& z, int m) {
  const int n = static_cast<int>(frozen.rows());
  if (n < 3 || frozen.cols() != n || z.size() != n) throw UsageError("probe needs an n x n matrix, n >= 3, and z in R^n");
  if (m < 0 || m > kMaxGegenbauerDegree) throw RangeError("probe order m must lie in [0, 16]");
  Eigen::FullPivLU<ComplexMatrix> lu(frozen);
  if (!lu.isInvertible()) throw SingularityError("frozen admittivity is singular");
  ComplexMatrix inv = lu.inverse();
  inv = (0.5 * (inv + inv.transpose())).eval();
  const RealMatrix re = inv.real();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (re + re.transpose()));
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw InvariantError("Re A^{-1}(z, a(z)) is not positive definite");
  SingularProbe p;
  p.z = z;
  p.m = m;
  p.n = n;
  p.frozen = frozen;
  p.frozen_inv = ComplexSymMatrix(inv);
  const cdouble ann = inv(n - 1, n - 1);
  p.inv_nn_sqrt = std::sqrt(ann);
  p.coeff = factorial(m) * std::pow(p.inv_nn_sqrt, m);
  return p;
}

SingularProbe make_probe(const AdmittivityFamily& family, const ParameterField& a, const Point& z, int m) {
  return make_probe(family.evaluate(z, a(z)), z, m);
}

cdouble probe_quadratic(const SingularProbe& p, const Point& x) { return parts(p, x).q; }

cdouble leading_term(const SingularProbe& p, const Point& x) {
  const LeadingParts L = parts(p, x);
  const double e = 0.5 * (2 - p.n - p.m);
  return std::exp(e * L.log_q) * p.coeff * gegenbauer(L.spec, L.t);
}

ComplexVector leading_gradient(const SingularProbe& p, const Point& x) {
  const LeadingParts L = parts(p, x);
  const ComplexMatrix& Ai = p.frozen_inv.matrix();
  const ComplexVector row_n = Ai.row(p.n - 1).transpose();
  const cdouble q32 = std::exp(1.5 * L.log_q);
  const ComplexVector dt = (L.q * row_n - L.b * L.ainv_y) / (p.inv_nn_sqrt * q32);
  const double e = 0.5 * (2 - p.n - p.m);
  const cdouble c = gegenbauer(L.spec, L.t);
  const cdouble dc = gegenbauer_derivative(L.spec, L.t);
  return p.coeff * (std::exp(e * L.log_q) * dc * dt +
                    static_cast<double>(2 - p.n - p.m) * std::exp((e - 1.0) * L.log_q) * c * L.ainv_y);
}

cdouble pde_residual_leading(const SingularProbe& p, const Point& x, double step) {
  if (!(step > 0.0)) throw RangeError("finite-difference step must be positive");
  if ((x - p.z).norm() < 10.0 * step)
    throw NumericError("finite-difference step too large for the distance to the singularity");
  const int n = p.n;
  auto u = [&](const Point& y) { return leading_term(p, y); };
  const cdouble u0 = u(x);
  cdouble res = 0.0;
  for (int i = 0; i < n; ++i) {
    Point xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    res += p.frozen(i, i) * (u(xp) - 2.0 * u0 + u(xm)) / (step * step);
    for (int j = i + 1; j < n; ++j) {
      Point pp = x, pm = x, mp = x, mm = x;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      const cdouble mixed = (u(pp) - u(pm) - u(mp) + u(mm)) / (4.0 * step * step);
      res += (p.frozen(i, j) + p.frozen(j, i)) * mixed;
    }
  }
  return res;
}

double h_function(const SingularProbe& p, const Point& x) {
  const double r = (x - p.z).norm();
  return std::pow(r, 2 * p.n + 2 * p.m - 2) * leading_gradient(p, x).squaredNorm();
}

std::vector<Point> sphere_samples(int n, int count) {
  std::vector<Point> pts;
  pts.reserve(count);
  if (n == 3) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double zc = 1.0 - (2.0 * i + 1.0) / count;
      const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      const double phi = golden * i;
      Point x(3);
      x << rr * std::cos(phi), rr * std::sin(phi), zc;
      pts.push_back(x);
    }
    return pts;
  }
  std::mt19937_64 rng(12345u + static_cast<unsigned>(n));
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    Point x(n);
    for (int c = 0; c < n; ++c) x[c] = g(rng);
    pts.push_back(x / x.norm());
  }
  return pts;
}

double sphere_min_h(const SingularProbe& p, int samples) {
  if (samples < 1000) throw RangeError("sphere_min_h needs at least 1000 samples");
  double mn = std::numeric_limits<double>::infinity();
  for (const Point& e : sphere_samples(p.n, samples)) mn = std::min(mn, h_function(p, p.z + e));
  return mn;
}

double sphere_min_nonvanishing(const SingularProbe& p, int samples) {
  double mn = std::numeric_limits<double>::infinity();
  const ComplexMatrix& Ai = p.frozen_inv.matrix();
  const ComplexVector row_n = Ai.row(p.n - 1).transpose();
  for (const Point& e : sphere_samples(p.n, samples)) {
    const LeadingParts L = parts(p, p.z + e);
    const ComplexVector dt = (L.q * row_n - L.b * L.ainv_y) / (p.inv_nn_sqrt * std::exp(1.5 * L.log_q));
    const double v = std::abs(gegenbauer(L.spec, L.t)) + std::abs(gegenbauer_derivative(L.spec, L.t)) * dt.norm();
    mn = std::min(mn, v);
  }
  return mn;
}

cdouble CorrectedProbe::corrector_at(const Vec3& x) const { return mesh->interpolate(corrector.values, x); }

cdouble CorrectedProbe::value(const Vec3& x) const { return leading_term(probe, Point(x)) + corrector_at(x); }

ComplexVector CorrectedProbe::trace_on(const Mesh& box_mesh) const {
  ComplexVector g = ComplexVector::Zero(box_mesh.num_vertices());
  const Face f = domain.sigma.face;
  const int a = face_axis(f);
  const auto t = tangential_axes(f);
  const double coord = domain.box.face_coordinate(f);
  for (int v = 0; v < box_mesh.num_vertices(); ++v) {
    if (!box_mesh.on_boundary[v]) continue;
    const Vec3& x = box_mesh.vertices[v];
    if (std::abs(x[a] - coord) > 1e-12 * (1.0 + std::abs(coord))) continue;
    if (!domain.footprint.contains_open(x[t[0]], x[t[1]])) continue;
    g[v] = value(x);
  }
  return g;
}

CorrectedProbe build_corrected_probe(const SingularProbe& probe, const EnlargedDomain& domain,
                                     const ForwardModel& eta_model) {
  if (probe.n != 3) throw UsageError("corrected probes are three-dimensional");
  const Vec3 z = probe.z;
  if (domain.box.contains_closed(z)) throw GeometryError("singularity must lie outside the closed box");
  if (!domain.contains(z)) throw GeometryError("singularity must lie inside Omega_eta");
  const Mesh& mesh = eta_model.mesh();
  ComplexVector g = ComplexVector::Zero(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.on_boundary[v]) g[v] = -leading_term(probe, Point(mesh.vertices[v]));
  CorrectedProbe c;
  c.probe = probe;
  c.domain = domain;
  c.mesh = eta_model.mesh_ptr();
  c.corrector = eta_model.solve(g);
  return c;
}

}  // namespace calderon
