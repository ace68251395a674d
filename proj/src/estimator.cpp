#include "calderon/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/LU>

#include "calderon/errors.hpp"
#include "calderon/parallel.hpp"

namespace calderon {

cdouble f_function(const AdmittivityFamily& family, const ParameterField& a1, const ParameterField& a2,
                   const Point& x0, const Point& z, const Point& x) {
  const Point yr = x - z;
  if (yr.norm() == 0.0) throw SingularityError("F is singular at x = z");
  const ComplexVector y = yr.cast<cdouble>();
  const double n = static_cast<double>(family.dim);
  const ComplexMatrix inv1_x0 = family.evaluate(x0, a1(x0)).inverse();
  const ComplexMatrix inv2_x0 = family.evaluate(x0, a2(x0)).inverse();
  const ComplexMatrix inv1_z = family.evaluate(z, a1(z)).inverse();
  const ComplexMatrix inv2_z = family.evaluate(z, a2(z)).inverse();
  // y is real, so the bilinear form of a matrix is the plain product y^T M y.
  const cdouble first = (y.transpose() * (inv2_x0 - inv1_x0) * y)(0, 0);
  const cdouble q1 = (y.transpose() * inv1_z.conjugate() * y)(0, 0);
  const cdouble q2 = (y.transpose() * inv2_z.conjugate() * y)(0, 0);
  return first * std::pow(q1, n / 2.0) * std::pow(q2, n / 2.0);
}

std::string SignConditionReport::diagnostic() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "sign condition %s: %d of %zu samples violate it (gap sign %+d, worst Re margin %.3e, "
                "worst |Re|-|Im| margin %.3e%s)",
                passed ? "holds" : "fails", violations, samples.size(), sign, worst_real_margin,
                worst_imag_margin, degenerate ? ", degenerate" : "");
  return buf;
}

SignConditionReport check_sign_condition(const AdmittivityFamily& family, const ParameterField& a1,
                                         const ParameterField& a2, const Point& x0, const Point& z,
                                         const std::vector<Point>& samples) {
  SignConditionReport r;
  const double v1 = a1(x0), v2 = a2(x0);
  const double gap = v1 - v2;
  // Gaps at rounding level count as matched boundary values; F then vanishes up to rounding.
  r.degenerate = std::abs(gap) <= 1e-12 * std::max({1.0, std::abs(v1), std::abs(v2)});
  r.sign = r.degenerate ? 0 : (gap > 0 ? 1 : -1);
  r.worst_real_margin = std::numeric_limits<double>::infinity();
  r.worst_imag_margin = std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    const cdouble f = f_function(family, a1, a2, x0, z, x);
    r.samples.push_back({x, f});
    const double mag = std::abs(f);
    double re_margin = 0.0, im_margin = 0.0;
    if (mag > 0.0 && !r.degenerate) {
      re_margin = r.sign * f.real() / mag;
      im_margin = (std::abs(f.real()) - std::abs(f.imag())) / mag;
    }
    r.worst_real_margin = std::min(r.worst_real_margin, re_margin);
    r.worst_imag_margin = std::min(r.worst_imag_margin, im_margin);
    const bool ok = r.degenerate || (re_margin > 0.0 && im_margin >= 0.0);
    if (!ok) ++r.violations;
  }
  if (samples.empty()) r.worst_real_margin = r.worst_imag_margin = 0.0;
  r.passed = !samples.empty() && r.violations == 0;
  return r;
}

std::vector<Point> sample_ball_points(const BoxDomain& box, const Vec3& z, double rho, int count, unsigned seed) {
  if (!(rho > 0.0) || count < 0) throw RangeError("ball sampling needs rho > 0 and count >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> out;
  out.reserve(count);
  long attempts = 0;
  const long limit = 10000L * std::max(count, 1);
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > limit) throw GeometryError("ball around the probe barely meets the domain");
    Vec3 d(u(rng), u(rng), u(rng));
    if (d.squaredNorm() >= 1.0) continue;
    const Vec3 x = z + rho * d;
    if (box.contains(x) && (x - z).norm() > 0.0) out.emplace_back(x);
  }
  return out;
}

double delta_h(double alpha, int h) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("delta_h needs 0 < alpha < 1");
  if (h < 0) throw RangeError("delta_h needs h >= 0");
  double d = 1.0;
  for (int i = 0; i <= h; ++i) d *= alpha / (alpha + i);
  return d;
}

GapSetup make_gap_setup(const EnlargedDomain& domain, std::shared_ptr<const Mesh> box_mesh,
                        std::shared_ptr<const Mesh> eta_mesh, const AdmittivityFamily& family,
                        const ParameterField& a1, const ParameterField& a2, SolverOptions options) {
  GapSetup s;
  s.domain = domain;
  s.omega1 = std::make_shared<ForwardModel>(box_mesh, family, a1, options);
  s.omega2 = std::make_shared<ForwardModel>(box_mesh, family, a2, options);
  s.eta1 = std::make_shared<ForwardModel>(eta_mesh, family, a1, options);
  s.eta2 = std::make_shared<ForwardModel>(eta_mesh, family, a2, options);
  return s;
}

namespace {

GapEstimate run_gap(const GapSetup& setup, const Vec3& x0, const std::vector<double>& tau_grid, int m,
                    double rho, int depth_power, double boundary_gap, const GapOptions& options) {
  if (!setup.omega1 || !setup.omega2 || !setup.eta1 || !setup.eta2)
    throw UsageError("gap setup is missing a forward model");
  if (tau_grid.empty()) throw RangeError("empty tau grid");
  const EnlargedDomain& dom = setup.domain;
  const BoxDomain& box = dom.box;
  if (!dom.sigma.contains(box, x0, 1e-9)) throw GeometryError("x0 must lie on Sigma");
  const Vec3 nu = box.outward_normal(dom.sigma.face);
  if (!(rho > 0.0 && rho <= dom.eta / 4.0 + 1e-15)) throw RangeError("rho must lie in (0, eta/4]");
  for (double tau : tau_grid)
    if (!(tau > 0.0 && tau <= rho / 2.0)) throw RangeError("tau must lie in (0, rho/2]");

  const AdmittivityFamily& family = setup.omega1->family();
  const ParameterField& a1 = setup.omega1->field();
  const ParameterField& a2 = setup.omega2->field();
  const int n = family.dim;
  const Point x0p = x0;
  const double t_star = 0.5 * (a1(x0p) + a2(x0p));
  const ComplexMatrix dta = family.evaluate_dt(x0p, t_star);
  const double e = 2.0 - 2.0 * n - 2.0 * m;

  GapEstimate out;
  out.m = m;
  out.depth_power = depth_power;
  out.rho = rho;
  out.per_tau.resize(tau_grid.size());
  parallel_for(static_cast<int>(tau_grid.size()), options.threads, [&](int j) {
    TauEstimate& r = out.per_tau[j];
    r.tau = tau_grid[j];
    r.z = x0 + r.tau * nu;
    const Point z = r.z;
    r.sign = check_sign_condition(family, a1, a2, x0p, z,
                                  sample_ball_points(box, r.z, rho, options.sign_samples, options.seed + j));
    if (!r.sign.passed) throw SignConditionError("estimator refused at tau = " + std::to_string(r.tau) + ": " +
                                                 r.sign.diagnostic());
    const SingularProbe p1 = make_probe(family, a1, z, m);
    const SingularProbe p2 = make_probe(family, a2, z, m);
    const CorrectedProbe c1 = build_corrected_probe(p1, dom, *setup.eta1);
    const CorrectedProbe c2 = build_corrected_probe(p2, dom, *setup.eta2);
    const ComplexVector f1 = c1.trace_on(setup.omega1->mesh());
    const ComplexVector f2 = c2.trace_on(setup.omega1->mesh());
    const ComplexField u1 = setup.omega1->solve(f1);
    const ComplexField w1 = setup.omega2->solve(f1);
    r.pairing = setup.omega1->pairing(u1, f2) - setup.omega2->pairing(w1, f2);

    // Leading gradients are homogeneous, so their directional profile is read off at r = 1.
    auto angular = [&](const Vec3& w) {
      const Point x = r.z + w;
      const ComplexVector g1 = leading_gradient(p1, x);
      const ComplexVector g2 = leading_gradient(p2, x);
      return (dta * g1).cwiseProduct(g2).sum().real();
    };
    DepthWeight depth{depth_power, x0, nu};
    r.normalization = weighted_integral(box, r.z, rho, e, angular, depth, -nu, options.quadrature);
    if (!(r.normalization > 0.0)) throw NumericError("non-positive normalisation integral");
    if (depth_power == 0) {
      r.lower_order = r.normalization;
      r.estimate = r.pairing.real() / r.normalization;
    } else {
      r.lower_order = boundary_gap != 0.0 ? weighted_integral(box, r.z, rho, e, angular, {}, -nu, options.quadrature)
                                          : 0.0;
      r.estimate = -(r.pairing.real() - boundary_gap * r.lower_order) / r.normalization;
    }
  });

  std::vector<double> values;
  for (const auto& r : out.per_tau) values.push_back(r.estimate);
  if (tau_grid.size() >= 2) {
    const double ratio = tau_grid[1] / tau_grid[0];
    for (std::size_t j = 2; j < tau_grid.size(); ++j)
      if (std::abs(tau_grid[j] / tau_grid[j - 1] - ratio) > 1e-9 * ratio)
        throw RangeError("tau grid must be geometric");
    if (!(ratio > 0.0 && ratio < 1.0)) throw RangeError("tau grid must be decreasing");
    out.extrapolation = richardson(values, ratio, options.richardson_levels);
  } else {
    out.extrapolation = richardson(values, 0.5, 0);
  }
  out.value = out.extrapolation.value;
  out.residual = out.extrapolation.residual;
  return out;
}

}  // namespace

GapEstimate boundary_gap_estimate(const GapSetup& setup, const Vec3& x0, const std::vector<double>& tau_grid,
                                  int m, double rho, const GapOptions& options) {
  return run_gap(setup, x0, tau_grid, m, rho, 0, 0.0, options);
}

GapEstimate derivative_gap_estimate(const GapSetup& setup, const Vec3& x0, const std::vector<double>& tau_grid,
                                    int m, double rho, double boundary_gap, const GapOptions& options) {
  if (m < 1) throw RangeError("derivative estimates need probe order m >= 1");
  return run_gap(setup, x0, tau_grid, m, rho, 1, boundary_gap, options);
}

double boundary_sup_gap(const AdmittivityFamily& family, const ParameterField& a1, const ParameterField& a2,
                        const EtaSets& sets, int nodes_per_axis) {
  if (nodes_per_axis < 2) throw RangeError("need at least two nodes per axis");
  const Rect2& r = sets.sigma_eta;
  double sup = 0.0;
  for (int i = 0; i < nodes_per_axis; ++i)
    for (int j = 0; j < nodes_per_axis; ++j) {
      const double u = r.u0 + (r.u1 - r.u0) * i / (nodes_per_axis - 1);
      const double v = r.v0 + (r.v1 - r.v0) * j / (nodes_per_axis - 1);
      const Point x = sets.sigma.point(sets.box, u, v);
      sup = std::max(sup, max_entry_norm(family.evaluate(x, a1(x)) - family.evaluate(x, a2(x))));
    }
  return sup;
}

StabilityEntry lipschitz_ratio(const AdmittivityFamily& family, const ParameterField& a1,
                               const ParameterField& a2, const EtaSets& sets, const LocalDtnMatrix& l1,
                               const LocalDtnMatrix& l2, int nodes_per_axis) {
  StabilityEntry e;
  e.a1 = a1.description;
  e.a2 = a2.description;
  e.lhs = boundary_sup_gap(family, a1, a2, sets, nodes_per_axis);
  e.rhs = dtn_star_norm(l1, l2);
  if (e.rhs > 0.0) e.ratio = e.lhs / e.rhs;
  e.violation = e.rhs == 0.0 && e.lhs > 0.0;
  return e;
}

void finalize_report(StabilityReport& report) {
  std::vector<double> x, y, ratios;
  for (const auto& e : report.entries) {
    if (e.lhs > 0.0 && e.rhs > 0.0) {
      x.push_back(e.rhs);
      y.push_back(e.lhs);
    }
    if (e.ratio) ratios.push_back(*e.ratio);
  }
  report.fit.reset();
  report.ratio_spread.reset();
  if (x.size() >= 2) report.fit = fit_loglog(x, y);
  if (ratios.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    if (*lo > 0.0) report.ratio_spread = *hi / *lo;
  }
}

}  // namespace calderon
