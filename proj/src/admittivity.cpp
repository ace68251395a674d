#include "calderon/admittivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "calderon/errors.hpp"

namespace calderon {

namespace {

bool exactly_symmetric(const RealMatrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

double asymmetry(const RealMatrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

std::string describe(const Point& x, double t) {
  std::ostringstream os;
  os << "x=(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << "), t=" << t;
  return os.str();
}

RealMatrix rotation3(double angle_z, double tilt_x) {
  const double cz = std::cos(angle_z), sz = std::sin(angle_z);
  const double cx = std::cos(tilt_x), sx = std::sin(tilt_x);
  Eigen::Matrix3d rz, rx;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  return rz * rx;
}

// R D R^T symmetrised entrywise, so the result is exactly symmetric.
RealMatrix congruence(const RealMatrix& r, const Eigen::Vector3d& diag) {
  RealMatrix m = r * diag.asDiagonal() * r.transpose();
  RealMatrix s = 0.5 * (m + m.transpose());
  return s;
}

}  // namespace

ComplexSymMatrix::ComplexSymMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0)
    throw InvariantError("ComplexSymMatrix: matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < m_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m_.cols(); ++j)
      if (m_(i, j) != m_(j, i))
        throw InvariantError("ComplexSymMatrix: entries (" + std::to_string(i) + "," +
                             std::to_string(j) + ") and transpose differ");
}

std::vector<std::string> AprioriData::violations() const {
  std::vector<std::string> out;
  if (n < 3) out.emplace_back("n must be >= 3");
  if (!(p > n)) out.emplace_back("p must exceed n");
  if (!(alpha > 0.0 && alpha < beta())) out.emplace_back("alpha must lie in (0, 1 - n/p)");
  if (!(lambda >= 1.0)) out.emplace_back("lambda must be >= 1");
  if (!(k >= 0.0)) out.emplace_back("k must be >= 0");
  if (!(e1 > 0 && e2 > 0 && big_e > 0 && dcal > 0 && fcal > 0))
    out.emplace_back("e1, e2, E, D, F must be positive");
  if (!(eta > 0.0 && eta <= eta0 && eta0 < r0)) out.emplace_back("need 0 < eta <= eta0 < r0");
  if (!(tau0 > 0.0)) out.emplace_back("tau0 must be positive");
  if (!(diam > 0.0)) out.emplace_back("diam must be positive");
  return out;
}

void AprioriData::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "a-priori data invalid:";
  for (const auto& s : v) msg += " " + s + ";";
  throw ConfigError(msg);
}

ComplexMatrix AdmittivityFamily::evaluate(const Point& x, double t) const {
  const RealMatrix ar = real_part(x, t);
  const RealMatrix ai = imag_part(x, t);
  ComplexMatrix a(ar.rows(), ar.cols());
  a.real() = ar;
  a.imag() = k * ai;
  return a;
}

ComplexMatrix AdmittivityFamily::evaluate_dt(const Point& x, double t) const {
  const RealMatrix dr = dt_real(x, t);
  const RealMatrix di = dt_imag(x, t);
  ComplexMatrix a(dr.rows(), dr.cols());
  a.real() = dr;
  a.imag() = k * di;
  return a;
}

AdmittivityFamily scalar_identity_family(int n, double k, double imag0, double imag1) {
  if (n < 1) throw ConfigError("scalar-times-identity: dimension must be positive");
  AdmittivityFamily f;
  f.name = "scalar-times-identity";
  f.dim = n;
  f.k = k;
  f.real_part = [n](const Point&, double t) -> RealMatrix { return t * RealMatrix::Identity(n, n); };
  f.imag_part = [n, imag0, imag1](const Point&, double t) -> RealMatrix {
    return (imag0 + imag1 * t) * RealMatrix::Identity(n, n);
  };
  f.dt_real = [n](const Point&, double) -> RealMatrix { return RealMatrix::Identity(n, n); };
  f.dt_imag = [n, imag1](const Point&, double) -> RealMatrix {
    return imag1 * RealMatrix::Identity(n, n);
  };
  return f;
}

AdmittivityFamily diagonal_affine_family(double k, std::vector<double> r0, std::vector<double> r1,
                                         std::vector<double> i0, std::vector<double> i1) {
  const std::size_t n = r0.size();
  if (n == 0 || r1.size() != n || i0.size() != n || i1.size() != n)
    throw ConfigError("diagonal-affine: coefficient vectors must share a nonzero length");
  const Eigen::VectorXd vr0 = Eigen::Map<const Eigen::VectorXd>(r0.data(), n);
  const Eigen::VectorXd vr1 = Eigen::Map<const Eigen::VectorXd>(r1.data(), n);
  const Eigen::VectorXd vi0 = Eigen::Map<const Eigen::VectorXd>(i0.data(), n);
  const Eigen::VectorXd vi1 = Eigen::Map<const Eigen::VectorXd>(i1.data(), n);
  AdmittivityFamily f;
  f.name = "diagonal-affine";
  f.dim = static_cast<int>(n);
  f.k = k;
  f.real_part = [vr0, vr1](const Point&, double t) -> RealMatrix {
    return (vr0 + t * vr1).asDiagonal();
  };
  f.imag_part = [vi0, vi1](const Point&, double t) -> RealMatrix {
    return (vi0 + t * vi1).asDiagonal();
  };
  f.dt_real = [vr1](const Point&, double) -> RealMatrix { return vr1.asDiagonal(); };
  f.dt_imag = [vi1](const Point&, double) -> RealMatrix { return vi1.asDiagonal(); };
  return f;
}

AdmittivityFamily rotated_anisotropic_family(double k, const RotatedAnisotropicParams& p) {
  AdmittivityFamily f;
  f.name = "rotated-anisotropic";
  f.dim = 3;
  f.k = k;
  const Eigen::Vector3d shape(1.0 + p.anisotropy, 1.0 - p.anisotropy, 1.0);
  const Eigen::Vector3d imag(p.imag_eigen[0], p.imag_eigen[1], p.imag_eigen[2]);
  auto rot = [p](const Point& x) { return rotation3(p.angle + p.twist * x[0], p.tilt); };
  f.real_part = [rot, shape](const Point& x, double t) -> RealMatrix {
    return congruence(rot(x), t * shape);
  };
  f.imag_part = [rot, imag, p](const Point& x, double t) -> RealMatrix {
    const Eigen::Vector3d d = imag + Eigen::Vector3d::Constant(p.imag_slope * t);
    return congruence(rot(x), d);
  };
  f.dt_real = [rot, shape](const Point& x, double) -> RealMatrix { return congruence(rot(x), shape); };
  f.dt_imag = [rot, p](const Point& x, double) -> RealMatrix {
    return congruence(rot(x), Eigen::Vector3d::Constant(p.imag_slope));
  };
  return f;
}

ParameterField constant_field(double value, int n) {
  ParameterField a;
  a.description = "constant " + std::to_string(value);
  a.value = [value](const Point&) { return value; };
  a.grad = [n](const Point&) -> Point { return Point::Zero(n); };
  return a;
}

ParameterField affine_field(double c0, const Point& slope) {
  ParameterField a;
  a.description = "affine";
  a.value = [c0, slope](const Point& x) { return c0 + slope.dot(x); };
  a.grad = [slope](const Point&) -> Point { return slope; };
  return a;
}

ParameterField bump_field(double base, double amplitude, const Point& center, double width) {
  ParameterField a;
  a.description = "bump";
  a.value = [=](const Point& x) {
    return base + amplitude * std::exp(-(x - center).squaredNorm() / (width * width));
  };
  a.grad = [=](const Point& x) -> Point {
    const double g = amplitude * std::exp(-(x - center).squaredNorm() / (width * width));
    return (-2.0 * g / (width * width)) * (x - center);
  };
  return a;
}

ParameterField perturbed_field(const ParameterField& base, const ParameterField& direction,
                               double s) {
  ParameterField a;
  a.description = base.description + " + s*" + direction.description;
  auto bv = base.value;
  auto dv = direction.value;
  a.value = [bv, dv, s](const Point& x) { return bv(x) + s * dv(x); };
  if (base.grad && direction.grad) {
    auto bg = base.grad;
    auto dg = direction.grad;
    a.grad = [bg, dg, s](const Point& x) -> Point { return bg(x) + s * dg(x); };
  }
  return a;
}

ComplexSymMatrix eval_admittivity(const AdmittivityFamily& family, const Point& x, double t,
                                  double lambda) {
  constexpr double slack = 1e-14;
  if (t < 1.0 / lambda - slack || t > lambda + slack)
    throw RangeError("eval_admittivity: t=" + std::to_string(t) + " outside [1/lambda, lambda]");
  const RealMatrix ar = family.real_part(x, t);
  const RealMatrix ai = family.imag_part(x, t);
  if (!exactly_symmetric(ar) || !exactly_symmetric(ai))
    throw InvariantError("eval_admittivity: family callable returned a non-symmetric matrix");
  ComplexMatrix a(ar.rows(), ar.cols());
  a.real() = ar;
  a.imag() = family.k * ai;
  return ComplexSymMatrix(std::move(a));
}

const ConditionResult* ValidationReport::find(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_class_H(const AdmittivityFamily& family, const AprioriData& ap,
                                  const std::vector<ValidationSample>& samples) {
  struct Tracker {
    ConditionResult result;
    void update(double margin, const std::string& where) {
      if (margin < result.worst_margin) {
        result.worst_margin = margin;
        result.detail = where;
      }
    }
  };
  auto make = [](const char* name) {
    Tracker t;
    t.result.name = name;
    t.result.worst_margin = std::numeric_limits<double>::infinity();
    return t;
  };
  Tracker sym = make("symmetric"), comm = make("commuting"), ar = make("AR assump"),
          ai1 = make("AI1 assump"), ai2 = make("AI2 assump"), mono = make("mono"),
          bound = make("bound cond1"), norms = make("norm bound");

  const double k = family.k;
  for (const auto& s : samples) {
    const RealMatrix mr = family.real_part(s.x, s.t);
    const RealMatrix mi = family.imag_part(s.x, s.t);
    const RealMatrix dr = family.dt_real(s.x, s.t);
    const RealMatrix di = family.dt_imag(s.x, s.t);
    const std::string where = describe(s.x, s.t);

    sym.update(-std::max({asymmetry(mr), asymmetry(mi), asymmetry(dr), asymmetry(di)}), where);
    const double scale = 1.0 + mr.norm() * mi.norm();
    comm.update(-(mr * mi - mi * mr).cwiseAbs().maxCoeff() / scale, where);

    const RealMatrix mr_s = 0.5 * (mr + mr.transpose());
    const RealMatrix mi_s = 0.5 * (mi + mi.transpose());
    const RealMatrix dr_s = 0.5 * (dr + dr.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> er(mr_s), ei(mi_s), ed(dr_s);

    // Directions: the supplied one plus the eigenvectors of each matrix.
    std::vector<ComplexVector> dirs;
    if (s.xi.size() == mr.rows() && s.xi.norm() > 0) dirs.push_back(s.xi / s.xi.norm());
    for (const auto* es : {&er, &ei, &ed})
      for (Eigen::Index c = 0; c < mr.rows(); ++c)
        dirs.push_back(es->eigenvectors().col(c).cast<cdouble>());

    ComplexMatrix dta(dr.rows(), dr.cols());
    dta.real() = dr;
    dta.imag() = k * di;
    for (const auto& xi : dirs) {
      // Real conditions use the real and imaginary components as real directions.
      for (const Eigen::VectorXd& v : {Eigen::VectorXd(xi.real()), Eigen::VectorXd(xi.imag())}) {
        const double nv = v.squaredNorm();
        if (nv < 1e-24) continue;
        const double qr = v.dot(mr * v) / nv;
        const double qi = v.dot(mi * v) / nv;
        ar.update(std::min(qr - 1.0 / ap.e1, ap.e1 - qr), where);
        ai1.update(std::min(qi - 1.0 / ap.e2, ap.e2 - qi), where);
        ai2.update(std::min(qi + ap.e2, -1.0 / ap.e2 - qi), where);
      }
      // Monotonicity over complex directions: Re(sum_ij (D_tA)_ij xi_j conj(xi_i)).
      const cdouble form = xi.adjoint() * dta * xi;
      mono.update(form.real() / xi.squaredNorm() - 1.0 / ap.dcal, where);
    }

    const double nr = er.eigenvalues().cwiseAbs().maxCoeff();
    const double ni = ei.eigenvalues().cwiseAbs().maxCoeff();
    bound.update(ap.e1 * ap.e1 + k * k * ap.e2 * ap.e2 - (nr * nr + k * k * ni * ni), where);
    const double nd = std::sqrt(dr.squaredNorm() + k * k * di.squaredNorm());
    norms.update(ap.big_e - (std::sqrt(nr * nr + k * k * ni * ni) + nd), where);
  }

  ValidationReport report;
  for (Tracker* t : {&sym, &comm, &ar, &ai1, &ai2, &mono, &bound, &norms}) {
    if (samples.empty()) t->result.worst_margin = 0.0;
    t->result.passed = t->result.worst_margin >= -kValidationTolerance;
    report.conditions.push_back(t->result);
  }
  const bool b1 = ai1.result.passed, b2 = ai2.result.passed;
  report.imag_branch = b1 ? "AI1" : (b2 ? "AI2" : "none");
  report.passed = !samples.empty();
  for (const auto& c : report.conditions) {
    if (c.name == "AI1 assump" || c.name == "AI2 assump") continue;
    report.passed = report.passed && c.passed;
  }
  report.passed = report.passed && (b1 || b2);
  return report;
}

std::vector<ValidationSample> default_validation_samples(const Vec3& lo, const Vec3& hi,
                                                         double lambda, unsigned seed,
                                                         int points_per_axis, int t_count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ValidationSample> out;
  const int q = std::max(points_per_axis, 1);
  const int nt = std::max(t_count, 2);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      for (int l = 0; l < q; ++l) {
        Point x(3);
        const double fi = q == 1 ? 0.5 : static_cast<double>(i) / (q - 1);
        const double fj = q == 1 ? 0.5 : static_cast<double>(j) / (q - 1);
        const double fl = q == 1 ? 0.5 : static_cast<double>(l) / (q - 1);
        x << lo[0] + fi * (hi[0] - lo[0]), lo[1] + fj * (hi[1] - lo[1]), lo[2] + fl * (hi[2] - lo[2]);
        for (int it = 0; it < nt; ++it) {
          const double t = 1.0 / lambda + (lambda - 1.0 / lambda) * it / (nt - 1);
          ComplexVector real_dir(3), complex_dir(3);
          for (int c = 0; c < 3; ++c) real_dir[c] = cdouble(gauss(rng), 0.0);
          for (int c = 0; c < 3; ++c) complex_dir[c] = cdouble(gauss(rng), gauss(rng));
          out.push_back({x, t, real_dir});
          out.push_back({x, t, complex_dir});
        }
      }
  return out;
}

InverseParts inverse_parts(const ComplexSymMatrix& m, double k) {
  if (!(k >= 0.0)) throw RangeError("inverse_parts: k must be non-negative");
  const RealMatrix r = m.real();
  const RealMatrix j = m.imag();  // equals k A_I
  const RealMatrix s = r * r + j * j;
  Eigen::FullPivLU<RealMatrix> lu(s);
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  lu.setThreshold(1e-14);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-300 ||
      lu.maxPivot() < 1e-14 * scale)
    throw SingularityError("inverse_parts: A_R^2 + k^2 A_I^2 is singular");
  const RealMatrix s_inv = lu.inverse();
  return {r * s_inv, -j * s_inv};
}

FrequencyWindow frequency_window(double e1, double e2, int n, const Partition& part) {
  if (!(e1 > 0 && e2 > 0)) throw RangeError("frequency_window: e1, e2 must be positive");
  if (n < 1) throw RangeError("frequency_window: n must be positive");
  if (!(part.a > 0 && part.b > 0 && part.c > 0) ||
      std::abs(part.a + part.b + part.c - 1.0) > 1e-12)
    throw RangeError("frequency_window: partition must be positive and sum to 1");

  const double big = std::max(e1, e2);
  const double small = std::min(e1, e2);
  FrequencyWindow w;
  w.partition = part;
  const double ta = std::tan(part.a * kPi / 4.0);
  if (std::abs(big - small) <= 1e-14 * big) {
    w.terms[0] = ta;  // limit of the ratio as M -> m
  } else {
    const double num = small * small * small - 1.0 / (small * small * small);
    const double den = big * big * big - 1.0 / (big * big * big);
    w.terms[0] = den > 0.0 ? num * ta / den : 0.0;
  }
  const double m6 = std::pow(big, -6.0);
  w.terms[1] = m6 * std::tan(part.b * kPi / (2.0 * n));
  w.terms[2] = m6 * std::tan(part.c * kPi / (2.0 * n));
  const double kmax = std::min({w.terms[0], w.terms[1], w.terms[2]});
  if (kmax <= 0.0) {
    w.k_max = 0.0;
    w.empty = true;
  } else {
    w.k_max = kmax;
  }
  return w;
}

FrequencyWindow frequency_window_sweep(double e1, double e2, int n, double step) {
  if (!(step > 0.0 && step < 1.0 / 3.0)) throw RangeError("frequency_window_sweep: bad step");
  const int cells = static_cast<int>(std::lround(1.0 / step));
  FrequencyWindow best;
  bool have = false;
  for (int ia = 1; ia < cells; ++ia)
    for (int ib = 1; ia + ib < cells; ++ib) {
      const int ic = cells - ia - ib;
      Partition p{static_cast<double>(ia) / cells, static_cast<double>(ib) / cells,
                  static_cast<double>(ic) / cells};
      p.c = 1.0 - p.a - p.b;
      const FrequencyWindow w = frequency_window(e1, e2, n, p);
      if (!have || w.k_max > best.k_max) {
        best = w;
        have = true;
      }
    }
  return best;
}

double max_entry_norm(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace calderon
