#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "calderon/types.hpp"

namespace calderon {

// Complex n x n matrix that is symmetric in the bilinear sense
// (entries[i][j] == entries[j][i], no conjugation).
class ComplexSymMatrix {
 public:
  ComplexSymMatrix() = default;

  // Throws InvariantError unless `m` is square, n >= 1 and exactly symmetric.
  explicit ComplexSymMatrix(ComplexMatrix m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  RealMatrix real() const { return m_.real(); }
  RealMatrix imag() const { return m_.imag(); }
  cdouble operator()(int i, int j) const { return m_(i, j); }

 private:
  ComplexMatrix m_;
};

// The a-priori constants the stability constants depend on.
struct AprioriData {
  int n = 3;
  double p = 6.0;       // Sobolev exponent, p > n
  double k = 0.0;       // frequency
  double lambda = 2.0;  // a takes values in [1/lambda, lambda]
  double e1 = 2.0;      // ellipticity of the real part
  double e2 = 2.0;      // definiteness of the imaginary part
  double big_e = 10.0;  // Sobolev norm bound of the family (checked as a sup bound)
  double dcal = 1.0;    // monotonicity constant
  double fcal = 10.0;   // W^{1,p} bound of a
  double alpha = 0.25;  // Hoelder exponent, 0 < alpha < 1 - n/p
  double r0 = 0.5;
  double lip = 1.0;     // boundary Lipschitz constant L
  double eta = 0.1;
  double eta0 = 0.3;
  double tau0 = 0.0125;
  double diam = 1.7320508075688772;

  double beta() const { return 1.0 - static_cast<double>(n) / p; }

  // Returns the list of violated invariants (empty when consistent).
  std::vector<std::string> violations() const;
  // Throws ConfigError listing every violated invariant.
  void validate() const;
};

using MatrixField = std::function<RealMatrix(const Point& x, double t)>;

// One-parameter family t -> A(x,t) = A_R(x,t) + i k A_I(x,t) together with its
// t-derivative. A_R and A_I are real symmetric and assumed to commute.
struct AdmittivityFamily {
  std::string name;
  int dim = 3;
  double k = 0.0;
  MatrixField real_part;
  MatrixField imag_part;
  MatrixField dt_real;
  MatrixField dt_imag;
  bool commuting = true;

  // Unchecked evaluation, used in assembly hot loops.
  ComplexMatrix evaluate(const Point& x, double t) const;
  // D_t A(x,t) = D_t A_R + i k D_t A_I.
  ComplexMatrix evaluate_dt(const Point& x, double t) const;
};

// Scalar unknown a(x) with optional gradient.
struct ParameterField {
  std::string description;
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> grad;

  double operator()(const Point& x) const { return value(x); }
};

// --- builtin family templates ------------------------------------------------

// A_R = t I, A_I = (imag0 + imag1 t) I in dimension n.
AdmittivityFamily scalar_identity_family(int n, double k, double imag0 = 1.0, double imag1 = 0.0);

// A_R = diag(r0 + r1 t), A_I = diag(i0 + i1 t), entrywise on the given vectors.
AdmittivityFamily diagonal_affine_family(double k, std::vector<double> r0, std::vector<double> r1,
                                         std::vector<double> i0, std::vector<double> i1);

struct RotatedAnisotropicParams {
  double anisotropy = 0.3;  // A_R = t R (I + anisotropy diag(1,-1,0)) R^T
  std::array<double, 3> imag_eigen{1.0, 1.0, 1.0};
  double imag_slope = 0.0;  // A_I = R (diag(imag_eigen) + imag_slope t I) R^T
  double angle = 0.5;       // rotation about e3 at x = 0
  double twist = 0.0;       // rotation angle grows by twist * x_1
  double tilt = 0.0;        // fixed rotation about e1 applied after the twist
};

// Three-dimensional family whose principal axes rotate in space; A_R and A_I
// share the eigenbasis R(x) so they commute everywhere.
AdmittivityFamily rotated_anisotropic_family(double k, const RotatedAnisotropicParams& params);

// --- parameter fields ---------------------------------------------------------

ParameterField constant_field(double value, int n = 3);
// a(x) = c0 + slope . x
ParameterField affine_field(double c0, const Point& slope);
// a(x) = base + amplitude * exp(-|x - center|^2 / width^2)
ParameterField bump_field(double base, double amplitude, const Point& center, double width);
// a(x) = f(x) + s * g(x)
ParameterField perturbed_field(const ParameterField& base, const ParameterField& direction, double s);

// --- operations -----------------------------------------------------------------

// A_R(x,t) + i k A_I(x,t). Throws RangeError when t lies outside [1/lambda, lambda]
// and InvariantError when a callable returns a non-symmetric matrix.
ComplexSymMatrix eval_admittivity(const AdmittivityFamily& family, const Point& x, double t,
                                  double lambda);

struct ValidationSample {
  Point x;
  double t = 1.0;
  ComplexVector xi;  // real directions are complex vectors with zero imaginary part
};

struct ConditionResult {
  std::string name;
  double worst_margin = 0.0;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ConditionResult> conditions;
  std::string imag_branch;  // "AI1" (positive definite), "AI2" (negative definite) or "none"
  bool passed = true;

  const ConditionResult* find(const std::string& name) const;
};

inline constexpr double kValidationTolerance = 1e-12;

// Checks the class-H conditions (ellipticity, definiteness of the imaginary part,
// t-monotonicity, boundedness, commutation, symmetry) at the sampled points. The
// quadratic forms are evaluated at the supplied directions and at the eigenvectors
// of each sampled matrix, so margins are worst cases over all directions.
ValidationReport validate_class_H(const AdmittivityFamily& family, const AprioriData& apriori,
                                  const std::vector<ValidationSample>& samples);

// Deterministic sample set: a grid of points in [lo, hi]^3 times a grid of t in
// [1/lambda, lambda], with seeded random real and complex directions.
std::vector<ValidationSample> default_validation_samples(const Vec3& lo, const Vec3& hi,
                                                         double lambda, unsigned seed,
                                                         int points_per_axis = 3,
                                                         int t_count = 5);

struct InverseParts {
  RealMatrix real_part;
  RealMatrix imag_part;
};

// Real and imaginary part of M^{-1} for M = A_R + i k A_I with commuting parts:
// A_R (A_R^2 + k^2 A_I^2)^{-1} and -k A_I (A_R^2 + k^2 A_I^2)^{-1}.
InverseParts inverse_parts(const ComplexSymMatrix& m, double k);

struct Partition {
  double a = 1.0 / 3.0;
  double b = 1.0 / 3.0;
  double c = 1.0 / 3.0;
};

struct FrequencyWindow {
  double k_max = 0.0;
  bool empty = false;
  std::array<double, 3> terms{};
  Partition partition;
};

// Admissible frequency bound for a fixed partition (a + b + c = 1).
FrequencyWindow frequency_window(double e1, double e2, int n, const Partition& partition);

// Grid search of the partition maximising frequency_window.
FrequencyWindow frequency_window_sweep(double e1, double e2, int n, double step = 0.01);

// Max-norm (largest entry modulus) of a complex matrix.
double max_entry_norm(const ComplexMatrix& m);

}  // namespace calderon
