#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "calderon/admittivity.hpp"
#include "calderon/errors.hpp"

using namespace calderon;

namespace {

AprioriData data(double k, double e1 = 2.0, double e2 = 1.0, double dcal = 1.0) {
  AprioriData d;
  d.k = k;
  d.e1 = e1;
  d.e2 = e2;
  d.dcal = dcal;
  return d;
}

std::vector<ValidationSample> samples() { return default_validation_samples(Vec3::Zero(), Vec3::Ones(), 2.0, 3); }

bool diag_close(const ComplexMatrix& m, std::vector<cdouble> d, double tol) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j) - (i == j ? d[i] : cdouble(0))) > tol) return false;
  return true;
}

}  // namespace

TEST(Eval, ScalarFamilyWithoutImaginaryPart) {
  const auto f = scalar_identity_family(3, 0.3, 0.0);
  const auto a = eval_admittivity(f, Point(Vec3(0.1, 0.2, 0.3)), 2.0, 2.0);
  EXPECT_TRUE(diag_close(a.matrix(), {2.0, 2.0, 2.0}, 0.0));
}

TEST(Eval, AddsScaledImaginaryPart) {
  const auto a = eval_admittivity(scalar_identity_family(3, 0.1), Point(Vec3::Zero()), 1.0, 2.0);
  EXPECT_TRUE(diag_close(a.matrix(), {cdouble(1, 0.1), cdouble(1, 0.1), cdouble(1, 0.1)}, 1e-15));
}

TEST(Eval, DiagonalAffineTemplate) {
  const auto f = diagonal_affine_family(0.05, {0, 0, 0}, {1, 2, 1}, {1, 1, 1}, {0, 0, 0});
  const auto a = eval_admittivity(f, Point(Vec3::Zero()), 1.5, 2.0);
  EXPECT_TRUE(diag_close(a.matrix(), {cdouble(1.5, 0.05), cdouble(3, 0.05), cdouble(1.5, 0.05)}, 1e-15));
}

TEST(Eval, RejectsParameterOutsideRange) {
  const auto f = scalar_identity_family(3, 0.1);
  EXPECT_THROW(eval_admittivity(f, Point(Vec3::Zero()), 2.5, 2.0), RangeError);
  EXPECT_THROW(eval_admittivity(f, Point(Vec3::Zero()), 0.4, 2.0), RangeError);
}

TEST(Eval, RejectsNonSymmetricCallable) {
  auto f = scalar_identity_family(3, 0.1);
  f.real_part = [](const Point&, double t) {
    RealMatrix m = t * RealMatrix::Identity(3, 3);
    m(0, 1) = 0.1;
    return m;
  };
  EXPECT_THROW(eval_admittivity(f, Point(Vec3::Zero()), 1.0, 2.0), InvariantError);
}

TEST(ComplexSym, ConstructorChecksExactSymmetry) {
  ComplexMatrix m = ComplexMatrix::Identity(3, 3);
  m(0, 2) = cdouble(0.2, 0.1);
  m(2, 0) = cdouble(0.2, -0.1);  // Hermitian, not symmetric
  EXPECT_THROW(ComplexSymMatrix{m}, InvariantError);
  m(2, 0) = m(0, 2);
  EXPECT_NO_THROW(ComplexSymMatrix{m});
}

TEST(ClassH, ScalarFamilyPasses) {
  const auto r = validate_class_H(scalar_identity_family(3, 0.01), data(0.01), samples());
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.imag_branch, "AI1");
  for (const char* name : {"AR assump", "mono", "bound cond1", "commuting", "symmetric"}) {
    ASSERT_NE(r.find(name), nullptr) << name;
    EXPECT_TRUE(r.find(name)->passed) << name;
  }
}

TEST(ClassH, TooSmallEllipticityBoundFails) {
  const auto r = validate_class_H(scalar_identity_family(3, 0.01), data(0.01, 1.0), samples());
  EXPECT_FALSE(r.passed);
  ASSERT_NE(r.find("AR assump"), nullptr);
  EXPECT_FALSE(r.find("AR assump")->passed);
  EXPECT_LT(r.find("AR assump")->worst_margin, 0.0);
}

TEST(ClassH, NegativeDefiniteImaginaryBranch) {
  const auto f = diagonal_affine_family(0.01, {0, 0, 0}, {1, 1, 1}, {-1, -1, -1}, {0, 0, 0});
  const auto r = validate_class_H(f, data(0.01), samples());
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.imag_branch, "AI2");
}

TEST(ClassH, EmptySampleSetFails) {
  const auto r = validate_class_H(scalar_identity_family(3, 0.01), data(0.01), {});
  EXPECT_FALSE(r.passed);
}

TEST(ClassH, MonotoneWhenImaginaryPartGrowsWithT) {
  // A = t I + i k t I: D_t A = (1 + ik) I, Re(D_t A xi . conj xi) = |xi|^2.
  const auto f = scalar_identity_family(3, 0.01, 0.0, 1.0);
  AprioriData d = data(0.01, 2.0, 2.0, 1.0);
  const auto r = validate_class_H(f, d, samples());
  ASSERT_NE(r.find("mono"), nullptr);
  EXPECT_TRUE(r.find("mono")->passed);
  EXPECT_GE(r.find("mono")->worst_margin, -1e-12);
}

TEST(ClassHProperty, ValidatedRealPartsAreUniformlyElliptic) {
  RotatedAnisotropicParams p;
  p.twist = 0.7;
  p.tilt = 0.3;
  const std::vector<std::pair<AdmittivityFamily, AprioriData>> cases{
      {scalar_identity_family(3, 0.01), data(0.01)},
      {rotated_anisotropic_family(0.001, p), data(0.001, 3.0, 3.0, 2.0)},
      {diagonal_affine_family(0.01, {0.1, 0, 0}, {1, 1.2, 0.9}, {1, 2, 1}, {0, 0, 0}), data(0.01, 3.0, 2.0, 2.0)}};
  for (const auto& [fam, d] : cases) {
    const auto ss = samples();
    ASSERT_TRUE(validate_class_H(fam, d, ss).passed) << fam.name;
    for (const auto& s : ss) {
      const RealMatrix ar = eval_admittivity(fam, s.x, s.t, d.lambda).real();
      const double lo = Eigen::SelfAdjointEigenSolver<RealMatrix>(ar).eigenvalues().minCoeff();
      EXPECT_GE(lo, 1.0 / d.e1 - 1e-10);
    }
  }
}

TEST(InverseParts, ScalarIdentityAlgebra) {
  const double k = 0.3;
  ComplexMatrix m = cdouble(1.0, k) * ComplexMatrix::Identity(3, 3);
  const auto p = inverse_parts(ComplexSymMatrix(m), k);
  EXPECT_LT((p.real_part - RealMatrix::Identity(3, 3) / (1 + k * k)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((p.imag_part + k / (1 + k * k) * RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InverseParts, RealMatrix) {
  const auto p = inverse_parts(ComplexSymMatrix(2.0 * ComplexMatrix::Identity(3, 3)), 0.0);
  EXPECT_LT((p.real_part - 0.5 * RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(p.imag_part.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InverseParts, DiagonalMatchesEntrywiseInversion) {
  ComplexMatrix m = ComplexMatrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) m(i, i) = cdouble(i + 1.0, 0.1);
  const auto p = inverse_parts(ComplexSymMatrix(m), 0.1);
  for (int i = 0; i < 3; ++i) {
    const cdouble inv = 1.0 / cdouble(i + 1.0, 0.1);
    EXPECT_NEAR(p.real_part(i, i), inv.real(), 1e-15);
    EXPECT_NEAR(p.imag_part(i, i), inv.imag(), 1e-15);
  }
  const ComplexMatrix prod = (p.real_part.cast<cdouble>() + cdouble(0, 1) * p.imag_part.cast<cdouble>()) * m;
  EXPECT_LT((prod - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InverseParts, SingularMatrixThrows) {
  EXPECT_THROW(inverse_parts(ComplexSymMatrix(ComplexMatrix::Zero(3, 3)), 0.1), SingularityError);
}

TEST(InversePartsProperty, TwoSidedInverseAndImaginarySign) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RotatedAnisotropicParams p;
  p.twist = 1.1;
  p.imag_eigen = {1.0, 1.5, 2.0};
  for (double k : {0.01, 0.2, 1.0}) {
    const auto fam = rotated_anisotropic_family(k, p);
    for (int trial = 0; trial < 30; ++trial) {
      const Point x = Vec3(u(rng), u(rng), u(rng));
      const double t = 0.5 + 1.5 * u(rng);
      const ComplexSymMatrix m = eval_admittivity(fam, x, t, 2.0);
      const auto ip = inverse_parts(m, k);
      const ComplexMatrix inv = ip.real_part.cast<cdouble>() + cdouble(0, 1) * ip.imag_part.cast<cdouble>();
      EXPECT_LT((inv * m.matrix() - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((m.matrix() * inv - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
      // Positive definite A_I makes the imaginary part of the inverse negative definite.
      const RealMatrix sym = 0.5 * (ip.imag_part + ip.imag_part.transpose());
      EXPECT_LT(Eigen::SelfAdjointEigenSolver<RealMatrix>(sym).eigenvalues().maxCoeff(), 0.0);
    }
  }
}

TEST(FrequencyWindow, EqualPartitionUnitBounds) {
  const auto w = frequency_window(1.0, 1.0, 3, Partition{});
  const long double pi = 3.141592653589793238462643383279502884L;
  const double expected = static_cast<double>(std::tan(pi / 18.0L));
  EXPECT_NEAR(w.k_max, expected, 1e-10);
  EXPECT_NEAR(w.k_max, 0.17633, 1e-5);
  EXPECT_FALSE(w.empty);
}

TEST(FrequencyWindow, LimitConventionForEqualBounds) {
  const auto w = frequency_window(1.7, 1.7, 3, Partition{0.98, 0.01, 0.01});
  EXPECT_NEAR(w.terms[0], std::tan(0.98 * kPi / 4.0), 1e-15);
}

TEST(FrequencyWindow, UnitLowerBoundEmptiesTheWindow) {
  const auto w = frequency_window(2.0, 1.0, 3, Partition{});
  EXPECT_TRUE(w.empty);
  EXPECT_EQ(w.k_max, 0.0);
}

TEST(FrequencyWindow, RejectsBadPartition) {
  EXPECT_THROW(frequency_window(1.0, 1.0, 3, Partition{0.5, 0.5, 0.0}), RangeError);
  EXPECT_THROW(frequency_window(1.0, 1.0, 3, Partition{0.5, 0.3, 0.3}), RangeError);
}

TEST(FrequencyWindowProperty, NonIncreasingInLargerBound) {
  for (double m : {1.2, 1.5, 2.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double big = m; big < 6.0; big += 0.25) {
      const double k = frequency_window(m, big, 3, Partition{0.3, 0.35, 0.35}).k_max;
      EXPECT_LE(k, prev + 1e-15);
      prev = k;
    }
  }
}

TEST(FrequencyWindowProperty, SweepDominatesEveryGridPartition) {
  const auto best = frequency_window_sweep(2.0, 2.0, 3);
  for (double a : {0.1, 0.3, 0.5})
    for (double b : {0.1, 0.2, 0.3})
      EXPECT_GE(best.k_max, frequency_window(2.0, 2.0, 3, Partition{a, b, 1.0 - a - b}).k_max - 1e-15);
}

TEST(Apriori, ReportsViolatedInvariants) {
  AprioriData d;
  EXPECT_TRUE(d.violations().empty());
  d.p = 2.5;
  EXPECT_FALSE(d.violations().empty());
  EXPECT_THROW(d.validate(), ConfigError);
  d = AprioriData{};
  d.alpha = 0.6;  // beta = 0.5
  EXPECT_FALSE(d.violations().empty());
  d = AprioriData{};
  d.lambda = 0.5;
  EXPECT_FALSE(d.violations().empty());
}

TEST(Fields, BuildersAndPerturbation) {
  const auto c = constant_field(1.3);
  EXPECT_EQ(c(Point(Vec3(0.2, 0.1, 0.9))), 1.3);
  const auto a = affine_field(1.0, Point(Vec3(0, 0, 0.5)));
  EXPECT_DOUBLE_EQ(a(Point(Vec3(0.3, 0.3, 0.4))), 1.2);
  const auto b = bump_field(1.0, 0.5, Point(Vec3::Constant(0.5)), 0.2);
  EXPECT_DOUBLE_EQ(b(Point(Vec3::Constant(0.5))), 1.5);
  const auto p = perturbed_field(c, a, 0.1);
  EXPECT_DOUBLE_EQ(p(Point(Vec3(0.3, 0.3, 0.4))), 1.3 + 0.1 * 1.2);
}
