#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "calderon/dtn.hpp"
#include "calderon/errors.hpp"

using namespace calderon;

namespace {

BoundaryPatch central() { return BoundaryPatch{Face::ZHi, Rect2{0.2, 0.8, 0.2, 0.8}}; }

std::shared_ptr<const Mesh> mesh(double h) { return std::make_shared<const Mesh>(build_mesh(BoxDomain(), h, central())); }

RotatedAnisotropicParams twisted() {
  RotatedAnisotropicParams p;
  p.twist = 0.6;
  p.imag_eigen = {1.0, 1.4, 1.8};
  return p;
}

ComplexVector random_coeffs(int d, std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexVector c(d);
  for (int i = 0; i < d; ++i) c[i] = cdouble(g(rng), g(rng));
  return c;
}

// sup over f of max_g |f^T D g| with |f|_G = |g|_G = 1, sampling f and maximising g exactly.
double monte_carlo_norm(const ComplexMatrix& d, const RealMatrix& gram, int samples, unsigned seed) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram);
  const RealMatrix inv_sqrt = es.operatorInverseSqrt();
  std::mt19937 rng(seed);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    ComplexVector x = random_coeffs(static_cast<int>(d.rows()), rng);
    x.normalize();
    const ComplexVector f = inv_sqrt * x;
    // For fixed f the best unit g attains |G^{-1/2} D^T f|.
    best = std::max(best, (inv_sqrt * (d.transpose() * f)).norm());
  }
  return best;
}

}  // namespace

TEST(SigmaBasis, HatsStrictlyInsideSigma) {
  const auto m = mesh(0.1);
  const auto b = sigma_basis(*m);
  EXPECT_EQ(b.count(), 25);
  for (int v : b.vertices) {
    const Vec3& x = m->vertices[v];
    EXPECT_DOUBLE_EQ(x.z(), 1.0);
    EXPECT_TRUE(x.x() > 0.2 + 1e-12 && x.x() < 0.8 - 1e-12 && x.y() > 0.2 + 1e-12 && x.y() < 0.8 - 1e-12);
  }
  const auto sub = b.subset({0, 3});
  EXPECT_EQ(sub.count(), 2);
  EXPECT_EQ(sub.vertices[1], b.vertices[3]);
}

TEST(Dtn, EqualCoefficientsGiveIdenticalMatrices) {
  const auto m = mesh(0.125);
  const auto fam = scalar_identity_family(3, 0.05);
  const auto l1 = assemble_dtn(ForwardModel(m, fam, constant_field(1.1)));
  const auto l2 = assemble_dtn(ForwardModel(m, fam, constant_field(1.1)));
  EXPECT_EQ((l1.pairing - l2.pairing).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(dtn_star_norm(l1, l2), 0.0);
}

TEST(Dtn, LaplacePairingIsRealSymmetricDefinite) {
  const auto m = mesh(0.125);
  const auto l = assemble_dtn(ForwardModel(m, scalar_identity_family(3, 0.0, 0.0), constant_field(1.0)));
  EXPECT_EQ(l.pairing.imag().cwiseAbs().maxCoeff(), 0.0);
  const RealMatrix p = l.pairing.real();
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<RealMatrix>(0.5 * (p + p.transpose())).eigenvalues().minCoeff(), -1e-12);
}

TEST(Dtn, SingleHatScalesWithCoefficient) {
  const auto m = mesh(0.1);
  const auto basis = sigma_basis(*m).subset({12});
  const auto fam = scalar_identity_family(3, 0.0, 0.0);
  const auto p1 = dtn_pairing(ForwardModel(m, fam, constant_field(1.0)), basis);
  const auto p2 = dtn_pairing(ForwardModel(m, fam, constant_field(1.7)), basis);
  ASSERT_EQ(p1.rows(), 1);
  EXPECT_NEAR(std::abs(p2(0, 0) - 1.7 * p1(0, 0)), 0.0, 1e-12 * std::abs(p2(0, 0)));
}

TEST(Dtn, PairingIndependentOfInteriorLifting) {
  const auto m = mesh(0.125);
  const auto fam = rotated_anisotropic_family(0.1, twisted());
  ForwardModel model(m, fam, affine_field(1.0, Point(Vec3(0.2, 0.1, 0))));
  const auto basis = sigma_basis(*m);
  std::mt19937 rng(4);
  const ComplexVector f = basis.nodal(random_coeffs(basis.count(), rng), m->num_vertices());
  const ComplexVector g = basis.nodal(random_coeffs(basis.count(), rng), m->num_vertices());
  const auto u = model.solve(f);
  ComplexVector lift = random_coeffs(m->num_vertices(), rng);
  for (int i = 0; i < m->num_vertices(); ++i)
    if (model.system().dirichlet_mask[i]) lift[i] = g[i];
  const cdouble e = energy_pairing(fam, model.field(), *m, u, ComplexField{m->id(), lift});
  EXPECT_LE(std::abs(model.pairing(u, g) - e), 1e-10 * std::abs(e));
}

TEST(DtnProperty, BilinearSymmetry) {
  const auto m = mesh(0.125);
  for (double k : {0.0, 0.05, 0.5}) {
    const auto l = assemble_dtn(ForwardModel(m, rotated_anisotropic_family(k, twisted()),
                                             bump_field(1.0, 0.3, Point(Vec3(0.5, 0.5, 0.8)), 0.2)));
    const double scale = l.pairing.cwiseAbs().maxCoeff();
    EXPECT_LE((l.pairing - l.pairing.transpose()).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(Gram, SymmetricPositiveDefinite) {
  const auto m = mesh(0.1);
  const auto basis = sigma_basis(*m);
  const RealMatrix g = h_half_gram(*m, basis);
  EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<RealMatrix>(g).eigenvalues().minCoeff(), 0.0);
  const RealMatrix single = h_half_gram(*m, basis.subset({5}));
  EXPECT_GT(single(0, 0), 0.0);
}

TEST(Gram, NormOfSmoothDataStableUnderRefinement) {
  auto norm_at = [](double h) {
    const auto m = mesh(h);
    const auto basis = sigma_basis(*m);
    ComplexVector c(basis.count());
    for (int i = 0; i < basis.count(); ++i) {
      const Vec3& x = m->vertices[basis.vertices[i]];
      c[i] = std::sin(kPi * (x.x() - 0.2) / 0.6) * std::sin(kPi * (x.y() - 0.2) / 0.6);
    }
    return std::sqrt(gram_norm(c, h_half_gram(*m, basis)));
  };
  const double coarse = norm_at(0.1), fine = norm_at(0.05);
  EXPECT_LT(std::max(coarse / fine, fine / coarse), 1.3);
}

TEST(StarNorm, MultipleOfGramHasNormAbsC) {
  std::mt19937 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  RealMatrix b(4, 4);
  for (int i = 0; i < 16; ++i) b.data()[i] = g(rng);
  const RealMatrix gram = b * b.transpose() + RealMatrix::Identity(4, 4);
  const cdouble c(0.3, -0.4);
  EXPECT_NEAR(star_norm(c * gram.cast<cdouble>(), gram), 0.5, 1e-12);
  EXPECT_EQ(star_norm(ComplexMatrix::Zero(4, 4), gram), 0.0);
}

TEST(StarNorm, NonDefiniteGramThrows) {
  RealMatrix gram = RealMatrix::Identity(3, 3);
  gram(2, 2) = -1.0;
  EXPECT_THROW(star_norm(ComplexMatrix::Identity(3, 3), gram), NumericError);
}

TEST(StarNorm, MatchesMonteCarloOnThreeHats) {
  const auto m = mesh(0.1);
  const auto basis = sigma_basis(*m).subset({6, 12, 18});
  const RealMatrix gram = h_half_gram(*m, basis);
  const auto fam = scalar_identity_family(3, 0.05);
  const auto l1 = assemble_dtn(ForwardModel(m, fam, constant_field(1.0)), basis, gram);
  const auto l2 = assemble_dtn(ForwardModel(m, fam, bump_field(1.0, 0.3, Point(Vec3(0.5, 0.5, 0.9)), 0.2)), basis, gram);
  const double exact = dtn_star_norm(l1, l2);
  const double mc = monte_carlo_norm(l1.pairing - l2.pairing, gram, 100000, 1);
  EXPECT_GT(exact, 0.0);
  EXPECT_LE(mc, exact * (1 + 1e-12));
  EXPECT_GE(mc, 0.99 * exact);
}

TEST(StarNormProperty, TriangleInequalityAndHomogeneity) {
  std::mt19937 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    RealMatrix b(5, 5);
    for (int i = 0; i < 25; ++i) b.data()[i] = g(rng);
    const RealMatrix gram = b * b.transpose() + 0.5 * RealMatrix::Identity(5, 5);
    ComplexMatrix x(5, 5), y(5, 5);
    for (int i = 0; i < 25; ++i) {
      x.data()[i] = cdouble(g(rng), g(rng));
      y.data()[i] = cdouble(g(rng), g(rng));
    }
    const double nx = star_norm(x, gram), ny = star_norm(y, gram);
    EXPECT_LE(star_norm(x + y, gram), nx + ny + 1e-10);
    const cdouble c(g(rng), g(rng));
    EXPECT_NEAR(star_norm(c * x, gram), std::abs(c) * nx, 1e-10 * std::max(1.0, nx));
  }
}

TEST(StarNormProperty, ShrinkingSigmaNeverIncreasesNorm) {
  const auto m = mesh(0.1);
  const auto basis = sigma_basis(*m);
  const RealMatrix gram = h_half_gram(*m, basis);
  const auto fam = scalar_identity_family(3, 0.05);
  const auto l1 = assemble_dtn(ForwardModel(m, fam, constant_field(1.0)), basis, gram);
  const auto l2 = assemble_dtn(ForwardModel(m, fam, affine_field(1.0, Point(Vec3(0, 0.2, 0.1)))), basis, gram);
  const ComplexMatrix diff = l1.pairing - l2.pairing;
  double prev = star_norm(diff, gram);
  for (int keep : {20, 12, 6, 2}) {
    std::vector<int> idx;
    for (int i = 0; i < keep; ++i) idx.push_back(i);
    const Eigen::VectorXi ix = Eigen::Map<Eigen::VectorXi>(idx.data(), keep);
    const double n = star_norm(diff(ix, ix), gram(ix, ix));
    EXPECT_LE(n, prev * (1 + 1e-12));
    prev = n;
  }
}

TEST(Alessandrini, EqualCoefficientsBothSidesVanish) {
  const auto m = mesh(0.125);
  const auto fam = scalar_identity_family(3, 0.05);
  ForwardModel m1(m, fam, constant_field(1.0)), m2(m, fam, constant_field(1.0));
  const auto basis = sigma_basis(*m);
  std::mt19937 rng(1);
  const auto f = basis.nodal(random_coeffs(basis.count(), rng), m->num_vertices());
  const auto c = alessandrini_gap(m1, m2, f, f);
  EXPECT_EQ(std::abs(c.lhs), 0.0);
  EXPECT_EQ(std::abs(c.rhs), 0.0);
}

TEST(Alessandrini, ScalarAndAnisotropicFamilies) {
  const auto m = mesh(0.125);
  const auto basis = sigma_basis(*m);
  std::mt19937 rng(2);
  const std::vector<std::pair<AdmittivityFamily, std::pair<ParameterField, ParameterField>>> cases{
      {scalar_identity_family(3, 0.0, 0.0), {constant_field(1.0), constant_field(1.2)}},
      {scalar_identity_family(3, 0.1), {constant_field(1.0), affine_field(1.0, Point(Vec3(0.1, 0.2, 0.3)))}},
      {rotated_anisotropic_family(0.2, twisted()),
       {affine_field(1.0, Point(Vec3(0.1, 0, 0))), bump_field(1.0, 0.4, Point(Vec3(0.5, 0.5, 0.8)), 0.2)}}};
  for (const auto& [fam, fields] : cases) {
    ForwardModel m1(m, fam, fields.first), m2(m, fam, fields.second);
    for (int trial = 0; trial < 3; ++trial) {
      const auto f1 = basis.nodal(random_coeffs(basis.count(), rng), m->num_vertices());
      const auto f2 = basis.nodal(random_coeffs(basis.count(), rng), m->num_vertices());
      const auto c = alessandrini_gap(m1, m2, f1, f2);
      EXPECT_GT(std::abs(c.rhs), 0.0);
      EXPECT_TRUE(c.passed(1e-9)) << fam.name << " residual " << std::abs(c.residual);
    }
  }
}
