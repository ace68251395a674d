#include <random>

#include <gtest/gtest.h>

#include "calderon/errors.hpp"
#include "calderon/geometry.hpp"

using namespace calderon;

namespace {

BoundaryPatch top(double lo, double hi) { return BoundaryPatch{Face::ZHi, Rect2{lo, hi, lo, hi}}; }

void expect_rect(const Rect2& r, double lo, double hi) {
  EXPECT_NEAR(r.u0, lo, 1e-15);
  EXPECT_NEAR(r.u1, hi, 1e-15);
  EXPECT_NEAR(r.v0, lo, 1e-15);
  EXPECT_NEAR(r.v1, hi, 1e-15);
}

}  // namespace

TEST(Faces, AxisSideAndNames) {
  EXPECT_EQ(face_axis(Face::ZHi), 2);
  EXPECT_EQ(face_side(Face::XLo), -1);
  EXPECT_EQ(face_from_name("top"), Face::ZHi);
  EXPECT_EQ(face_from_name(face_name(Face::YLo)), Face::YLo);
  EXPECT_THROW(face_from_name("left"), ConfigError);
  const BoxDomain box;
  EXPECT_EQ(box.outward_normal(Face::ZLo), Vec3(0, 0, -1));
}

TEST(BoxDomain, RejectsInvertedCorners) { EXPECT_THROW(BoxDomain(Vec3(0, 0, 0), Vec3(1, 0, 1)), GeometryError); }

TEST(BoundaryPatch, MustLieStrictlyInsideFace) {
  const BoxDomain box;
  EXPECT_NO_THROW(top(0.2, 0.8).check(box));
  EXPECT_THROW(top(0.0, 0.8).check(box), GeometryError);
  EXPECT_THROW(top(0.5, 0.5).check(box), GeometryError);
}

TEST(EtaSets, InsetOfCentralPatch) {
  const auto s = build_eta_sets(BoxDomain(), top(0.2, 0.8), 0.1);
  expect_rect(s.sigma_eta, 0.3, 0.7);
  EXPECT_NEAR(eta0(top(0.2, 0.8)), 0.3, 1e-15);
}

TEST(EtaSets, OverShrunkPatchThrows) {
  EXPECT_THROW(build_eta_sets(BoxDomain(), top(0.2, 0.8), 0.31), GeometryError);
  EXPECT_THROW(build_eta_sets(BoxDomain(), top(0.2, 0.8), 0.0), GeometryError);
}

TEST(EtaSets, NearlyFullFace) {
  expect_rect(build_eta_sets(BoxDomain(), top(0.05, 0.95), 0.02).sigma_eta, 0.07, 0.93);
}

TEST(EtaSets, NeighbourhoodMembership) {
  const auto s = build_eta_sets(BoxDomain(), top(0.2, 0.8), 0.1);
  EXPECT_TRUE(s.in_u_eta(Vec3(0.5, 0.5, 1.02)));
  EXPECT_TRUE(s.in_u_eta_int(Vec3(0.5, 0.5, 0.98)));
  EXPECT_FALSE(s.in_u_eta_int(Vec3(0.5, 0.5, 1.02)));
  EXPECT_FALSE(s.in_u_eta(Vec3(0.5, 0.5, 1.03)));
  EXPECT_NEAR(s.dist_to_sigma_eta(Vec3(0.8, 0.5, 1.0)), 0.1, 1e-15);
}

TEST(EtaSetsProperty, MonotoneInEta) {
  const auto sigma = top(0.2, 0.8);
  for (double e1 = 0.01; e1 < 0.29; e1 += 0.02)
    for (double e2 = e1 + 0.005; e2 < 0.3; e2 += 0.03) {
      const auto a = build_eta_sets(BoxDomain(), sigma, e1).sigma_eta;
      const auto b = build_eta_sets(BoxDomain(), sigma, e2).sigma_eta;
      EXPECT_TRUE(a.u0 <= b.u0 && b.u1 <= a.u1 && a.v0 <= b.v0 && b.v1 <= a.v1);
    }
}

TEST(ProbePoint, FlatTopFace) {
  const auto sets = build_eta_sets(BoxDomain(), top(0.01, 0.99), 0.45);
  const auto path = build_probe_path(sets, Vec3(0.5, 0.5, 1.0), 0.05, 0.5, 3, 0.1);
  const Vec3 z = probe_point(path, 0.05);
  EXPECT_LT((z - Vec3(0.5, 0.5, 1.05)).norm(), 1e-15);
  EXPECT_NEAR(BoxDomain().boundary_distance(z), 0.05, 1e-15);
  EXPECT_THROW(probe_point(path, 0.0), RangeError);
  EXPECT_THROW(probe_point(path, 0.06), RangeError);
}

TEST(ProbePoint, OffCentreBasePoint) {
  const auto sets = build_eta_sets(BoxDomain(), top(0.2, 0.8), 0.1);
  const auto path = build_probe_path(sets, Vec3(0.3, 0.6, 1.0), 0.01, 0.5, 4, 0.0125);
  EXPECT_LT((probe_point(path, 0.01) - Vec3(0.3, 0.6, 1.01)).norm(), 1e-15);
  EXPECT_EQ(path.tau_grid.size(), 4u);
  EXPECT_NEAR(path.tau_cap, 0.0125, 1e-15);
}

TEST(ProbePath, RejectsBadInputs) {
  const auto sets = build_eta_sets(BoxDomain(), top(0.2, 0.8), 0.1);
  EXPECT_THROW(build_probe_path(sets, Vec3(0.25, 0.5, 1.0), 0.01, 0.5, 3, 0.0125), GeometryError);
  EXPECT_THROW(build_probe_path(sets, Vec3(0.5, 0.5, 1.0), 0.02, 0.5, 3, 0.0125), RangeError);
  EXPECT_THROW(build_probe_path(sets, Vec3(0.5, 0.5, 1.0), 0.01, 1.5, 3, 0.0125), RangeError);
}

TEST(EnlargedDomain, BumpOverCentralPatch) {
  const auto d = build_enlarged_domain(BoxDomain(), top(0.2, 0.8), 0.1);
  EXPECT_NEAR(d.bump.hi.z(), 1.1, 1e-15);
  EXPECT_TRUE(d.contains(Vec3(0.5, 0.5, 1.05)));
  EXPECT_TRUE(d.contains(Vec3(0.5, 0.5, 0.5)));
  EXPECT_FALSE(d.contains(Vec3(0.5, 0.5, 1.15)));
  EXPECT_FALSE(d.contains(Vec3(0.19, 0.5, 1.05)));
  EXPECT_GE(d.boundary_distance(Vec3(0.5, 0.5, 1.0)), 0.05);
  // The bump footprint stays strictly inside Sigma.
  EXPECT_GT(d.footprint.u0, 0.2);
  EXPECT_LT(d.footprint.u1, 0.8);
}

TEST(EnlargedDomain, TooLargeEtaThrows) {
  EXPECT_THROW(build_enlarged_domain(BoxDomain(), top(0.2, 0.8), 0.4), GeometryError);
}

TEST(EnlargedDomainProperty, ContainmentsOnSampledNeighbourhood) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double eta : {0.05, 0.1, 0.2, 0.25}) {
    const auto sets = build_eta_sets(BoxDomain(), top(0.2, 0.8), eta);
    const auto d = build_enlarged_domain(BoxDomain(), top(0.2, 0.8), eta);
    int hits = 0;
    const Rect2 r = sets.sigma_eta.inset(-eta / 4);
    for (int i = 0; i < 200000 && hits < 1000; ++i) {
      const Vec3 x(r.u0 + (r.u1 - r.u0) * u(rng), r.v0 + (r.v1 - r.v0) * u(rng), 1.0 + 0.5 * eta * (u(rng) - 0.5));
      if (!sets.in_u_eta(x)) continue;
      ++hits;
      EXPECT_TRUE(d.contains(x));
      EXPECT_GE(d.boundary_distance(x), 0.5 * eta - 1e-12);
    }
    EXPECT_EQ(hits, 1000);
    // Box boundary points inside Omega_eta belong to Sigma.
    for (int i = 0; i < 2000; ++i) {
      const Vec3 x(u(rng), u(rng), 1.0);
      if (d.boundary_distance(x) > 1e-12) EXPECT_TRUE(d.sigma.contains(d.box, x));
    }
  }
}

TEST(ProbePathProperty, ProbesStayInsideEnlargedDomain) {
  const BoxDomain box;
  for (double eta : {0.08, 0.16, 0.24}) {
    const auto sigma = top(0.2, 0.8);
    const auto sets = build_eta_sets(box, sigma, eta);
    const auto d = build_enlarged_domain(box, sigma, eta);
    const Rect2 r = sets.sigma_eta;
    for (double s : {0.0, 0.3, 1.0})
      for (double t : {0.0, 0.6, 1.0}) {
        const Vec3 x0 = sigma.point(box, r.u0 + s * (r.u1 - r.u0), r.v0 + t * (r.v1 - r.v0));
        const auto path = build_probe_path(sets, x0, eta / 8.0, 0.6, 6, 1.0);
        for (double tau : path.tau_grid) {
          const Vec3 z = probe_point(path, tau);
          EXPECT_FALSE(box.contains_closed(z));
          EXPECT_TRUE(d.contains(z));
          EXPECT_GE(d.boundary_distance(z), eta / 8.0 - 1e-12);
          EXPECT_NEAR(box.boundary_distance(z), tau, 1e-15);
        }
      }
  }
}
