#pragma once

#include <array>
#include <string>
#include <vector>

#include "calderon/types.hpp"

namespace calderon {

enum class Face { XLo = 0, XHi, YLo, YHi, ZLo, ZHi };

inline constexpr std::array<Face, 6> kAllFaces{Face::XLo, Face::XHi, Face::YLo,
                                               Face::YHi, Face::ZLo, Face::ZHi};

int face_axis(Face f);
// +1 for the upper face along the axis, -1 for the lower one.
int face_side(Face f);
// The two remaining axes in increasing order; (u, v) coordinates on the face.
std::array<int, 2> tangential_axes(Face f);
const char* face_name(Face f);
Face face_from_name(const std::string& name);

// Axis-aligned box, possibly degenerate along some axes (used for rectangles in 3D).
struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  double distance(const Vec3& x) const;
  bool contains(const Vec3& x, double slack = 0.0) const;
};

struct BoxDomain {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();

  BoxDomain() = default;
  BoxDomain(const Vec3& lo, const Vec3& hi);

  bool contains(const Vec3& x) const;         // open box
  bool contains_closed(const Vec3& x, double slack = 0.0) const;
  // Distance to the boundary, valid inside and outside.
  double boundary_distance(const Vec3& x) const;
  Vec3 outward_normal(Face f) const;
  double face_coordinate(Face f) const;
  Aabb face_rect(Face f) const;
  double diameter() const { return (hi - lo).norm(); }
};

// Rectangle [u0,u1] x [v0,v1] in the tangential coordinates of a face.
struct Rect2 {
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;

  bool empty() const { return !(u0 < u1 && v0 < v1); }
  Rect2 inset(double d) const { return {u0 + d, u1 - d, v0 + d, v1 - d}; }
  bool contains(double u, double v, double slack = 0.0) const {
    return u >= u0 - slack && u <= u1 + slack && v >= v0 - slack && v <= v1 + slack;
  }
  bool contains_open(double u, double v) const { return u > u0 && u < u1 && v > v0 && v < v1; }
};

struct BoundaryPatch {
  Face face = Face::ZHi;
  Rect2 rect;

  // Sigma must lie strictly inside the face of `box`; throws GeometryError otherwise.
  void check(const BoxDomain& box) const;
  // Points of the face plane with tangential coordinates in the open rectangle.
  bool contains(const BoxDomain& box, const Vec3& x, double slack = 1e-12) const;
  Aabb embed(const BoxDomain& box, const Rect2& r) const;
  Vec3 point(const BoxDomain& box, double u, double v) const;
  Vec3 center(const BoxDomain& box) const;
};

// Largest admissible margin: Sigma_eta is empty once eta reaches half the short side.
double eta0(const BoundaryPatch& sigma);

struct EtaSets {
  BoxDomain box;
  BoundaryPatch sigma;
  double eta = 0.0;
  Rect2 sigma_eta;  // {x in Sigma : dist(x, boundary of Sigma) > eta}

  double dist_to_sigma_eta(const Vec3& x) const;
  bool in_sigma_eta_closure(const Vec3& x, double slack = 1e-12) const;
  bool in_u_eta(const Vec3& x) const;      // dist(x, Sigma_eta) < eta/4
  bool in_u_eta_int(const Vec3& x) const;  // U_eta intersected with the open box
};

// Throws GeometryError when eta <= 0 or eta >= eta0(sigma).
EtaSets build_eta_sets(const BoxDomain& box, const BoundaryPatch& sigma, double eta);

struct ProbePath {
  Vec3 x0 = Vec3::Zero();
  Vec3 nu_tilde = Vec3::UnitZ();
  std::vector<double> tau_grid;  // decreasing
  double tau_cap = 0.0;          // min(tau0, eta/8)
};

// Geometric tau grid tau_start * ratio^j. Checks x0 on the closure of Sigma_eta and the caps.
ProbePath build_probe_path(const EtaSets& sets, const Vec3& x0, double tau_start, double ratio,
                           int count, double tau0);

// z_tau = x0 + tau * nu_tilde. Throws RangeError for tau outside (0, tau_cap].
Vec3 probe_point(const ProbePath& path, double tau);

// Omega_eta: the box plus a slab of thickness eta over the footprint Sigma_{eta/4}.
struct EnlargedDomain {
  BoxDomain box;
  BoundaryPatch sigma;
  double eta = 0.0;
  Rect2 footprint;
  Aabb bump;

  bool contains(const Vec3& x, double slack = 0.0) const;
  // Exact distance to the boundary of Omega_eta for points of its closure.
  double boundary_distance(const Vec3& x) const;
  // Bounding box of Omega_eta.
  Aabb bounds() const;
  // Breakpoints per axis that a conforming tensor grid must contain.
  std::array<std::vector<double>, 3> breakpoints() const;
  // Whether x lies on the boundary part of Omega_eta that is not on the box.
  bool on_outer_boundary(const Vec3& x, double tol = 1e-12) const;
};

// Builds Omega_eta and verifies both containments on 1000 seeded samples of U_eta.
EnlargedDomain build_enlarged_domain(const BoxDomain& box, const BoundaryPatch& sigma, double eta);

}  // namespace calderon
