#include "calderon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "calderon/errors.hpp"

namespace calderon {

int face_axis(Face f) { return static_cast<int>(f) / 2; }
int face_side(Face f) { return static_cast<int>(f) % 2 == 0 ? -1 : 1; }

std::array<int, 2> tangential_axes(Face f) {
  switch (face_axis(f)) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

const char* face_name(Face f) {
  static const char* names[] = {"x-", "x+", "y-", "y+", "z-", "z+"};
  return names[static_cast<int>(f)];
}

Face face_from_name(const std::string& name) {
  for (Face f : kAllFaces)
    if (name == face_name(f)) return f;
  if (name == "top") return Face::ZHi;
  if (name == "bottom") return Face::ZLo;
  throw ConfigError("unknown face '" + name + "' (expected x-, x+, y-, y+, z-, z+, top, bottom)");
}

double Aabb::distance(const Vec3& x) const {
  const Vec3 c = x.cwiseMax(lo).cwiseMin(hi);
  return (x - c).norm();
}

bool Aabb::contains(const Vec3& x, double slack) const {
  return (x.array() >= lo.array() - slack).all() && (x.array() <= hi.array() + slack).all();
}

BoxDomain::BoxDomain(const Vec3& l, const Vec3& h) : lo(l), hi(h) {
  if (!(lo.array() < hi.array()).all()) throw GeometryError("box corners must satisfy lo < hi");
}

bool BoxDomain::contains(const Vec3& x) const {
  return (x.array() > lo.array()).all() && (x.array() < hi.array()).all();
}

bool BoxDomain::contains_closed(const Vec3& x, double slack) const {
  return (x.array() >= lo.array() - slack).all() && (x.array() <= hi.array() + slack).all();
}

double BoxDomain::boundary_distance(const Vec3& x) const {
  if (contains_closed(x)) return std::min((x - lo).minCoeff(), (hi - x).minCoeff());
  return Aabb{lo, hi}.distance(x);
}

Vec3 BoxDomain::outward_normal(Face f) const {
  Vec3 n = Vec3::Zero();
  n[face_axis(f)] = face_side(f);
  return n;
}

double BoxDomain::face_coordinate(Face f) const {
  return face_side(f) > 0 ? hi[face_axis(f)] : lo[face_axis(f)];
}

Aabb BoxDomain::face_rect(Face f) const {
  Aabb r{lo, hi};
  const int a = face_axis(f);
  r.lo[a] = r.hi[a] = face_coordinate(f);
  return r;
}

void BoundaryPatch::check(const BoxDomain& box) const {
  const auto t = tangential_axes(face);
  if (rect.empty()) throw GeometryError("boundary patch rectangle is empty");
  if (!(rect.u0 > box.lo[t[0]] && rect.u1 < box.hi[t[0]] && rect.v0 > box.lo[t[1]] &&
        rect.v1 < box.hi[t[1]]))
    throw GeometryError("boundary patch must lie strictly inside its face");
}

bool BoundaryPatch::contains(const BoxDomain& box, const Vec3& x, double slack) const {
  const int a = face_axis(face);
  const auto t = tangential_axes(face);
  return std::abs(x[a] - box.face_coordinate(face)) <= slack && rect.contains_open(x[t[0]], x[t[1]]);
}

Aabb BoundaryPatch::embed(const BoxDomain& box, const Rect2& r) const {
  const int a = face_axis(face);
  const auto t = tangential_axes(face);
  Aabb out;
  out.lo[a] = out.hi[a] = box.face_coordinate(face);
  out.lo[t[0]] = r.u0;
  out.hi[t[0]] = r.u1;
  out.lo[t[1]] = r.v0;
  out.hi[t[1]] = r.v1;
  return out;
}

Vec3 BoundaryPatch::point(const BoxDomain& box, double u, double v) const {
  Vec3 x;
  const auto t = tangential_axes(face);
  x[face_axis(face)] = box.face_coordinate(face);
  x[t[0]] = u;
  x[t[1]] = v;
  return x;
}

Vec3 BoundaryPatch::center(const BoxDomain& box) const {
  return point(box, 0.5 * (rect.u0 + rect.u1), 0.5 * (rect.v0 + rect.v1));
}

double eta0(const BoundaryPatch& sigma) {
  return 0.5 * std::min(sigma.rect.u1 - sigma.rect.u0, sigma.rect.v1 - sigma.rect.v0);
}

double EtaSets::dist_to_sigma_eta(const Vec3& x) const { return sigma.embed(box, sigma_eta).distance(x); }

bool EtaSets::in_sigma_eta_closure(const Vec3& x, double slack) const {
  return sigma.embed(box, sigma_eta).contains(x, slack);
}

bool EtaSets::in_u_eta(const Vec3& x) const { return dist_to_sigma_eta(x) < 0.25 * eta; }

bool EtaSets::in_u_eta_int(const Vec3& x) const { return in_u_eta(x) && box.contains(x); }

EtaSets build_eta_sets(const BoxDomain& box, const BoundaryPatch& sigma, double eta) {
  sigma.check(box);
  if (!(eta > 0.0)) throw GeometryError("eta must be positive");
  if (eta >= eta0(sigma))
    throw GeometryError("eta=" + std::to_string(eta) + " leaves Sigma_eta empty (eta0=" +
                        std::to_string(eta0(sigma)) + ")");
  return EtaSets{box, sigma, eta, sigma.rect.inset(eta)};
}

ProbePath build_probe_path(const EtaSets& sets, const Vec3& x0, double tau_start, double ratio,
                           int count, double tau0) {
  if (!sets.in_sigma_eta_closure(x0)) throw GeometryError("probe base point must lie on closure of Sigma_eta");
  if (count < 1 || !(ratio > 0.0 && ratio < 1.0)) throw RangeError("tau grid needs count >= 1 and ratio in (0,1)");
  ProbePath p;
  p.x0 = x0;
  p.nu_tilde = sets.box.outward_normal(sets.sigma.face);
  p.tau_cap = std::min(tau0, sets.eta / 8.0);
  if (!(tau_start > 0.0 && tau_start <= p.tau_cap * (1.0 + 1e-12)))
    throw RangeError("tau_start=" + std::to_string(tau_start) + " outside (0, min(tau0, eta/8)]");
  for (int j = 0; j < count; ++j) p.tau_grid.push_back(tau_start * std::pow(ratio, j));
  return p;
}

Vec3 probe_point(const ProbePath& path, double tau) {
  if (!(tau > 0.0) || tau > path.tau_cap * (1.0 + 1e-12))
    throw RangeError("tau=" + std::to_string(tau) + " outside (0, " + std::to_string(path.tau_cap) + "]");
  return path.x0 + tau * path.nu_tilde;
}

bool EnlargedDomain::contains(const Vec3& x, double slack) const {
  return box.contains_closed(x, slack) || bump.contains(x, slack);
}

double EnlargedDomain::boundary_distance(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (Face f : kAllFaces) {
    if (f == sigma.face) continue;
    d = std::min(d, box.face_rect(f).distance(x));
  }
  // The sigma face minus the open footprint, as four strips.
  const auto t = tangential_axes(sigma.face);
  const double ulo = box.lo[t[0]], uhi = box.hi[t[0]], vlo = box.lo[t[1]], vhi = box.hi[t[1]];
  const Rect2& f = footprint;
  const Rect2 strips[4] = {{ulo, f.u0, vlo, vhi}, {f.u1, uhi, vlo, vhi}, {f.u0, f.u1, vlo, f.v0},
                           {f.u0, f.u1, f.v1, vhi}};
  for (const auto& s : strips) d = std::min(d, sigma.embed(box, s).distance(x));
  // Bump side walls and lid.
  const int a = face_axis(sigma.face);
  for (int k = 0; k < 2; ++k)
    for (int side = 0; side < 2; ++side) {
      Aabb wall = bump;
      const int ax = t[k];
      wall.lo[ax] = wall.hi[ax] = side == 0 ? bump.lo[ax] : bump.hi[ax];
      d = std::min(d, wall.distance(x));
    }
  Aabb lid = bump;
  lid.lo[a] = lid.hi[a] = face_side(sigma.face) > 0 ? bump.hi[a] : bump.lo[a];
  d = std::min(d, lid.distance(x));
  return d;
}

Aabb EnlargedDomain::bounds() const {
  return {box.lo.cwiseMin(bump.lo), box.hi.cwiseMax(bump.hi)};
}

std::array<std::vector<double>, 3> EnlargedDomain::breakpoints() const {
  std::array<std::vector<double>, 3> b;
  for (int ax = 0; ax < 3; ++ax) {
    b[ax] = {box.lo[ax], box.hi[ax], bump.lo[ax], bump.hi[ax]};
    std::sort(b[ax].begin(), b[ax].end());
    b[ax].erase(std::unique(b[ax].begin(), b[ax].end()), b[ax].end());
  }
  return b;
}

bool EnlargedDomain::on_outer_boundary(const Vec3& x, double tol) const {
  return boundary_distance(x) <= tol && !box.contains_closed(x, tol);
}

EnlargedDomain build_enlarged_domain(const BoxDomain& box, const BoundaryPatch& sigma, double eta) {
  const EtaSets sets = build_eta_sets(box, sigma, eta);
  EnlargedDomain d;
  d.box = box;
  d.sigma = sigma;
  d.eta = eta;
  d.footprint = sigma.rect.inset(0.25 * eta);
  if (d.footprint.empty()) throw GeometryError("bump footprint would leave Sigma");
  d.bump = sigma.embed(box, d.footprint);
  const int a = face_axis(sigma.face);
  if (face_side(sigma.face) > 0)
    d.bump.hi[a] += eta;
  else
    d.bump.lo[a] -= eta;

  std::mt19937_64 rng(20240611u);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Rect2& se = sets.sigma_eta;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = sigma.point(box, se.u0 + uni(rng) * (se.u1 - se.u0), se.v0 + uni(rng) * (se.v1 - se.v0));
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    const Vec3 x = p + (0.25 * eta * uni(rng)) * dir;
    if (!sets.in_u_eta(x)) continue;
    if (!d.contains(x) || d.boundary_distance(x) < 0.5 * eta - 1e-12)
      throw GeometryError("enlarged domain violates dist(x, boundary) >= eta/2 on U_eta");
  }
  return d;
}

}  // namespace calderon
