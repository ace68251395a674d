#include "calderon/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "calderon/errors.hpp"

namespace calderon {

namespace {

std::atomic<std::uint64_t> g_next_mesh_id{1};

// Kuhn paths through the unit cube: 0 -> e_a -> e_a + e_b -> 7.
constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

std::array<int, 4> kuhn_corners(int p) {
  const int a = 1 << kPerms[p][0];
  const int b = 1 << kPerms[p][1];
  return {0, a, a | b, 7};
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

struct GradedMap {
  double f, hmin, hmax, g, dstar, pstar;

  explicit GradedMap(double focus, const Grading& gr)
      : f(focus), hmin(gr.h_min), hmax(gr.h_max), g(gr.growth - 1.0) {
    dstar = (hmax - hmin) / g;
    pstar = std::log1p(g * dstar / hmin) / g;
  }
  double psi(double d) const {
    return d <= dstar ? std::log1p(g * d / hmin) / g : pstar + (d - dstar) / hmax;
  }
  double psi_inv(double p) const {
    return p <= pstar ? hmin * std::expm1(g * p) / g : dstar + (p - pstar) * hmax;
  }
  double phi(double x) const { return x >= f ? psi(x - f) : -psi(f - x); }
  double phi_inv(double p) const { return p >= 0 ? f + psi_inv(p) : f - psi_inv(-p); }
};

}  // namespace

Vec3 Mesh::barycenter(int t) const {
  const auto& T = tets[t];
  return 0.25 * (vertices[T[0]] + vertices[T[1]] + vertices[T[2]] + vertices[T[3]]);
}

Mesh Mesh::from_grid(const std::array<std::vector<double>, 3>& axes, const std::vector<char>& active,
                     const BoxDomain& box, std::optional<BoundaryPatch> sigma) {
  Mesh m;
  m.id_ = g_next_mesh_id.fetch_add(1);
  m.axes_ = axes;
  m.box = box;
  m.sigma = sigma;
  const int nx = static_cast<int>(axes[0].size()) - 1;
  const int ny = static_cast<int>(axes[1].size()) - 1;
  const int nz = static_cast<int>(axes[2].size()) - 1;
  if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("mesh axes need at least one cell each");
  const std::size_t ncell = static_cast<std::size_t>(nx) * ny * nz;
  if (active.size() != ncell) throw InvariantError("cell mask size does not match the grid");
  auto cell_index = [&](int i, int j, int k) { return i + nx * (j + ny * k); };
  auto node_index = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) + (nx + 1) * (static_cast<std::size_t>(j) + (ny + 1) * static_cast<std::size_t>(k));
  };
  auto is_active = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;
    return active[cell_index(i, j, k)] != 0;
  };

  std::vector<int> node_vertex(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1), -1);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (is_active(i, j, k))
          for (int b = 0; b < 8; ++b)
            node_vertex[node_index(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1))] = 0;
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        int& v = node_vertex[node_index(i, j, k)];
        if (v < 0) continue;
        v = static_cast<int>(m.vertices.size());
        m.vertices.emplace_back(axes[0][i], axes[1][j], axes[2][k]);
      }

  m.cell_first_tet_.assign(ncell, -1);
  double hmax = 0.0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!is_active(i, j, k)) continue;
        hmax = std::max({hmax, axes[0][i + 1] - axes[0][i], axes[1][j + 1] - axes[1][j],
                         axes[2][k + 1] - axes[2][k]});
        std::array<int, 8> corner;
        for (int b = 0; b < 8; ++b)
          corner[b] = node_vertex[node_index(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1))];
        m.cell_first_tet_[cell_index(i, j, k)] = static_cast<int>(m.tets.size());
        std::array<std::array<int, 4>, 6> local;
        for (int p = 0; p < 6; ++p) {
          local[p] = kuhn_corners(p);
          std::array<int, 4> t{corner[local[p][0]], corner[local[p][1]], corner[local[p][2]], corner[local[p][3]]};
          if (signed_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], m.vertices[t[3]]) < 0) {
            std::swap(t[2], t[3]);
            std::swap(local[p][2], local[p][3]);
          }
          m.tets.push_back(t);
        }
        // Boundary triangles are the tet faces on cell faces without an active neighbour.
        for (int ax = 0; ax < 3; ++ax)
          for (int s = 0; s < 2; ++s) {
            int ni = i, nj = j, nk = k;
            (ax == 0 ? ni : ax == 1 ? nj : nk) += s ? 1 : -1;
            if (is_active(ni, nj, nk)) continue;
            for (int p = 0; p < 6; ++p)
              for (int skip = 0; skip < 4; ++skip) {
                std::array<int, 3> tri;
                int c = 0;
                bool on_face = true;
                for (int q = 0; q < 4; ++q) {
                  if (q == skip) continue;
                  const int bit = (local[p][q] >> ax) & 1;
                  if (bit != s) on_face = false;
                  tri[c++] = corner[local[p][q]];
                }
                if (!on_face) continue;
                BoundaryTriangle bt;
                bt.v = tri;
                const Vec3& a = m.vertices[tri[0]];
                const Vec3& b = m.vertices[tri[1]];
                const Vec3& d = m.vertices[tri[2]];
                bt.area = 0.5 * (b - a).cross(d - a).norm();
                const Face f = static_cast<Face>(2 * ax + s);
                const double coord = a[ax];
                const Vec3 centroid = (a + b + d) / 3.0;
                const double tol = 1e-12 * (1.0 + std::abs(coord));
                const bool on_box_face = std::abs(coord - box.face_coordinate(f)) <= tol &&
                                         box.contains_closed(centroid, tol);
                bt.tag = on_box_face ? static_cast<int>(f) : kOuterTag;
                bt.in_sigma = on_box_face && sigma && sigma->face == f &&
                              sigma->contains(box, centroid, tol);
                m.boundary.push_back(bt);
              }
          }
      }
  m.h = hmax;

  const int nv = m.num_vertices();
  m.on_boundary.assign(nv, 0);
  for (const auto& bt : m.boundary)
    for (int v : bt.v) m.on_boundary[v] = 1;
  m.on_box_boundary.assign(nv, 0);
  for (int v = 0; v < nv; ++v) {
    const Vec3& x = m.vertices[v];
    const double tol = 1e-12 * (1.0 + x.cwiseAbs().maxCoeff());
    m.on_box_boundary[v] = box.contains_closed(x, tol) &&
                           std::min((x - box.lo).cwiseAbs().minCoeff(), (box.hi - x).cwiseAbs().minCoeff()) <= tol;
  }

  m.volumes_.resize(m.tets.size());
  m.grads_.resize(m.tets.size());
  for (std::size_t t = 0; t < m.tets.size(); ++t) {
    const auto& T = m.tets[t];
    Eigen::Matrix3d J;
    J.col(0) = m.vertices[T[1]] - m.vertices[T[0]];
    J.col(1) = m.vertices[T[2]] - m.vertices[T[0]];
    J.col(2) = m.vertices[T[3]] - m.vertices[T[0]];
    const double det = J.determinant();
    if (!(det > 0.0)) throw InvariantError("degenerate or inverted tetrahedron in mesh");
    m.volumes_[t] = det / 6.0;
    const Eigen::Matrix3d Jinv = J.inverse();
    auto& g = m.grads_[t];
    g[1] = Jinv.row(0).transpose();
    g[2] = Jinv.row(1).transpose();
    g[3] = Jinv.row(2).transpose();
    g[0] = -(g[1] + g[2] + g[3]);
  }
  return m;
}

Mesh::Location Mesh::locate(const Vec3& x) const {
  Location best;
  double best_min = -std::numeric_limits<double>::infinity();
  std::array<std::vector<int>, 3> cand;
  for (int ax = 0; ax < 3; ++ax) {
    const auto& a = axes_[ax];
    const double tol = 1e-12 * (1.0 + std::abs(x[ax]));
    if (x[ax] < a.front() - tol || x[ax] > a.back() + tol) return best;
    const int nc = static_cast<int>(a.size()) - 1;
    int i = static_cast<int>(std::upper_bound(a.begin(), a.end(), x[ax]) - a.begin()) - 1;
    i = std::clamp(i, 0, nc - 1);
    cand[ax].push_back(i);
    if (std::abs(x[ax] - a[i]) <= tol && i > 0) cand[ax].push_back(i - 1);
    if (std::abs(x[ax] - a[i + 1]) <= tol && i + 1 < nc) cand[ax].push_back(i + 1);
  }
  const int nx = static_cast<int>(axes_[0].size()) - 1;
  const int ny = static_cast<int>(axes_[1].size()) - 1;
  for (int k : cand[2])
    for (int j : cand[1])
      for (int i : cand[0]) {
        const int first = cell_first_tet_[i + nx * (j + ny * k)];
        if (first < 0) continue;
        for (int t = first; t < first + 6; ++t) {
          const Vec3 d = x - vertices[tets[t][0]];
          std::array<double, 4> l;
          l[1] = grads_[t][1].dot(d);
          l[2] = grads_[t][2].dot(d);
          l[3] = grads_[t][3].dot(d);
          l[0] = 1.0 - l[1] - l[2] - l[3];
          const double mn = *std::min_element(l.begin(), l.end());
          if (mn > best_min) {
            best_min = mn;
            best.tet = t;
            best.bary = l;
          }
        }
      }
  if (best_min < -1e-10) best.tet = -1;
  return best;
}

cdouble Mesh::interpolate(const ComplexVector& values, const Vec3& x) const {
  if (values.size() != num_vertices()) throw UsageError("nodal vector does not match the mesh");
  const Location loc = locate(x);
  if (loc.tet < 0) throw GeometryError("interpolation point outside the mesh");
  cdouble s = 0.0;
  for (int q = 0; q < 4; ++q) s += loc.bary[q] * values[tets[loc.tet][q]];
  return s;
}

std::vector<double> build_axis(const std::vector<double>& breaks, double h,
                               const std::optional<std::pair<double, Grading>>& grading) {
  if (breaks.size() < 2) throw ConfigError("axis needs at least two breakpoints");
  std::vector<double> b = breaks;
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  std::vector<double> nodes{b.front()};
  std::optional<GradedMap> map;
  if (grading) {
    const Grading& g = grading->second;
    if (!(g.h_min > 0 && g.h_max >= g.h_min && g.growth > 1.0))
      throw ConfigError("grading needs 0 < h_min <= h_max and growth > 1");
    map.emplace(grading->first, g);
  } else if (!(h > 0.0)) {
    throw ConfigError("mesh size h must be positive");
  }
  for (std::size_t s = 0; s + 1 < b.size(); ++s) {
    const double lo = b[s], hi = b[s + 1];
    if (!map) {
      const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / h - 1e-9)));
      for (int i = 1; i < n; ++i) nodes.push_back(lo + (hi - lo) * i / n);
    } else {
      const double p0 = map->phi(lo), p1 = map->phi(hi);
      const int n = std::max(1, static_cast<int>(std::ceil(p1 - p0 - 1e-9)));
      for (int i = 1; i < n; ++i) nodes.push_back(map->phi_inv(p0 + (p1 - p0) * i / n));
    }
    nodes.push_back(hi);
  }
  return nodes;
}

Mesh build_mesh(const BoxDomain& box, double h, std::optional<BoundaryPatch> sigma) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("mesh size h must be positive");
  std::array<std::vector<double>, 3> axes;
  for (int ax = 0; ax < 3; ++ax) {
    const double len = box.hi[ax] - box.lo[ax];
    const double cells = len / h;
    const long n = std::lround(cells);
    if (std::abs(cells - n) > 1e-9 * std::max(1.0, cells))
      throw ConfigError("h=" + std::to_string(h) + " does not divide the box edge of length " + std::to_string(len));
    if (n < 2) throw ConfigError("h=" + std::to_string(h) + " gives fewer than two cells per edge");
    for (long i = 0; i <= n; ++i) axes[ax].push_back(i == n ? box.hi[ax] : box.lo[ax] + len * i / n);
  }
  std::vector<char> active((axes[0].size() - 1) * (axes[1].size() - 1) * (axes[2].size() - 1), 1);
  return Mesh::from_grid(axes, active, box, sigma);
}

namespace {

Mesh mesh_enlarged(const EnlargedDomain& d, double h, const std::optional<Grading>& grading) {
  const auto breaks = d.breakpoints();
  std::array<std::vector<double>, 3> axes;
  for (int ax = 0; ax < 3; ++ax) {
    std::optional<std::pair<double, Grading>> g;
    if (grading) g.emplace(grading->focus[ax], *grading);
    axes[ax] = build_axis(breaks[ax], h, g);
  }
  const int nx = static_cast<int>(axes[0].size()) - 1;
  const int ny = static_cast<int>(axes[1].size()) - 1;
  const int nz = static_cast<int>(axes[2].size()) - 1;
  std::vector<char> active(static_cast<std::size_t>(nx) * ny * nz, 0);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Vec3 c(0.5 * (axes[0][i] + axes[0][i + 1]), 0.5 * (axes[1][j] + axes[1][j + 1]),
                     0.5 * (axes[2][k] + axes[2][k + 1]));
        active[i + nx * (j + ny * k)] = d.contains(c);
      }
  return Mesh::from_grid(axes, active, d.box, d.sigma);
}

}  // namespace

Mesh build_mesh(const EnlargedDomain& domain, double h) {
  if (!(h > 0.0)) throw ConfigError("mesh size h must be positive");
  return mesh_enlarged(domain, h, std::nullopt);
}

Mesh build_graded_mesh(const BoxDomain& box, const Grading& grading, std::optional<BoundaryPatch> sigma) {
  std::array<std::vector<double>, 3> axes;
  for (int ax = 0; ax < 3; ++ax) {
    std::vector<double> br{box.lo[ax], box.hi[ax]};
    if (grading.focus[ax] > box.lo[ax] && grading.focus[ax] < box.hi[ax]) br.push_back(grading.focus[ax]);
    if (sigma) {
      const Aabb r = sigma->embed(box, sigma->rect);
      for (double v : {r.lo[ax], r.hi[ax]})
        if (v > box.lo[ax] && v < box.hi[ax]) br.push_back(v);
    }
    axes[ax] = build_axis(br, grading.h_max, std::make_pair(grading.focus[ax], grading));
  }
  std::vector<char> active((axes[0].size() - 1) * (axes[1].size() - 1) * (axes[2].size() - 1), 1);
  return Mesh::from_grid(axes, active, box, sigma);
}

Mesh build_graded_mesh(const EnlargedDomain& domain, const Grading& grading) {
  return mesh_enlarged(domain, grading.h_max, grading);
}

}  // namespace calderon
