#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "calderon/geometry.hpp"
#include "calderon/types.hpp"

namespace calderon {

inline constexpr int kOuterTag = 6;  // boundary of Omega_eta off the box

struct BoundaryTriangle {
  std::array<int, 3> v{};
  int tag = 0;  // Face index for box faces, kOuterTag otherwise
  bool in_sigma = false;
  double area = 0.0;
};

// Conforming tetrahedral mesh of a union of cells of a tensor grid. Every hexahedral
// cell is cut into six tetrahedra along its main diagonal.
class Mesh {
 public:
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<BoundaryTriangle> boundary;
  std::vector<char> on_boundary;      // vertex lies on the boundary of the meshed domain
  std::vector<char> on_box_boundary;  // vertex lies on the boundary of the box
  BoxDomain box;
  std::optional<BoundaryPatch> sigma;
  double h = 0.0;  // largest cell edge

  std::uint64_t id() const { return id_; }
  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }
  double volume(int t) const { return volumes_[t]; }
  // Gradients of the four barycentric coordinates of tet t.
  const std::array<Vec3, 4>& gradients(int t) const { return grads_[t]; }
  Vec3 barycenter(int t) const;
  const std::array<std::vector<double>, 3>& axes() const { return axes_; }

  struct Location {
    int tet = -1;
    std::array<double, 4> bary{};
  };
  // Tet containing x (closed), or tet = -1 when x lies outside the mesh.
  Location locate(const Vec3& x) const;
  cdouble interpolate(const ComplexVector& values, const Vec3& x) const;

  // Construction from tensor axes and a cell mask; used by the builders below.
  static Mesh from_grid(const std::array<std::vector<double>, 3>& axes,
                        const std::vector<char>& active, const BoxDomain& box,
                        std::optional<BoundaryPatch> sigma);

 private:
  std::uint64_t id_ = 0;
  std::vector<double> volumes_;
  std::vector<std::array<Vec3, 4>> grads_;
  std::array<std::vector<double>, 3> axes_;
  std::vector<int> cell_first_tet_;  // -1 for inactive cells
};

// Local mesh size h(x) = min(h_max, h_min + (growth - 1) |x - focus|) along every axis.
struct Grading {
  Vec3 focus = Vec3::Zero();
  double h_min = 0.01;
  double h_max = 0.1;
  double growth = 1.2;
};

// Nodes of [breaks.front(), breaks.back()] containing every breakpoint. Without grading
// each interval gets ceil(length / h) equal cells.
std::vector<double> build_axis(const std::vector<double>& breaks, double h,
                               const std::optional<std::pair<double, Grading>>& grading = std::nullopt);

// Uniform mesh of the box; h must divide every edge into at least two cells.
Mesh build_mesh(const BoxDomain& box, double h, std::optional<BoundaryPatch> sigma = std::nullopt);

// Mesh of Omega_eta with cells of size at most h.
Mesh build_mesh(const EnlargedDomain& domain, double h);

Mesh build_graded_mesh(const BoxDomain& box, const Grading& grading,
                       std::optional<BoundaryPatch> sigma = std::nullopt);
Mesh build_graded_mesh(const EnlargedDomain& domain, const Grading& grading);

}  // namespace calderon
