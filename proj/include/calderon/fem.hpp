#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/SparseCore>

#include "calderon/admittivity.hpp"
#include "calderon/mesh.hpp"

namespace calderon {

using SparseReal = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using SparseComplex = Eigen::SparseMatrix<cdouble, Eigen::ColMajor, int>;

// Stiffness of div(A(x, a(x)) grad u) = 0 split into the real 2x2 block system
// [K_R, -K_I; K_I, K_R] acting on (u_1, u_2), u = u_1 + i u_2. K_I already carries k.
struct BlockSystem {
  std::uint64_t mesh_id = 0;
  double k = 0.0;
  SparseReal kr;
  SparseReal ki;
  std::vector<char> dirichlet_mask;  // every boundary vertex of the meshed domain

  int size() const { return static_cast<int>(kr.rows()); }
  SparseReal block() const;
  SparseComplex complex_matrix() const;
};

// P1 elements with A sampled at tet barycenters, t = a(barycenter).
BlockSystem assemble(const Mesh& mesh, const AdmittivityFamily& family, const ParameterField& a, double k);

// Same pattern with A = I and k = 0.
SparseReal assemble_laplacian(const Mesh& mesh);

struct ComplexField {
  std::uint64_t mesh_id = 0;
  ComplexVector values;

  Eigen::VectorXd re() const { return values.real(); }
  Eigen::VectorXd im() const { return values.imag(); }
};

enum class SolverKind { Auto, DirectLU, CholmodGmres };

struct SolverOptions {
  SolverKind kind = SolverKind::Auto;
  double tolerance = 1e-10;   // relative residual of the free block
  int max_iterations = 2000;
  int restart = 80;
  int direct_limit = 50000;   // real block unknowns up to which Auto factorises directly
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Dirichlet solver for a fixed system; the factorisation is shared by all right-hand sides.
class DirichletSolver {
 public:
  DirichletSolver(const BlockSystem& system, SolverOptions options = {});
  ~DirichletSolver();
  DirichletSolver(const DirichletSolver&) = delete;
  DirichletSolver& operator=(const DirichletSolver&) = delete;

  // g: nodal vector; only the Dirichlet entries are read. Boundary values of the
  // result equal g exactly. Throws SolverError when the tolerance is not reached.
  ComplexField solve(const ComplexVector& g, SolveStats* stats = nullptr) const;
  bool iterative() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ComplexField solve_dirichlet(const BlockSystem& system, const ComplexVector& g,
                             SolverOptions options = {});

// sum over tets of vol * (A grad u) . grad v, bilinear and unconjugated; A uses family.k.
cdouble energy_pairing(const AdmittivityFamily& family, const ParameterField& a, const Mesh& mesh,
                       const ComplexField& u, const ComplexField& v);

// Nodal vector equal to g on boundary vertices and zero elsewhere.
ComplexVector zero_lifting(const Mesh& mesh, const ComplexVector& g);

// One forward problem: mesh, coefficient, assembled system and its solver.
class ForwardModel {
 public:
  ForwardModel(std::shared_ptr<const Mesh> mesh, AdmittivityFamily family, ParameterField a,
               SolverOptions options = {});

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const AdmittivityFamily& family() const { return family_; }
  const ParameterField& field() const { return a_; }
  const BlockSystem& system() const { return system_; }

  ComplexField solve(const ComplexVector& g, SolveStats* stats = nullptr) const;
  // <Lambda f, conj(g)> = u_f^T K psi_g with the zero-interior lifting psi_g.
  cdouble pairing(const ComplexField& u_f, const ComplexVector& g) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  AdmittivityFamily family_;
  ParameterField a_;
  BlockSystem system_;
  std::unique_ptr<DirichletSolver> solver_;
};

}  // namespace calderon
