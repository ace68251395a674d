#pragma once

#include <string>
#include <vector>

#include "calderon/fem.hpp"

namespace calderon {

// Hat functions at boundary vertices whose every adjacent boundary triangle lies in Sigma.
struct SigmaBasis {
  std::uint64_t mesh_id = 0;
  std::vector<int> vertices;

  int count() const { return static_cast<int>(vertices.size()); }
  // Nodal vector of sum_i coeffs[i] phi_i.
  ComplexVector nodal(const ComplexVector& coeffs, int num_vertices) const;
  SigmaBasis subset(const std::vector<int>& keep) const;
};

SigmaBasis sigma_basis(const Mesh& mesh);

struct LocalDtnMatrix {
  SigmaBasis basis;
  ComplexMatrix pairing;  // pairing(i, j) = <Lambda phi_i, conj(phi_j)>
  RealMatrix gram;
};

// Laplace Schur complement on the basis vertices (the remaining boundary held at zero)
// plus the boundary mass matrix on Sigma.
RealMatrix h_half_gram(const Mesh& mesh, const SigmaBasis& basis);

ComplexMatrix dtn_pairing(const ForwardModel& model, const SigmaBasis& basis, int threads = 1);

LocalDtnMatrix assemble_dtn(const ForwardModel& model, const SigmaBasis& basis, const RealMatrix& gram,
                            int threads = 1);
LocalDtnMatrix assemble_dtn(const ForwardModel& model, int threads = 1);

// Largest singular value of G^{-1/2} D G^{-1/2}. Throws NumericError if G is not SPD.
double star_norm(const ComplexMatrix& difference, const RealMatrix& gram);
double dtn_star_norm(const LocalDtnMatrix& l1, const LocalDtnMatrix& l2);

// Squared gram norm f^H G f of a coefficient vector.
double gram_norm(const ComplexVector& coeffs, const RealMatrix& gram);

struct AlessandriniCheck {
  cdouble lhs;       // <(Lambda_1 - Lambda_2) f1, conj(f2)>
  cdouble rhs;       // integral of (A(., a1) - A(., a2)) grad u1 . grad u2
  cdouble residual;  // lhs - rhs
  double scale = 1.0;  // max(1, |pairing terms|)
  bool passed(double tol = 1e-9) const { return std::abs(residual) <= tol * scale; }
};

// f1, f2 are nodal boundary data (Sigma-supported for the local map).
AlessandriniCheck alessandrini_gap(const ForwardModel& m1, const ForwardModel& m2, const ComplexVector& f1,
                                   const ComplexVector& f2);

// Writes pairing (re, im per entry) and gram as long-format CSV files.
void write_dtn_csv(const LocalDtnMatrix& dtn, const std::string& pairing_path, const std::string& gram_path);

}  // namespace calderon
