#pragma once

#include <memory>

#include "calderon/admittivity.hpp"
#include "calderon/fem.hpp"
#include "calderon/geometry.hpp"

namespace calderon {

// Leading term of the order-m singular solution with singularity z, for the frozen
// coefficient A(z, a(z)). Works in any dimension n >= 3.
struct SingularProbe {
  Point z;
  int m = 0;
  int n = 3;
  ComplexMatrix frozen;          // A(z, a(z))
  ComplexSymMatrix frozen_inv;   // A^{-1}(z, a(z))
  cdouble inv_nn_sqrt;           // principal (A^{-1}_nn)^{1/2}
  cdouble coeff;                 // m! (A^{-1}_nn)^{m/2}
};

// Throws RangeError for m outside [0, 16] and InvariantError when Re A^{-1} is not positive definite.
SingularProbe make_probe(const ComplexMatrix& frozen, const Point& z, int m);
SingularProbe make_probe(const AdmittivityFamily& family, const ParameterField& a, const Point& z, int m);

// (A^{-1} y . y), y = x - z, bilinear.
cdouble probe_quadratic(const SingularProbe& p, const Point& x);

cdouble leading_term(const SingularProbe& p, const Point& x);
ComplexVector leading_gradient(const SingularProbe& p, const Point& x);

// Second-order finite-difference div(A(z, a(z)) grad u_m) at x. Throws NumericError
// unless |x - z| >= 10 * step.
cdouble pde_residual_leading(const SingularProbe& p, const Point& x, double step);

// |x - z|^{2n + 2m - 2} |Du_m(x)|^2.
double h_function(const SingularProbe& p, const Point& x);

// Quasi-uniform points on the unit sphere S^{n-1}: a Fibonacci lattice for n = 3,
// seeded normalised Gaussians otherwise.
std::vector<Point> sphere_samples(int n, int count);

// Minimum of h over z + (sphere samples). Throws RangeError for samples < 1000.
double sphere_min_h(const SingularProbe& p, int samples);

// Minimum over sphere samples of |C_m(t)| + |C_m'(t)| |Dt|.
double sphere_min_nonvanishing(const SingularProbe& p, int samples);

// u_m^loc = u_m + omega on Omega_eta with omega = -u_m on the boundary of Omega_eta.
struct CorrectedProbe {
  SingularProbe probe;
  EnlargedDomain domain;
  std::shared_ptr<const Mesh> mesh;  // mesh of Omega_eta
  ComplexField corrector;            // omega at the vertices of `mesh`

  cdouble corrector_at(const Vec3& x) const;
  cdouble value(const Vec3& x) const;  // u_m + omega
  // Nodal Dirichlet data on a mesh of the box: u_m^loc at boundary vertices strictly
  // inside the bump footprint, zero at every other vertex.
  ComplexVector trace_on(const Mesh& box_mesh) const;
};

// The corrector solve reuses the factorised system of `eta_model` (a forward model on a
// mesh of Omega_eta). Throws GeometryError when z lies in the closed box.
CorrectedProbe build_corrected_probe(const SingularProbe& probe, const EnlargedDomain& domain,
                                     const ForwardModel& eta_model);

}  // namespace calderon
