#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calderon/dtn.hpp"
#include "calderon/geometry.hpp"
#include "calderon/quadrature.hpp"
#include "calderon/singular.hpp"

namespace calderon {

// F(x) = ((A^{-1}(x0,a2) - A^{-1}(x0,a1)) y.y) (conj A^{-1}(z,a1) y.y)^{n/2}
//        (conj A^{-1}(z,a2) y.y)^{n/2},  y = x - z, principal branches.
// Throws SingularityError for x == z.
cdouble f_function(const AdmittivityFamily& family, const ParameterField& a1, const ParameterField& a2,
                   const Point& x0, const Point& z, const Point& x);

struct SignConditionSample {
  Point x;
  cdouble f;
};

struct SignConditionReport {
  int sign = 0;  // sign of (a1 - a2)(x0); the conditions are checked for sign * F
  std::vector<SignConditionSample> samples;
  double worst_real_margin = 0.0;  // min sign * Re F / |F|
  double worst_imag_margin = 0.0;  // min (|Re F| - |Im F|) / |F|
  int violations = 0;
  bool degenerate = false;  // a1(x0) == a2(x0), F vanishes identically
  bool passed = false;
  std::string diagnostic() const;
};

SignConditionReport check_sign_condition(const AdmittivityFamily& family, const ParameterField& a1,
                                         const ParameterField& a2, const Point& x0, const Point& z,
                                         const std::vector<Point>& samples);

// Seeded uniform points of B_rho(z) intersected with the open box.
std::vector<Point> sample_ball_points(const BoxDomain& box, const Vec3& z, double rho, int count,
                                      unsigned seed);

double delta_h(double alpha, int h);

// Forward models shared by every tau of a gap experiment.
struct GapSetup {
  EnlargedDomain domain;
  std::shared_ptr<const ForwardModel> omega1;  // a1 on the mesh of the box
  std::shared_ptr<const ForwardModel> omega2;
  std::shared_ptr<const ForwardModel> eta1;    // a1 on the mesh of Omega_eta
  std::shared_ptr<const ForwardModel> eta2;
};

GapSetup make_gap_setup(const EnlargedDomain& domain, std::shared_ptr<const Mesh> box_mesh,
                        std::shared_ptr<const Mesh> eta_mesh, const AdmittivityFamily& family,
                        const ParameterField& a1, const ParameterField& a2, SolverOptions options = {});

struct GapOptions {
  int richardson_levels = 1;
  int sign_samples = 1000;
  unsigned seed = 1;
  int threads = 1;
  IntegralOptions quadrature;
};

struct TauEstimate {
  double tau = 0.0;
  Vec3 z = Vec3::Zero();
  cdouble pairing;             // <(Lambda_1 - Lambda_2) f1, conj f2>
  double normalization = 0.0;  // N(tau) with the depth weight of the estimate
  double lower_order = 0.0;    // N(tau) without depth weight (derivative runs)
  double estimate = 0.0;
  SignConditionReport sign;
};

struct GapEstimate {
  int m = 0;
  int depth_power = 0;
  double rho = 0.0;
  std::vector<TauEstimate> per_tau;
  RichardsonResult extrapolation;
  double value = 0.0;
  double residual = 0.0;
};

// Estimate of (a1 - a2)(x0) from order-m probes: Re P(tau) / N(tau), extrapolated in tau.
// Throws SignConditionError when F fails its sign conditions at some tau.
GapEstimate boundary_gap_estimate(const GapSetup& setup, const Vec3& x0, const std::vector<double>& tau_grid,
                                  int m, double rho, const GapOptions& options = {});

// Estimate of the outward normal derivative of a1 - a2 at x0 once the boundary values
// match: -(Re P - g0 N0) / N1 with depth-weighted N1.
GapEstimate derivative_gap_estimate(const GapSetup& setup, const Vec3& x0, const std::vector<double>& tau_grid,
                                    int m, double rho, double boundary_gap = 0.0,
                                    const GapOptions& options = {});

struct StabilityEntry {
  std::string a1;
  std::string a2;
  double s = 0.0;
  double lhs = 0.0;  // sup over closure(Sigma_eta) of |A(x,a1) - A(x,a2)|_max
  double rhs = 0.0;  // |Lambda_1 - Lambda_2|_*
  std::optional<double> ratio;
  bool violation = false;  // rhs == 0 while lhs > 0
  std::optional<double> gap_estimate;
};

struct StabilityReport {
  std::string mode = "boundary";  // or "derivative"
  std::vector<StabilityEntry> entries;
  std::optional<LinearFit> fit;  // log lhs against log rhs
  double delta_h = 1.0;
  int h = 0;
  std::optional<double> ratio_spread;  // max ratio / min ratio
};

double boundary_sup_gap(const AdmittivityFamily& family, const ParameterField& a1, const ParameterField& a2,
                        const EtaSets& sets, int nodes_per_axis = 21);

StabilityEntry lipschitz_ratio(const AdmittivityFamily& family, const ParameterField& a1,
                               const ParameterField& a2, const EtaSets& sets, const LocalDtnMatrix& l1,
                               const LocalDtnMatrix& l2, int nodes_per_axis = 21);

// Fills fit and ratio_spread from the entries (needs two entries with positive lhs, rhs).
void finalize_report(StabilityReport& report);

}  // namespace calderon
