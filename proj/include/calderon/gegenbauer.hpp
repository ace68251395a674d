#pragma once

#include <utility>

#include "calderon/types.hpp"

namespace calderon {

inline constexpr int kMaxGegenbauerDegree = 16;

struct GegenbauerSpec {
  int degree = 0;      // m >= 0, at most kMaxGegenbauerDegree
  double order = 0.5;  // lambda_g = (n - 2) / 2, at least 1/2

  static GegenbauerSpec for_dimension(int m, int n);
  void check() const;
};

// C_m^lambda(z) by the three-term recurrence.
cdouble gegenbauer(const GegenbauerSpec& spec, cdouble z);

// d/dz C_m^lambda = 2 lambda C_{m-1}^{lambda+1}; zero for m = 0.
cdouble gegenbauer_derivative(const GegenbauerSpec& spec, cdouble z);

// d^2/dz^2 C_m^lambda = 4 lambda (lambda+1) C_{m-2}^{lambda+2}.
cdouble gegenbauer_second_derivative(const GegenbauerSpec& spec, cdouble z);

// (1 - z^2) y'' - (n - 1) z y' + m (m + n - 2) y with y = C_m^{(n-2)/2}, n = 2 lambda + 2.
cdouble ode_residual(const GegenbauerSpec& spec, cdouble z);

struct EndpointValues {
  cdouble plus_one;
  cdouble minus_one;
  bool nonvanishing = true;  // both moduli above 1e-14
};

EndpointValues endpoint_nonvanishing(const GegenbauerSpec& spec);

}  // namespace calderon
