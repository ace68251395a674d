#include "calderon/gegenbauer.hpp"

#include <cmath>
#include <string>

#include "calderon/errors.hpp"

namespace calderon {

namespace {

cdouble recurrence(int m, double lambda, cdouble z) {
  if (m < 0) return 0.0;
  cdouble prev = 1.0;
  if (m == 0) return prev;
  cdouble cur = 2.0 * lambda * z;
  for (int j = 2; j <= m; ++j) {
    const cdouble next = (2.0 * (j + lambda - 1.0) * z * cur - (j + 2.0 * lambda - 2.0) * prev) /
                         static_cast<double>(j);
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace

GegenbauerSpec GegenbauerSpec::for_dimension(int m, int n) {
  if (n < 3) throw RangeError("Gegenbauer order needs dimension n >= 3");
  GegenbauerSpec s{m, 0.5 * (n - 2)};
  s.check();
  return s;
}

void GegenbauerSpec::check() const {
  if (degree < 0 || degree > kMaxGegenbauerDegree)
    throw RangeError("Gegenbauer degree " + std::to_string(degree) + " outside [0, 16]");
  if (!(order >= 0.5)) throw RangeError("Gegenbauer order must be >= 1/2");
}

cdouble gegenbauer(const GegenbauerSpec& spec, cdouble z) {
  spec.check();
  return recurrence(spec.degree, spec.order, z);
}

cdouble gegenbauer_derivative(const GegenbauerSpec& spec, cdouble z) {
  spec.check();
  if (spec.degree == 0) return 0.0;
  return 2.0 * spec.order * recurrence(spec.degree - 1, spec.order + 1.0, z);
}

cdouble gegenbauer_second_derivative(const GegenbauerSpec& spec, cdouble z) {
  spec.check();
  if (spec.degree < 2) return 0.0;
  return 4.0 * spec.order * (spec.order + 1.0) * recurrence(spec.degree - 2, spec.order + 2.0, z);
}

cdouble ode_residual(const GegenbauerSpec& spec, cdouble z) {
  const int m = spec.degree;
  if (m == 0) return 0.0;
  const double n = 2.0 * spec.order + 2.0;
  const cdouble y = gegenbauer(spec, z);
  const cdouble dy = gegenbauer_derivative(spec, z);
  const cdouble d2y = gegenbauer_second_derivative(spec, z);
  return (1.0 - z * z) * d2y - (n - 1.0) * z * dy + static_cast<double>(m) * (m + n - 2.0) * y;
}

EndpointValues endpoint_nonvanishing(const GegenbauerSpec& spec) {
  EndpointValues e;
  e.plus_one = gegenbauer(spec, 1.0);
  e.minus_one = gegenbauer(spec, -1.0);
  e.nonvanishing = std::abs(e.plus_one) > 1e-14 && std::abs(e.minus_one) > 1e-14;
  return e;
}

}  // namespace calderon
