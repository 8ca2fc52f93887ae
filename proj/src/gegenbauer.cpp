#include "otlab/gegenbauer.hpp"

#include <cmath>

namespace otlab::gegenbauer {

void GegenbauerSpec::validate() const {
  if (degree < 0) throw DomainError("gegenbauer: negative degree");
  if (degree > kMaxDegree) throw DomainError("gegenbauer: degree above the supported cap of 64");
  if (twice_order < 1) throw DomainError("gegenbauer: order must be positive");
}

namespace {

template <class T>
T recurrence(int m, double alpha, T z) {
  if (m == 0) return T(1.0);
  T prev(1.0);
  T cur = 2.0 * alpha * z;
  for (int k = 2; k <= m; ++k) {
    const T next = (2.0 * (k + alpha - 1.0) * z * cur - (k + 2.0 * alpha - 2.0) * prev) / static_cast<double>(k);
    prev = cur;
    cur = next;
  }
  return cur;
}

// Coefficient of z^{m-2j}: (-1)^j prod_{i<m-j}(a + 2i) / (2^j j! (m-2j)!), with a = 2*order.
long double coefficient(int m, int twice_order, int j) {
  long double c = 1.0L;
  for (int i = 0; i < m - j; ++i) c *= static_cast<long double>(twice_order + 2 * i);
  for (int i = 1; i <= j; ++i) c /= 2.0L * i;
  for (int i = 1; i <= m - 2 * j; ++i) c /= static_cast<long double>(i);
  return (j % 2 == 0) ? c : -c;
}

}  // namespace

Complex eval(const GegenbauerSpec& spec, Complex z) {
  spec.validate();
  return recurrence<Complex>(spec.degree, spec.order(), z);
}

double eval(const GegenbauerSpec& spec, double t) {
  spec.validate();
  return recurrence<double>(spec.degree, spec.order(), t);
}

Complex eval_direct(const GegenbauerSpec& spec, Complex z) {
  spec.validate();
  using LC = std::complex<long double>;
  const int m = spec.degree;
  const LC zl(z.real(), z.imag());
  const LC z2 = zl * zl;
  // Horner in z^2, highest power first.
  LC acc(0.0L, 0.0L);
  for (int j = 0; j <= m / 2; ++j) acc = acc * z2 + LC(coefficient(m, spec.twice_order, j), 0.0L);
  if (m % 2 == 1) acc *= zl;
  return {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
}

Complex derivative(const GegenbauerSpec& spec, Complex z) {
  spec.validate();
  if (spec.degree == 0) return 0.0;
  const GegenbauerSpec lowered{spec.degree - 1, spec.twice_order + 2};
  return 2.0 * spec.order() * eval(lowered, z);
}

Complex second_derivative(const GegenbauerSpec& spec, Complex z) {
  spec.validate();
  if (spec.degree < 2) return 0.0;
  const double a = spec.order();
  const GegenbauerSpec lowered{spec.degree - 2, spec.twice_order + 4};
  return 4.0 * a * (a + 1.0) * eval(lowered, z);
}

std::vector<Coefficient> coefficients(const GegenbauerSpec& spec) {
  spec.validate();
  std::vector<Coefficient> out;
  for (int j = 0; j <= spec.degree / 2; ++j)
    out.push_back({j, spec.degree - 2 * j, static_cast<double>(coefficient(spec.degree, spec.twice_order, j))});
  return out;
}

OdeResidual ode_residual(const GegenbauerSpec& spec, double t) {
  spec.validate();
  if (std::abs(t) > 1.0) throw DomainError("gegenbauer ode_residual: |t| must not exceed 1");
  const double n = spec.dimension();
  const double m = spec.degree;
  const double y = eval(spec, t);
  const double y1 = derivative(spec, Complex(t, 0.0)).real();
  const double y2 = second_derivative(spec, Complex(t, 0.0)).real();
  const double a = (1.0 - t * t) * y2, b = (n - 1.0) * t * y1, c = m * (m + n - 2.0) * y;
  OdeResidual r;
  r.standard = a - b + c;
  r.alternative = (t * t - 1.0) * y2 + 2.0 * t * (n - 1.0) * y1 - c;
  r.scale = std::abs(a) + std::abs(b) + std::abs(c);
  return r;
}

EndpointValues endpoint_values(const GegenbauerSpec& spec) {
  spec.validate();
  // Gamma(m + a) / (m! Gamma(a)) with a = 2*order = twice_order: prod_{i=1}^m (a + i - 1) / i.
  long double v = 1.0L;
  for (int i = 1; i <= spec.degree; ++i) v = v * static_cast<long double>(spec.twice_order + i - 1) / i;
  EndpointValues e;
  e.at_plus_one = static_cast<double>(v);
  e.at_minus_one = (spec.degree % 2 == 0) ? e.at_plus_one : -e.at_plus_one;
  if (e.at_plus_one == 0.0) throw NumericalError("gegenbauer", "endpoint value vanishes");
  const double rp = eval(spec, 1.0), rm = eval(spec, -1.0);
  const double tol = 1e-12 * std::abs(e.at_plus_one);
  if (std::abs(rp - e.at_plus_one) > tol || std::abs(rm - e.at_minus_one) > tol)
    throw NumericalError("gegenbauer", "endpoint closed form disagrees with the recurrence");
  return e;
}

}  // namespace otlab::gegenbauer
