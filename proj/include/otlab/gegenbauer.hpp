#pragma once

#include <vector>

#include "otlab/common.hpp"

namespace otlab::gegenbauer {

/// Degree m and half-integer order a/2 of C_m^{a/2}. For the singular
/// solutions in dimension n the order is (n-2)/2, i.e. twice_order = n - 2.
struct GegenbauerSpec {
  static constexpr int kMaxDegree = 64;

  int degree = 0;
  int twice_order = 1;

  static GegenbauerSpec for_dimension(int m, int n) { return {m, n - 2}; }
  double order() const noexcept { return 0.5 * twice_order; }
  /// Dimension n with order (n-2)/2.
  int dimension() const noexcept { return twice_order + 2; }
  /// Throws DomainError for negative degree, degree above the cap, or order <= 0.
  void validate() const;
};

/// Three-term recurrence. Valid for any complex argument.
Complex eval(const GegenbauerSpec& spec, Complex z);
double eval(const GegenbauerSpec& spec, double t);

/// Explicit finite sum, evaluated in extended precision. Kept as an independent
/// route for cross-checking the recurrence.
Complex eval_direct(const GegenbauerSpec& spec, Complex z);

/// d/dz C_m^a = 2a C_{m-1}^{a+1}; zero for m = 0.
Complex derivative(const GegenbauerSpec& spec, Complex z);
/// d^2/dz^2 C_m^a = 4a(a+1) C_{m-2}^{a+2}.
Complex second_derivative(const GegenbauerSpec& spec, Complex z);

/// Coefficient of (z)^power in C_m^a, power = m - 2j.
struct Coefficient {
  int j = 0;
  int power = 0;
  double value = 0.0;
};
std::vector<Coefficient> coefficients(const GegenbauerSpec& spec);

/// Residuals of two candidate ODEs at real t, |t| <= 1:
///   standard:      (1 - t^2) y'' - (n - 1) t y' + m(m + n - 2) y
///   alternative:   (t^2 - 1) y'' + 2 t (n - 1) y' - m(m + n - 2) y
/// `scale` is the sum of the absolute values of the standard-form terms, for
/// relative comparisons.
struct OdeResidual {
  double standard = 0.0;
  double alternative = 0.0;
  double scale = 0.0;
};
OdeResidual ode_residual(const GegenbauerSpec& spec, double t);

/// C_m^a(1) = Gamma(m + 2a) / (m! Gamma(2a)) and C_m^a(-1) = (-1)^m C_m^a(1).
/// Throws NumericalError if either endpoint vanishes or disagrees with the recurrence.
struct EndpointValues {
  double at_plus_one = 0.0;
  double at_minus_one = 0.0;
};
EndpointValues endpoint_values(const GegenbauerSpec& spec);

}  // namespace otlab::gegenbauer
