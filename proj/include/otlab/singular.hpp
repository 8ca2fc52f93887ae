#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "otlab/common.hpp"
#include "otlab/fit.hpp"
#include "otlab/medium.hpp"
#include "otlab/solver.hpp"

namespace otlab::singular {

/// Frozen inverse diffusion tensor K^{-1}(z) at the pole z. The dimension is
/// z.size() and may exceed 3 for the pointwise formulas.
struct SingularityPoint {
  Eigen::VectorXd z;
  Eigen::MatrixXcd K_inv;

  int dimension() const noexcept { return static_cast<int>(z.size()); }
  /// (K^{-1})_{(n)}: last row.
  Eigen::VectorXcd last_row() const { return K_inv.row(K_inv.rows() - 1).transpose(); }
  /// (K^{-1})_{nn}: last entry of the last row.
  Complex last_entry() const { return K_inv(K_inv.rows() - 1, K_inv.cols() - 1); }
  /// Throws DomainError on size mismatch, n < 3 or an asymmetric tensor.
  void validate() const;

  static SingularityPoint from_tensor(Eigen::VectorXd z, Eigen::MatrixXcd K_inv);
  static SingularityPoint from_coefficients(Eigen::VectorXd z, double mu_a, double mu_s, const Eigen::MatrixXd& B, double k);
  /// Frozen tensor of a sampled medium at z (trilinear interpolation of mu_a, mu_s).
  /// Requires B to vanish on the grid cell around z.
  static SingularityPoint from_medium(const medium::OpticalMedium& medium, const Vec3& z);
};

struct SingularSolutionSpec {
  int m = 0;
  SingularityPoint at;
};

/// Set when an evaluation came within 1e-9 of the negative real axis.
struct BranchDiagnostics {
  bool near_cut = false;
  double worst_arg = 0.0;
};

/// w^exponent = exp(exponent * Log w) with Arg w in (-pi, pi].
Complex principal_branch_power(Complex w, double exponent, BranchDiagnostics* diag = nullptr);

/// u_0(x) = (K^{-1}(z)(x - z).(x - z))^{(2-n)/2}.
Complex fundamental_solution(const SingularityPoint& at, const Eigen::VectorXd& x, BranchDiagnostics* diag = nullptr);

/// u_m(x) = Q^{(2-n-m)/2} m! A^{m/2} C_m^{(n-2)/2}(r / (A Q)^{1/2}) with
/// Q = K^{-1}(x-z).(x-z), r = K^{-1}_{(n)}.(x-z), A = K^{-1}_{nn}.
Complex leading_term(const SingularSolutionSpec& spec, const Eigen::VectorXd& x, BranchDiagnostics* diag = nullptr);

/// Analytic gradient of leading_term in x.
Eigen::VectorXcd leading_term_gradient(const SingularSolutionSpec& spec, const Eigen::VectorXd& x);

/// m! c^{(2-n)/2} |x-z|^{2-n-m} C_m^{(n-2)/2}((x-z)_n / |x-z|) with
/// c = mu_a + mu_s - ik = K^{-1}_{nn}/n. Requires K^{-1}(z) = n c I.
Complex leading_term_isotropic(const SingularSolutionSpec& spec, const Eigen::VectorXd& x);

/// leading_term / leading_term_isotropic, which is n^{(2-n)/2} for every x.
double isotropic_constant_ratio(int n);

/// The m-th y_n derivative of u_0 at y = z written out as the double sum
///   sum_j m!/(j!(m-2j)!) prod_{k<m-j}((2-n)/2 - k) (-2r)^{m-2j} A^j Q^{(2-n)/2-m+j}.
/// Limited to m <= 8.
Complex um_via_induction(const SingularSolutionSpec& spec, const Eigen::VectorXd& x);

/// C_n = 1 / ((n - 2) |S^{n-1}|), so that Delta(-C_n |x|^{2-n}) = delta.
double laplace_constant(int n);

/// Gamma_nu(x - y) = Gamma(x - y) + C_n sum_{j<=nu} |y|^j / |x|^{j+n-2} C_j(x^.y^),
/// Gamma(x) = -C_n |x|^{2-n}. nu = -1 returns Gamma itself.
double truncated_laplace_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int nu);

struct PotentialOptions {
  double radius = 1.0;          ///< R of the ball B_R
  double tolerance = 1e-10;     ///< requested relative accuracy
  int max_level = 3;            ///< rule refinements before giving up
  int max_shells = 400;         ///< dyadic shells towards the origin
};

struct PotentialValue {
  Complex value = 0.0;
  /// Estimated absolute error: rule comparison plus the neglected inner ball.
  double error_estimate = 0.0;
  long evaluations = 0;
  int level = 0;
};

/// u(x) = int_{B_R} Gamma_nu(x - y) f(y) dy in three dimensions.
///
/// Dyadic radial shells with Gauss-Legendre rules in the radius, Gauss rules in
/// cos(theta) and the trapezoidal rule in phi, in a frame whose pole points
/// along x. For |y| < |x|/2 the kernel is summed as its convergent tail series;
/// near |y| = |x| the Gamma part is integrated in the variable |x - y|, which
/// removes the point singularity. Throws NumericalError when the tolerance is
/// not reached within the level or shell budget.
PotentialValue newtonian_potential_truncated(const std::function<Complex(const Vec3&)>& f, int nu, const Vec3& x,
                                             const PotentialOptions& options = {});

/// |Delta_h u(x) - f(x)| / |f(x)| for the potential above, with Delta_h the
/// fourth-order 13-point Laplacian at steps delta and 2 delta combined by
/// Richardson extrapolation (sixth order). delta defaults to |x|/50. Quadrature
/// noise is amplified by about (|x|/delta)^2.
double potential_laplacian_residual(const std::function<Complex(const Vec3&)>& f, int nu, const Vec3& x,
                                    const PotentialOptions& options = {}, double delta = 0.0);

/// (2-n-m)^2 C_m(t)^2 + C_m'(t)^2 (1 - t^2), with C_m = C_m^{(n-2)/2}.
double gradient_lower_bracket(int m, int n, double t);

/// Minimum of gradient_lower_bracket over `points` equispaced t in [-1, 1].
double gradient_bracket_min(int m, int n, int points = 10001);

struct Annulus {
  double r_min = 0.0;
  double R = 0.0;
};

struct CorrectionReport {
  solver::ComplexField w;
  std::vector<double> shell_radius;  ///< geometric mid radius of each sub-shell
  std::vector<double> sup_w;         ///< max |w| per sub-shell
  std::vector<double> sup_rDw;       ///< max |x - z| |Dw| per sub-shell
  std::vector<double> sup_um;        ///< max |u_m| per sub-shell
  LogLogFit fit_w, fit_rDw;
  /// Candidate exponents 2-n+alpha (stated rate) and 2-n-m+alpha (rate from the
  /// estimate in the construction).
  double exponent_statement = 0.0;
  double exponent_proof = 0.0;
  double max_fit_residual = 0.25;
  bool fit_rejected = false;
  double sup_w_total = 0.0;
  double sup_um_total = 0.0;
};

/// Solves L_h w = -L_h u_m on the annulus r_min < |x - z| < R with w = 0 on
/// both spheres and on the cube surface, then fits the decay of |w| and
/// |x - z||Dw| over sub-shells of ratio sqrt(2). The |w| fit is flagged as
/// rejected when its rms log residual exceeds max_fit_residual; the gradient
/// fit is informational since w vanishes on both spheres.
CorrectionReport correction_w(const medium::OpticalMedium& medium, const SingularSolutionSpec& spec,
                              const Annulus& annulus, const solver::AssemblyOptions& options = {});

}  // namespace otlab::singular
