#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otlab/common.hpp"
#include "otlab/grid.hpp"

namespace otlab::medium {

/// Constants every stability constant depends on.
struct AprioriData {
  int n = 3;
  double p = 6.0;
  double lambda = 1.25;
  double E = 10.0;
  double calE = 1.25;
  double k = 0.2;
  double r0 = 0.5;
  double L = 1.0;
  double diam = 1.7320508075688772;
  double alpha = 0.25;

  /// Throws ValidationError naming the offending field (as "/apriori/<name>").
  void validate() const;
};

/// The two wave-number ranges for which the boundary stability estimates hold.
struct KRanges {
  double k0 = 0.0;
  double k0_tilde = 0.0;
  /// 0 < k <= k0 or k >= k0_tilde.
  bool admissible(double k) const noexcept { return (k > 0.0 && k <= k0) || k >= k0_tilde; }
};

KRanges k_admissible_ranges(double lambda, double calE, int n);

/// n((mu_a - ik) I + (I - B) mu_s); n is B.rows().
Eigen::MatrixXcd inverse_diffusion_tensor(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k);

/// K = (1/n)((mu_a - ik) I + (I - B) mu_s)^{-1}, by complex LU with partial pivoting.
/// k = 0 is accepted here (pure algebra); the experiment pipeline rejects it.
Eigen::MatrixXcd diffusion_tensor(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k);

/// dK/dmu_a = -n K^2.
Eigen::MatrixXcd diffusion_tensor_sensitivity(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k);

/// Real and imaginary parts of K and K^{-1} from their closed forms, plus q = mu_a - ik.
struct TensorSplit {
  Eigen::MatrixXd K_R, K_I;
  Eigen::MatrixXd Kinv_R, Kinv_I;
  double q_R = 0.0, q_I = 0.0;
};
TensorSplit split_point(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k);

/// [[mu_a, k], [-k, mu_a]]: the reaction block of the real two-component system.
Eigen::Matrix2d q_matrix(double mu_a, double k);

/// [[K_R, -K_I], [K_I, K_R]].
Eigen::MatrixXd block_C(const Eigen::MatrixXd& K_R, const Eigen::MatrixXd& K_I);

/// Coefficients sampled on the solver grid.
struct OpticalMedium {
  GridDomain grid;
  std::vector<double> mu_a;
  std::vector<double> mu_s;
  std::vector<Mat3> B;
  AprioriData apriori;
  /// Declares supp(B) strictly inside the domain.
  bool b_interior_support = false;

  std::uint64_t fingerprint() const;
  /// Throws DomainError when the sample arrays do not match the grid.
  void check_shapes() const;
};

struct CoefficientFunctions {
  std::function<double(const Vec3&)> mu_a;
  std::function<double(const Vec3&)> mu_s;
  std::function<Mat3(const Vec3&)> B;  ///< may be empty (B = 0)
};

OpticalMedium sample_medium(const CoefficientFunctions& coefficients, const GridDomain& grid,
                            const AprioriData& apriori, bool b_interior_support = false);

struct ComplexTensorField {
  std::vector<CMat3> K;
  std::vector<Mat3> K_R, K_I;
  std::vector<double> q_R, q_I;
  double k = 0.0;
  std::size_t size() const noexcept { return K.size(); }
};

ComplexTensorField split_real_imag(const OpticalMedium& medium);

using BlockC = Eigen::Matrix<double, 6, 6>;
std::vector<BlockC> assemble_block_C(const ComplexTensorField& field);

struct Violation {
  int point = -1;
  std::string kind;
  double value = 0.0;
  double bound = 0.0;
};

/// Pointwise ellipticity diagnostics. Violations are entries, never exceptions.
struct EllipticityReport {
  std::vector<double> min_eig_K_R, min_eig_K_I;
  std::vector<double> norm_sq;   ///< |K_R|^2 + |K_I|^2 (spectral norms)
  std::vector<double> local_C2;  ///< max(1/min eig K_R, max eig K_R)
  double bound_K_R = 0.0;        ///< lower bound on K_R from the a-priori data
  double bound_K_I = 0.0;        ///< lower bound on K_I
  double bound_norm_sq = 0.0;    ///< upper bound on |K_R|^2 + |K_I|^2
  double C2 = 0.0;               ///< strong-ellipticity constant implied by the bounds
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

EllipticityReport verify_ellipticity(const ComplexTensorField& field, const AprioriData& apriori);

/// Sample-level admissibility of the coefficients themselves.
struct AdmissibilityReport {
  std::vector<Violation> violations;
  /// Grid approximations of the W^{1,p} norms (discrete gradients, trapezoidal quadrature).
  double w1p_mu_a = 0.0, w1p_mu_s = 0.0, w1p_B = 0.0;
  bool w1p_is_approximation = true;
  bool ok() const noexcept { return violations.empty(); }
};

AdmissibilityReport check_admissibility(const OpticalMedium& medium);

}  // namespace otlab::medium
