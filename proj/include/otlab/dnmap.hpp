#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "otlab/common.hpp"
#include "otlab/grid.hpp"
#include "otlab/medium.hpp"
#include "otlab/solver.hpp"

namespace otlab::dnmap {

/// Discrete H^{1/2}(boundary) scale. S_b is the graph Laplacian of the surface
/// grid (unit weight per surface edge, which is the per-face five-point
/// stiffness with halved weights on face borders, stitched along cube edges),
/// M_b the trapezoidal area weights. The generalized eigenproblem
/// S_b v = lambda M_b v is solved once; V is M_b-orthonormal.
class SobolevScale {
 public:
  explicit SobolevScale(const GridDomain& grid);

  const GridDomain& grid() const noexcept { return grid_; }
  int size() const noexcept { return static_cast<int>(mass_.size()); }
  const Eigen::SparseMatrix<double>& stiffness() const noexcept { return stiffness_; }
  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return V_; }

  /// (I + Delta_b)^s f for nodal functions f, Delta_b = M_b^{-1} S_b.
  Eigen::VectorXcd apply_power(const Eigen::VectorXcd& f, double s) const;
  /// Eigen coefficients of a nodal function: V^T M_b f.
  Eigen::VectorXcd function_coefficients(const Eigen::VectorXcd& f) const;
  /// Eigen coefficients of a functional given by its values on the nodal basis: V^T phi.
  Eigen::VectorXcd functional_coefficients(const Eigen::VectorXcd& phi) const;
  /// Real matrix V (I + Lambda)^{-1/4}; maps unit vectors to unit H^{1/2} functions.
  const Eigen::MatrixXd& half_weight() const noexcept { return W_; }

 private:
  GridDomain grid_;
  Eigen::SparseMatrix<double> stiffness_;
  Eigen::VectorXd mass_, lambda_;
  Eigen::MatrixXd V_, W_;
};

/// Sesquilinear pairing in the discrete H^{order} scale, order = +1/2 for
/// nodal functions and -1/2 for functionals (values on the nodal basis):
/// sum_i (1 + lambda_i)^order c_i(f) conj(c_i(g)).
Complex sobolev_pairing(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, const SobolevScale& scale, double order);
double sobolev_norm(const Eigen::VectorXcd& f, const SobolevScale& scale, double order);
/// Duality pairing <phi, f> = sum_i phi_i f_i of a functional and a function.
Complex duality_pairing(const Eigen::VectorXcd& phi, const Eigen::VectorXcd& f);

/// Boundary values of a function, ordered as grid.boundary_nodes().
Eigen::VectorXcd boundary_trace(const GridDomain& grid, const std::function<Complex(const Vec3&)>& f);

/// Dense D-N matrix on the boundary nodes. Entry (i, j) is the discrete
/// energy a_h(u_j, u_i) of the solutions with nodal boundary data e_j, e_i, so
/// <Lambda f, conj g> = g^T Lambda f.
struct DNOperator {
  Eigen::MatrixXcd matrix;
  std::uint64_t medium_fingerprint = 0;
  std::uint64_t grid_fingerprint = 0;

  /// max |Lambda - Lambda^T| / max |Lambda|.
  double symmetry_residual() const;
  void save(const std::string& path) const;
  /// Throws ValidationError on a malformed or truncated container.
  static DNOperator load(const std::string& path);
};

struct DNOptions {
  bool include_reaction = true;
  double tolerance = 1e-10;
  int threads = 1;
};

/// Lambda = A_bb - A_bI A_II^{-1} A_Ib from one factorization, in column
/// blocks of 64 boundary nodes.
DNOperator assemble_dn(const medium::OpticalMedium& medium, const DNOptions& options = {});

/// Lambda_1 - Lambda_2; throws DomainError when the grids differ.
Eigen::MatrixXcd dn_difference(const DNOperator& a, const DNOperator& b);

struct StarNormOptions {
  double tolerance = 1e-8;  ///< relative change of the Rayleigh quotient
  int max_iterations = 20000;
  std::uint64_t seed = 7;
};

struct StarNormResult {
  double value = 0.0;
  int iterations = 0;
  std::vector<double> history;  ///< Rayleigh quotients of A*A, one per iteration
};

/// Spectral norm of (I + Delta_b)^{-1/4} delta (I + Delta_b)^{-1/4}, i.e. the
/// norm of delta from H^{1/2} to H^{-1/2}, by power iteration on A*A. Throws
/// NumericalError (carrying the last quotients) when the cap is reached.
StarNormResult star_norm(const Eigen::MatrixXcd& delta, const SobolevScale& scale, const StarNormOptions& options = {});

/// The same norm from a dense singular value decomposition.
double star_norm_dense(const Eigen::MatrixXcd& delta, const SobolevScale& scale);

struct AlessandriniReport {
  Complex lhs = 0.0;  ///< <(Lambda_1 - Lambda_2) f, conj g>
  Complex rhs = 0.0;  ///< volume integrals by nodal-gradient quadrature
  double scale = 0.0; ///< sqrt of the product of the two energies
  double residual = 0.0;
};

/// Both sides of Alessandrini's identity with u solving medium 1 with data f
/// and v solving medium 2 with data g:
///   <(Lambda_1 - Lambda_2) f, conj g> = int (K_1 - K_2) grad u . grad v + int (mu_a1 - mu_a2) u v.
/// The left side uses the discrete energies; the right side uses second-order
/// nodal gradients and trapezoidal weights, so the two only agree up to the
/// discretization error. residual = |lhs - rhs| / scale.
AlessandriniReport alessandrini_residual(const medium::OpticalMedium& medium1, const medium::OpticalMedium& medium2,
                                         const Eigen::VectorXcd& f, const Eigen::VectorXcd& g,
                                         const DNOptions& options = {});

/// int (K grad u . grad v) + q u v over the cube with nodal gradients and
/// trapezoidal weights (bilinear, no conjugation). Entries of K and q may be
/// differences of two media.
Complex volume_form(const GridDomain& grid, const std::vector<CMat3>& K, const std::vector<Complex>& q,
                    const std::vector<Complex>& u, const std::vector<Complex>& v);

}  // namespace otlab::dnmap
