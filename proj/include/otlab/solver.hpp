#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "otlab/common.hpp"
#include "otlab/grid.hpp"
#include "otlab/medium.hpp"

namespace otlab::solver {

using otlab::GridDomain;

/// Complex nodal samples on a grid. Stored as (Re, Im) pairs, i.e. the two
/// components (u^1, u^2) of the equivalent real system.
struct ComplexField {
  GridDomain grid;
  std::vector<Complex> values;

  static ComplexField zeros(const GridDomain& grid) { return {grid, std::vector<Complex>(grid.node_count())}; }
  template <class F>
  static ComplexField sample(const GridDomain& grid, F&& f) {
    ComplexField out = zeros(grid);
    for (int id = 0; id < grid.node_count(); ++id) out.values[id] = f(grid.point(id));
    return out;
  }
};

struct AssemblyOptions {
  bool include_reaction = true;
  /// Nodes solved for. Empty means every interior node; otherwise one flag per
  /// node (boundary nodes are always treated as Dirichlet nodes).
  std::vector<char> unknown_mask;
  /// Relative algebraic residual required of every solve.
  double tolerance = 1e-10;
  /// Upper bound on the number of real unknowns (2 per node).
  long max_real_unknowns = 2L * 63 * 63 * 63;
  /// Worker budget for multi right-hand-side solves.
  int threads = 1;
  /// Skip the factorization when only matrix-vector products are needed.
  bool factorize = true;
};

/// Conservative second-order discretization of -div(K grad u) + q u.
///
/// The operator is the stiffness matrix of the discrete bilinear form
///   a_h(u, v) = sum_edges w K_dd (du)(dv) / h^2
///             + sum_plaquettes w K_de (D_d u D_e v + D_e u D_d v)
///             + sum_nodes W q u v,
/// with K averaged arithmetically onto edges and plaquettes and trapezoidal
/// weights transverse to each stencil. The form is symmetric (not Hermitian),
/// so the node matrix satisfies A = A^T. Interior rows equal W times the finite
/// difference operator. Solves use the real 2x2-block form of the unknowns.
class DiscreteOperator {
 public:
  const GridDomain& grid() const noexcept { return grid_; }
  /// Symmetric complex matrix of a_h over all grid nodes.
  const Eigen::SparseMatrix<Complex>& node_matrix() const noexcept { return node_matrix_; }
  /// Real block system over the unknowns: rows 2p, 2p+1 hold (Re, Im) of unknown p.
  const Eigen::SparseMatrix<double>& block_matrix() const noexcept { return block_; }
  const std::vector<int>& unknowns() const noexcept { return unknowns_; }
  /// Node id -> unknown position, or -1 for Dirichlet nodes.
  int unknown_position(int id) const noexcept { return position_[id]; }
  bool reaction() const noexcept { return reaction_; }
  double tolerance() const noexcept { return tolerance_; }
  int threads() const noexcept { return threads_; }

  bool factorized() const noexcept { return factorization_ != nullptr; }

  /// Solves the block system for complex right-hand sides (one column per
  /// problem, one row per unknown). The factorization is shared and reused.
  Eigen::MatrixXcd solve_unknowns(const Eigen::MatrixXcd& rhs) const;

 private:
  friend DiscreteOperator assemble(const medium::OpticalMedium&, const AssemblyOptions&);
  struct Factorization;

  GridDomain grid_;
  Eigen::SparseMatrix<Complex> node_matrix_;
  Eigen::SparseMatrix<double> block_;
  std::vector<int> unknowns_;
  std::vector<int> position_;
  bool reaction_ = true;
  double tolerance_ = 1e-10;
  int threads_ = 1;
  std::shared_ptr<const Factorization> factorization_;
};

/// Throws DomainError when K_R is not positive definite somewhere, and
/// NumericalError when the system exceeds the size cap or cannot be factorized.
DiscreteOperator assemble(const medium::OpticalMedium& medium, const AssemblyOptions& options = {});

/// Solves L u = f in the unknown region with u = g on the Dirichlet nodes.
/// `g` supplies values on Dirichlet nodes, `f` the source on unknown nodes.
ComplexField solve_dirichlet(const DiscreteOperator& op, const ComplexField& g, const ComplexField& f);

/// Discrete L u at unknown nodes (the node-matrix row divided by the node
/// weight), zero on Dirichlet nodes.
ComplexField apply_operator(const DiscreteOperator& op, const ComplexField& u);

/// a_h(u, v) = u^T A v, bilinear (no conjugation).
Complex energy_form(const DiscreteOperator& op, const ComplexField& u, const ComplexField& v);

/// max |L u - f| / max |f| over unknown nodes (absolute when f vanishes).
double relative_residual(const DiscreteOperator& op, const ComplexField& u, const ComplexField& f);

}  // namespace otlab::solver
