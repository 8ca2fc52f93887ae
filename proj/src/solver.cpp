#include "otlab/solver.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include "otlab/parallel.hpp"

namespace otlab::solver {

struct DiscreteOperator::Factorization {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

namespace {

using Triplet = Eigen::Triplet<Complex>;

void add_edges(const GridDomain& g, const medium::ComplexTensorField& f, std::vector<Triplet>& t) {
  const int m = g.points_per_axis();
  const double h = g.spacing();
  for (int id = 0; id < g.node_count(); ++id) {
    const auto ijk = g.index(id);
    for (int d = 0; d < 3; ++d) {
      if (ijk[d] == m - 1) continue;
      auto nb = ijk;
      nb[d] += 1;
      const int other = g.id(nb[0], nb[1], nb[2]);
      double transverse = 1.0;
      for (int e = 0; e < 3; ++e)
        if (e != d && (ijk[e] == 0 || ijk[e] == m - 1)) transverse *= 0.5;
      const Complex kappa = 0.5 * (f.K[id](d, d) + f.K[other](d, d));
      const Complex c = h * transverse * kappa;
      t.emplace_back(id, id, c);
      t.emplace_back(other, other, c);
      t.emplace_back(id, other, -c);
      t.emplace_back(other, id, -c);
    }
  }
}

void add_plaquettes(const GridDomain& g, const medium::ComplexTensorField& f, std::vector<Triplet>& t) {
  const int m = g.points_per_axis();
  const double h = g.spacing();
  static constexpr double gd[4] = {-1.0, 1.0, -1.0, 1.0};
  static constexpr double ge[4] = {-1.0, -1.0, 1.0, 1.0};
  for (int d = 0; d < 3; ++d) {
    for (int e = d + 1; e < 3; ++e) {
      const int third = 3 - d - e;
      for (int id = 0; id < g.node_count(); ++id) {
        const auto ijk = g.index(id);
        if (ijk[d] == m - 1 || ijk[e] == m - 1) continue;
        int corner[4];
        for (int c = 0; c < 4; ++c) {
          auto p = ijk;
          p[d] += c & 1;
          p[e] += (c >> 1) & 1;
          corner[c] = g.id(p[0], p[1], p[2]);
        }
        Complex kappa = 0.0;
        for (int c : corner) kappa += f.K[c](d, e);
        kappa *= 0.25;
        if (kappa == Complex(0.0)) continue;
        const double w = h * h * h * ((ijk[third] == 0 || ijk[third] == m - 1) ? 0.5 : 1.0);
        const Complex s = w * kappa / (4.0 * h * h);
        for (int p = 0; p < 4; ++p)
          for (int q = 0; q < 4; ++q) {
            const double v = gd[p] * ge[q] + ge[p] * gd[q];
            if (v != 0.0) t.emplace_back(corner[p], corner[q], s * v);
          }
      }
    }
  }
}

}  // namespace

DiscreteOperator assemble(const medium::OpticalMedium& medium, const AssemblyOptions& options) {
  medium.check_shapes();
  const GridDomain& g = medium.grid;
  const int N = g.node_count();
  const medium::ComplexTensorField field = medium::split_real_imag(medium);
  for (int id = 0; id < N; ++id) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(field.K_R[id], Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw DomainError("solver: ellipticity violated (K_R not positive definite) at node " + std::to_string(id));
  }

  DiscreteOperator op;
  op.grid_ = g;
  op.reaction_ = options.include_reaction;
  op.tolerance_ = options.tolerance;
  op.threads_ = std::max(1, options.threads);

  op.position_.assign(N, -1);
  for (int id = 0; id < N; ++id) {
    const bool wanted = options.unknown_mask.empty() ? true : options.unknown_mask.at(id) != 0;
    if (wanted && !g.on_boundary(id)) {
      op.position_[id] = static_cast<int>(op.unknowns_.size());
      op.unknowns_.push_back(id);
    }
  }
  const long real_unknowns = 2L * static_cast<long>(op.unknowns_.size());
  if (real_unknowns > options.max_real_unknowns)
    throw NumericalError("solver", "system with " + std::to_string(real_unknowns) +
                                       " real unknowns exceeds the configured cap");
  if (op.unknowns_.empty()) throw DomainError("solver: no unknown nodes");

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(N) * 16);
  add_edges(g, field, t);
  add_plaquettes(g, field, t);
  if (options.include_reaction)
    for (int id = 0; id < N; ++id) t.emplace_back(id, id, g.volume_weight(id) * Complex(field.q_R[id], field.q_I[id]));
  op.node_matrix_.resize(N, N);
  op.node_matrix_.setFromTriplets(t.begin(), t.end());
  op.node_matrix_.makeCompressed();

  std::vector<Eigen::Triplet<double>> bt;
  bt.reserve(static_cast<std::size_t>(op.node_matrix_.nonZeros()) * 4);
  for (int col = 0; col < N; ++col) {
    const int q = op.position_[col];
    if (q < 0) continue;
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(op.node_matrix_, col); it; ++it) {
      const int p = op.position_[it.row()];
      if (p < 0) continue;
      const double a = it.value().real(), b = it.value().imag();
      bt.emplace_back(2 * p, 2 * q, a);
      bt.emplace_back(2 * p + 1, 2 * q + 1, a);
      bt.emplace_back(2 * p, 2 * q + 1, -b);
      bt.emplace_back(2 * p + 1, 2 * q, b);
    }
  }
  op.block_.resize(real_unknowns, real_unknowns);
  op.block_.setFromTriplets(bt.begin(), bt.end());
  op.block_.makeCompressed();

  if (!options.factorize) return op;
  auto fact = std::make_shared<DiscreteOperator::Factorization>();
  fact->lu.compute(op.block_);
  if (fact->lu.info() != Eigen::Success)
    throw NumericalError("solver", "sparse LU factorization failed: " + fact->lu.lastErrorMessage());
  op.factorization_ = std::move(fact);
  return op;
}

Eigen::MatrixXcd DiscreteOperator::solve_unknowns(const Eigen::MatrixXcd& rhs) const {
  const auto n = static_cast<Eigen::Index>(unknowns_.size());
  if (rhs.rows() != n) throw DomainError("solver: right-hand side has the wrong number of rows");
  if (!factorization_) throw NumericalError("solver", "operator was assembled without a factorization");
  Eigen::MatrixXcd out(n, rhs.cols());
  const int cols = static_cast<int>(rhs.cols());
  constexpr int kBlock = 64;
  const int blocks = (cols + kBlock - 1) / kBlock;
  parallel_for(blocks, threads_, [&](int b0, int b1) {
    for (int b = b0; b < b1; ++b) {
      const int c0 = b * kBlock, nc = std::min(kBlock, cols - c0);
      Eigen::MatrixXd real_rhs(2 * n, nc);
      for (int c = 0; c < nc; ++c)
        for (Eigen::Index p = 0; p < n; ++p) {
          real_rhs(2 * p, c) = rhs(p, c0 + c).real();
          real_rhs(2 * p + 1, c) = rhs(p, c0 + c).imag();
        }
      Eigen::MatrixXd x = factorization_->lu.solve(real_rhs);
      // One step of iterative refinement keeps the residual at round-off level.
      const Eigen::MatrixXd r = real_rhs - block_ * x;
      x += factorization_->lu.solve(r);
      const Eigen::MatrixXd res = real_rhs - block_ * x;
      for (int c = 0; c < nc; ++c) {
        const double bn = real_rhs.col(c).norm();
        const double rn = res.col(c).norm();
        if (bn > 0.0 && rn > tolerance_ * bn)
          throw NumericalError("solver", "relative residual " + std::to_string(rn / bn) +
                                             " exceeds tolerance in column " + std::to_string(c0 + c));
        for (Eigen::Index p = 0; p < n; ++p) out(p, c0 + c) = Complex(x(2 * p, c), x(2 * p + 1, c));
      }
    }
  });
  return out;
}

ComplexField solve_dirichlet(const DiscreteOperator& op, const ComplexField& g, const ComplexField& f) {
  const GridDomain& grid = op.grid();
  const int N = grid.node_count();
  if (static_cast<int>(g.values.size()) != N || static_cast<int>(f.values.size()) != N)
    throw DomainError("solve_dirichlet: field sizes do not match the operator grid");
  ComplexField u = ComplexField::zeros(grid);
  Eigen::VectorXcd lift = Eigen::VectorXcd::Zero(N);
  for (int id = 0; id < N; ++id)
    if (op.unknown_position(id) < 0) {
      u.values[id] = g.values[id];
      lift[id] = g.values[id];
    }
  const Eigen::VectorXcd Ag = op.node_matrix() * lift;
  const auto n = static_cast<Eigen::Index>(op.unknowns().size());
  Eigen::MatrixXcd rhs(n, 1);
  for (Eigen::Index p = 0; p < n; ++p) {
    const int id = op.unknowns()[p];
    rhs(p, 0) = grid.volume_weight(id) * f.values[id] - Ag[id];
  }
  const Eigen::MatrixXcd x = op.solve_unknowns(rhs);
  for (Eigen::Index p = 0; p < n; ++p) u.values[op.unknowns()[p]] = x(p, 0);
  return u;
}

ComplexField apply_operator(const DiscreteOperator& op, const ComplexField& u) {
  const GridDomain& grid = op.grid();
  if (static_cast<int>(u.values.size()) != grid.node_count())
    throw DomainError("apply_operator: field size does not match the operator grid");
  const Eigen::Map<const Eigen::VectorXcd> uv(u.values.data(), grid.node_count());
  const Eigen::VectorXcd Au = op.node_matrix() * uv;
  ComplexField out = ComplexField::zeros(grid);
  for (int id : op.unknowns()) out.values[id] = Au[id] / grid.volume_weight(id);
  return out;
}

Complex energy_form(const DiscreteOperator& op, const ComplexField& u, const ComplexField& v) {
  const int N = op.grid().node_count();
  const Eigen::Map<const Eigen::VectorXcd> uv(u.values.data(), N), vv(v.values.data(), N);
  return uv.transpose() * (op.node_matrix() * vv);
}

double relative_residual(const DiscreteOperator& op, const ComplexField& u, const ComplexField& f) {
  const ComplexField Lu = apply_operator(op, u);
  double num = 0.0, den = 0.0;
  for (int id : op.unknowns()) {
    num = std::max(num, std::abs(Lu.values[id] - f.values[id]));
    den = std::max(den, std::abs(f.values[id]));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace otlab::solver
