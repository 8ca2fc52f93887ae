#include "otlab/dnmap.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "otlab/parallel.hpp"

namespace otlab::dnmap {

namespace {

constexpr char kMagic[8] = {'O', 'T', 'L', 'A', 'B', 'D', 'N', '1'};
constexpr std::uint32_t kFormatVersion = 1;

bool surface_edge(const GridDomain& g, const std::array<int, 3>& a, int axis) {
  const int m = g.points_per_axis();
  for (int e = 0; e < 3; ++e)
    if (e != axis && (a[e] == 0 || a[e] == m - 1)) return true;
  return false;
}

}  // namespace

SobolevScale::SobolevScale(const GridDomain& grid) : grid_(grid) {
  const auto& bnodes = grid.boundary_nodes();
  const int nb = static_cast<int>(bnodes.size());
  const int m = grid.points_per_axis();
  const double h = grid.spacing();

  mass_.resize(nb);
  std::vector<Eigen::Triplet<double>> t;
  for (int p = 0; p < nb; ++p) {
    const auto ijk = grid.index(bnodes[p]);
    // Sum of per-face trapezoidal weights over the faces containing the node.
    double w = 0.0;
    for (int f = 0; f < 3; ++f) {
      if (ijk[f] != 0 && ijk[f] != m - 1) continue;
      double face = h * h;
      for (int e = 0; e < 3; ++e)
        if (e != f && (ijk[e] == 0 || ijk[e] == m - 1)) face *= 0.5;
      w += face;
    }
    mass_[p] = w;
    for (int d = 0; d < 3; ++d) {
      if (ijk[d] == m - 1) continue;
      if (!surface_edge(grid, ijk, d)) continue;
      auto nb_ijk = ijk;
      nb_ijk[d] += 1;
      const int q = grid.boundary_position(grid.id(nb_ijk[0], nb_ijk[1], nb_ijk[2]));
      t.emplace_back(p, p, 1.0);
      t.emplace_back(q, q, 1.0);
      t.emplace_back(p, q, -1.0);
      t.emplace_back(q, p, -1.0);
    }
  }
  stiffness_.resize(nb, nb);
  stiffness_.setFromTriplets(t.begin(), t.end());

  const Eigen::VectorXd isqrt = mass_.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd sym = isqrt.asDiagonal() * Eigen::MatrixXd(stiffness_) * isqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("dnmap", "boundary eigendecomposition failed");
  lambda_ = es.eigenvalues().cwiseMax(0.0);
  V_ = isqrt.asDiagonal() * es.eigenvectors();
  const Eigen::VectorXd quarter = (Eigen::VectorXd::Ones(nb) + lambda_).array().pow(-0.25).matrix();
  W_ = V_ * quarter.asDiagonal();
}

Eigen::VectorXcd SobolevScale::function_coefficients(const Eigen::VectorXcd& f) const {
  if (f.size() != size()) throw DomainError("dnmap: boundary vector size does not match the scale");
  return V_.transpose() * (mass_.cast<Complex>().asDiagonal() * f);
}

Eigen::VectorXcd SobolevScale::functional_coefficients(const Eigen::VectorXcd& phi) const {
  if (phi.size() != size()) throw DomainError("dnmap: boundary vector size does not match the scale");
  return V_.transpose() * phi;
}

Eigen::VectorXcd SobolevScale::apply_power(const Eigen::VectorXcd& f, double s) const {
  Eigen::VectorXcd c = function_coefficients(f);
  for (int i = 0; i < size(); ++i) c[i] *= std::pow(1.0 + lambda_[i], s);
  return V_ * c;
}

Complex sobolev_pairing(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, const SobolevScale& scale,
                        double order) {
  if (order != 0.5 && order != -0.5) throw DomainError("sobolev_pairing: order must be +1/2 or -1/2");
  const Eigen::VectorXcd cf = order > 0 ? scale.function_coefficients(f) : scale.functional_coefficients(f);
  const Eigen::VectorXcd cg = order > 0 ? scale.function_coefficients(g) : scale.functional_coefficients(g);
  Complex s = 0.0;
  for (int i = 0; i < scale.size(); ++i) s += std::pow(1.0 + scale.eigenvalues()[i], order) * cf[i] * std::conj(cg[i]);
  return s;
}

double sobolev_norm(const Eigen::VectorXcd& f, const SobolevScale& scale, double order) {
  return std::sqrt(std::max(0.0, sobolev_pairing(f, f, scale, order).real()));
}

Complex duality_pairing(const Eigen::VectorXcd& phi, const Eigen::VectorXcd& f) {
  if (phi.size() != f.size()) throw DomainError("duality_pairing: size mismatch");
  return (phi.array() * f.array()).sum();
}

Eigen::VectorXcd boundary_trace(const GridDomain& grid, const std::function<Complex(const Vec3&)>& f) {
  const auto& b = grid.boundary_nodes();
  Eigen::VectorXcd out(static_cast<Eigen::Index>(b.size()));
  for (std::size_t p = 0; p < b.size(); ++p) out[static_cast<Eigen::Index>(p)] = f(grid.point(b[p]));
  return out;
}

double DNOperator::symmetry_residual() const {
  const double scale = matrix.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (matrix - matrix.transpose()).cwiseAbs().maxCoeff() / scale;
}

void DNOperator::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("", "cannot open " + path + " for writing");
  const std::uint64_t rows = matrix.rows(), cols = matrix.cols();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&kFormatVersion), sizeof kFormatVersion);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(&medium_fingerprint), sizeof medium_fingerprint);
  out.write(reinterpret_cast<const char*>(&grid_fingerprint), sizeof grid_fingerprint);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double re = matrix(i, j).real(), im = matrix(i, j).imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof re);
      out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  if (!out) throw ValidationError("", "write to " + path + " failed");
}

DNOperator DNOperator::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("", "cannot open " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  DNOperator op;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  in.read(reinterpret_cast<char*>(&op.medium_fingerprint), sizeof op.medium_fingerprint);
  in.read(reinterpret_cast<char*>(&op.grid_fingerprint), sizeof op.grid_fingerprint);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ValidationError("", path + " is not a D-N container");
  if (version != kFormatVersion) throw ValidationError("", path + ": unsupported container version " + std::to_string(version));
  if (rows != cols || rows == 0 || rows > 100000) throw ValidationError("", path + ": bad matrix shape");
  op.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix.cols(); ++j) {
      double re = 0.0, im = 0.0;
      in.read(reinterpret_cast<char*>(&re), sizeof re);
      in.read(reinterpret_cast<char*>(&im), sizeof im);
      op.matrix(i, j) = Complex(re, im);
    }
  if (!in) throw ValidationError("", path + ": truncated D-N container");
  return op;
}

DNOperator assemble_dn(const medium::OpticalMedium& medium, const DNOptions& options) {
  solver::AssemblyOptions opt;
  opt.include_reaction = options.include_reaction;
  opt.tolerance = options.tolerance;
  opt.threads = 1;
  const solver::DiscreteOperator op = solver::assemble(medium, opt);
  const GridDomain& g = medium.grid;
  const auto& bnodes = g.boundary_nodes();
  const int nb = static_cast<int>(bnodes.size());
  const auto nu = static_cast<Eigen::Index>(op.unknowns().size());
  const auto& A = op.node_matrix();

  DNOperator dn;
  dn.medium_fingerprint = medium.fingerprint();
  dn.grid_fingerprint = g.fingerprint();
  dn.matrix.resize(nb, nb);

  constexpr int kBlock = 64;
  const int blocks = (nb + kBlock - 1) / kBlock;
  parallel_for(blocks, options.threads, [&](int b0, int b1) {
    for (int b = b0; b < b1; ++b) {
      const int c0 = b * kBlock, nc = std::min(kBlock, nb - c0);
      // Columns of A restricted to (all nodes) x (boundary block).
      Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(nu, nc);
      Eigen::MatrixXcd direct = Eigen::MatrixXcd::Zero(nb, nc);
      for (int c = 0; c < nc; ++c) {
        const int col = bnodes[c0 + c];
        for (Eigen::SparseMatrix<Complex>::InnerIterator it(A, col); it; ++it) {
          const int row = static_cast<int>(it.row());
          const int p = op.unknown_position(row);
          if (p >= 0)
            rhs(p, c) = it.value();
          else
            direct(g.boundary_position(row), c) = it.value();
        }
      }
      Eigen::MatrixXcd x;
      try {
        x = op.solve_unknowns(rhs);
      } catch (const NumericalError& e) {
        throw NumericalError("dnmap", "D-N column block starting at " + std::to_string(c0) + ": " + e.what());
      }
      // Lambda e_j = A_bb e_j - A_bI x_j, using A_bI = A_Ib^T.
      for (int c = 0; c < nc; ++c)
        for (Eigen::Index p = 0; p < nu; ++p) {
          const int id = op.unknowns()[p];
          for (Eigen::SparseMatrix<Complex>::InnerIterator it(A, id); it; ++it) {
            const int q = g.boundary_position(static_cast<int>(it.row()));
            if (q >= 0) direct(q, c) -= it.value() * x(p, c);
          }
        }
      dn.matrix.middleCols(c0, nc) = direct;
    }
  });
  return dn;
}

Eigen::MatrixXcd dn_difference(const DNOperator& a, const DNOperator& b) {
  if (a.grid_fingerprint != b.grid_fingerprint || a.matrix.rows() != b.matrix.rows())
    throw DomainError("dn_difference: operators live on different grids");
  return a.matrix - b.matrix;
}

StarNormResult star_norm(const Eigen::MatrixXcd& delta, const SobolevScale& scale, const StarNormOptions& options) {
  const int nb = scale.size();
  if (delta.rows() != nb || delta.cols() != nb) throw DomainError("star_norm: operator and scale sizes differ");
  StarNormResult res;
  if (delta.cwiseAbs().maxCoeff() == 0.0) return res;
  const Eigen::MatrixXcd W = scale.half_weight().cast<Complex>();
  auto apply = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd { return W.transpose() * (delta * (W * x)); };
  auto apply_adj = [&](const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    return W.transpose() * (delta.adjoint() * (W * y));
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd x(nb);
  for (int i = 0; i < nb; ++i) x[i] = Complex(nd(rng), nd(rng));
  x.normalize();
  // The quotients increase towards the top eigenvalue of A*A with increments
  // shrinking geometrically at rate r; the remaining error is then about
  // d r / (1 - r). With a small spectral gap r is close to 1 and the increment
  // alone underestimates the error.
  double prev = 0.0, prev_step = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXcd y = apply_adj(apply(x));
    const double rq = x.dot(y).real();
    res.history.push_back(rq);
    res.iterations = it;
    const double norm = y.norm();
    if (norm == 0.0) return res;
    x = y / norm;
    if (it > 1) {
      const double step = std::abs(rq - prev);
      double remaining = step;
      if (it > 2 && prev_step > 0.0) {
        const double rate = step / prev_step;
        remaining = rate < 1.0 ? step * std::max(1.0, rate / (1.0 - rate)) : std::numeric_limits<double>::infinity();
      }
      // Increments at rounding level carry no rate information.
      const bool rounding = step <= 64 * std::numeric_limits<double>::epsilon() * std::abs(rq);
      if (rounding || (it > 2 && remaining <= options.tolerance * std::abs(rq))) {
        res.value = std::sqrt(std::max(0.0, rq));
        return res;
      }
      prev_step = step;
    }
    prev = rq;
  }
  std::ostringstream msg;
  msg << "power iteration did not converge in " << options.max_iterations << " iterations; last quotients:";
  for (std::size_t i = res.history.size() >= 5 ? res.history.size() - 5 : 0; i < res.history.size(); ++i)
    msg << ' ' << res.history[i];
  throw NumericalError("dnmap", msg.str());
}

double star_norm_dense(const Eigen::MatrixXcd& delta, const SobolevScale& scale) {
  const Eigen::MatrixXcd W = scale.half_weight().cast<Complex>();
  const Eigen::MatrixXcd T = W.transpose() * delta * W;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(T);
  return svd.singularValues()[0];
}

Complex volume_form(const GridDomain& grid, const std::vector<CMat3>& K, const std::vector<Complex>& q,
                    const std::vector<Complex>& u, const std::vector<Complex>& v) {
  Complex total = 0.0;
  for (int id = 0; id < grid.node_count(); ++id) {
    Eigen::Vector3cd gu, gv;
    for (int a = 0; a < 3; ++a) {
      gu[a] = nodal_partial(grid, u, id, a);
      gv[a] = nodal_partial(grid, v, id, a);
    }
    const Complex flux = (gv.transpose() * K[id] * gu)(0, 0);
    total += grid.volume_weight(id) * (flux + q[id] * u[id] * v[id]);
  }
  return total;
}

AlessandriniReport alessandrini_residual(const medium::OpticalMedium& medium1, const medium::OpticalMedium& medium2,
                                         const Eigen::VectorXcd& f, const Eigen::VectorXcd& g,
                                         const DNOptions& options) {
  const GridDomain& grid = medium1.grid;
  if (grid.fingerprint() != medium2.grid.fingerprint())
    throw DomainError("alessandrini_residual: media live on different grids");
  const auto& bnodes = grid.boundary_nodes();
  if (f.size() != static_cast<Eigen::Index>(bnodes.size()) || g.size() != f.size())
    throw DomainError("alessandrini_residual: boundary data size does not match the grid");

  solver::AssemblyOptions opt;
  opt.include_reaction = options.include_reaction;
  opt.tolerance = options.tolerance;
  opt.threads = options.threads;
  const auto op1 = solver::assemble(medium1, opt);
  const auto op2 = solver::assemble(medium2, opt);
  auto lift = [&](const Eigen::VectorXcd& data) {
    auto field = solver::ComplexField::zeros(grid);
    for (std::size_t p = 0; p < bnodes.size(); ++p) field.values[bnodes[p]] = data[static_cast<Eigen::Index>(p)];
    return field;
  };
  const auto zero = solver::ComplexField::zeros(grid);
  const auto u = solver::solve_dirichlet(op1, lift(f), zero);
  const auto v = solver::solve_dirichlet(op2, lift(g), zero);
  const int N = grid.node_count();
  const Eigen::Map<const Eigen::VectorXcd> uv(u.values.data(), N), vv(v.values.data(), N);

  // g^T Lambda_1 f = v^T A_1 u and g^T Lambda_2 f = u^T A_2 v by symmetry of Lambda_2.
  AlessandriniReport rep;
  const Eigen::VectorXcd A1u = op1.node_matrix() * uv;
  const Eigen::VectorXcd A2v = op2.node_matrix() * vv;
  rep.lhs = (vv.array() * A1u.array()).sum() - (uv.array() * A2v.array()).sum();

  const auto t1 = medium::split_real_imag(medium1);
  const auto t2 = medium::split_real_imag(medium2);
  std::vector<CMat3> dK(N);
  std::vector<Complex> dq(N, 0.0);
  for (int id = 0; id < N; ++id) {
    dK[id] = t1.K[id] - t2.K[id];
    if (options.include_reaction) dq[id] = Complex(t1.q_R[id] - t2.q_R[id], t1.q_I[id] - t2.q_I[id]);
  }
  rep.rhs = volume_form(grid, dK, dq, u.values, v.values);

  const double e1 = std::abs(uv.dot(A1u));
  const double e2 = std::abs(vv.dot(A2v));
  rep.scale = std::sqrt(e1 * e2);
  rep.residual = rep.scale > 0.0 ? std::abs(rep.lhs - rep.rhs) / rep.scale : std::abs(rep.lhs - rep.rhs);
  return rep;
}

}  // namespace otlab::dnmap
