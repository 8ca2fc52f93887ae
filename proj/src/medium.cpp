#include "otlab/medium.hpp"

#include <cmath>
#include <numbers>

namespace otlab::medium {

void AprioriData::validate() const {
  auto require = [](bool ok, const char* field, const std::string& what) {
    if (!ok) throw ValidationError(std::string("/apriori/") + field, what);
  };
  require(n >= 3, "n", "space dimension must be at least 3");
  require(p > n, "p", "Sobolev exponent must exceed the dimension");
  require(lambda > 0, "lambda", "must be positive");
  require(E > 0, "E", "must be positive");
  require(calE > 0, "calE", "must be positive");
  require(k > 0, "k", "wave number must be positive");
  require(r0 > 0, "r0", "must be positive");
  require(L > 0, "L", "must be positive");
  require(diam > 0, "diam", "must be positive");
  require(alpha > 0 && alpha < 1.0 - static_cast<double>(n) / p, "alpha",
          "Hoelder exponent must lie in (0, 1 - n/p)");
}

KRanges k_admissible_ranges(double lambda, double calE, int n) {
  if (n < 3) throw DomainError("k_admissible_ranges: dimension must be at least 3");
  if (!(lambda > 0) || !(calE > 0)) throw DomainError("k_admissible_ranges: lambda and calE must be positive");
  const double t = std::tan(std::numbers::pi / (2.0 * n));
  const double a = lambda * (1.0 + calE);
  const double b = (1.0 + 1.0 / calE) / lambda;
  const double root = std::sqrt(a * a + b * b * t * t);
  KRanges r;
  // (root - a) / t, rewritten without cancellation.
  r.k0 = b * b * t / (root + a);
  r.k0_tilde = (1.0 + std::sqrt(1.0 + t * t)) / t * a;
  return r;
}

Eigen::MatrixXcd inverse_diffusion_tensor(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k) {
  const auto n = B.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXcd M = (mu_a * I + (I - B) * mu_s).cast<Complex>();
  M.diagonal().array() -= Complex(0.0, k);
  return static_cast<double>(n) * M;
}

Eigen::MatrixXcd diffusion_tensor(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k) {
  if (B.rows() != B.cols() || B.rows() < 1) throw DomainError("diffusion_tensor: B must be square");
  const Eigen::MatrixXcd Kinv = inverse_diffusion_tensor(mu_a, mu_s, B, k);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Kinv);
  const double det = std::abs(lu.determinant());
  if (!(det > 0.0) || !std::isfinite(det))
    throw DomainError("diffusion_tensor: singular matrix at mu_a=" + std::to_string(mu_a) +
                      ", mu_s=" + std::to_string(mu_s) + ", k=" + std::to_string(k));
  const auto n = B.rows();
  Eigen::MatrixXcd K = lu.solve(Eigen::MatrixXcd::Identity(n, n));
  // Exact symmetry of the inverse of a symmetric matrix.
  return 0.5 * (K + K.transpose());
}

Eigen::MatrixXcd diffusion_tensor_sensitivity(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k) {
  const Eigen::MatrixXcd K = diffusion_tensor(mu_a, mu_s, B, k);
  return -static_cast<double>(B.rows()) * K * K;
}

TensorSplit split_point(double mu_a, double mu_s, const Eigen::MatrixXd& B, double k) {
  const auto n = B.rows();
  const double nd = static_cast<double>(n);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd S = mu_a * I + (I - B) * mu_s;
  const Eigen::MatrixXd P = S * S + k * k * I;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(P);
  const Eigen::MatrixXd Pinv = ldlt.solve(I);
  TensorSplit out;
  out.K_R = Pinv * S / nd;
  out.K_R = 0.5 * (out.K_R + out.K_R.transpose()).eval();
  out.K_I = (k / nd) * Pinv;
  out.K_I = 0.5 * (out.K_I + out.K_I.transpose()).eval();
  out.Kinv_R = nd * S;
  out.Kinv_I = -nd * k * I;
  out.q_R = mu_a;
  out.q_I = -k;
  return out;
}

Eigen::Matrix2d q_matrix(double mu_a, double k) {
  Eigen::Matrix2d q;
  q << mu_a, k, -k, mu_a;
  return q;
}

Eigen::MatrixXd block_C(const Eigen::MatrixXd& K_R, const Eigen::MatrixXd& K_I) {
  const auto n = K_R.rows();
  Eigen::MatrixXd C(2 * n, 2 * n);
  C.topLeftCorner(n, n) = K_R;
  C.topRightCorner(n, n) = -K_I;
  C.bottomLeftCorner(n, n) = K_I;
  C.bottomRightCorner(n, n) = K_R;
  return C;
}

std::uint64_t OpticalMedium::fingerprint() const {
  Fnv1a f;
  f.update("medium");
  f.update_value(grid.fingerprint());
  f.update(mu_a.data(), mu_a.size() * sizeof(double));
  f.update(mu_s.data(), mu_s.size() * sizeof(double));
  for (const auto& b : B) f.update(b.data(), 9 * sizeof(double));
  f.update_value(apriori.k);
  f.update_value(apriori.n);
  return f.digest();
}

void OpticalMedium::check_shapes() const {
  const auto N = static_cast<std::size_t>(grid.node_count());
  if (mu_a.size() != N || mu_s.size() != N || B.size() != N)
    throw DomainError("medium sample arrays do not match the grid (" + std::to_string(N) + " nodes)");
  if (apriori.n != 3) throw DomainError("sampled media live on the 3-D grid; apriori.n must be 3");
}

OpticalMedium sample_medium(const CoefficientFunctions& coefficients, const GridDomain& grid,
                            const AprioriData& apriori, bool b_interior_support) {
  OpticalMedium m;
  m.grid = grid;
  m.apriori = apriori;
  m.b_interior_support = b_interior_support;
  const int N = grid.node_count();
  m.mu_a.resize(N);
  m.mu_s.resize(N);
  m.B.assign(N, Mat3::Zero());
  for (int id = 0; id < N; ++id) {
    const Vec3 x = grid.point(id);
    m.mu_a[id] = coefficients.mu_a(x);
    m.mu_s[id] = coefficients.mu_s(x);
    if (coefficients.B) m.B[id] = coefficients.B(x);
  }
  return m;
}

ComplexTensorField split_real_imag(const OpticalMedium& medium) {
  medium.check_shapes();
  ComplexTensorField f;
  const int N = medium.grid.node_count();
  const double k = medium.apriori.k;
  f.k = k;
  f.K.resize(N);
  f.K_R.resize(N);
  f.K_I.resize(N);
  f.q_R.resize(N);
  f.q_I.resize(N);
  for (int id = 0; id < N; ++id) {
    const TensorSplit s = split_point(medium.mu_a[id], medium.mu_s[id], medium.B[id], k);
    f.K_R[id] = s.K_R;
    f.K_I[id] = s.K_I;
    f.K[id] = f.K_R[id].cast<Complex>() + Complex(0.0, 1.0) * f.K_I[id].cast<Complex>();
    f.q_R[id] = s.q_R;
    f.q_I[id] = s.q_I;
  }
  return f;
}

std::vector<BlockC> assemble_block_C(const ComplexTensorField& field) {
  std::vector<BlockC> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = block_C(field.K_R[i], field.K_I[i]);
  return out;
}

EllipticityReport verify_ellipticity(const ComplexTensorField& field, const AprioriData& apriori) {
  EllipticityReport r;
  const double n = apriori.n;
  const double lam = apriori.lambda, cE = apriori.calE, k = field.k;
  const double upper = lam * (1.0 + cE);
  const double lower = (1.0 + 1.0 / cE) / lam;
  r.bound_K_R = upper / n / (upper * upper + k * k);
  r.bound_K_I = k / n / (upper * upper + k * k);
  r.bound_norm_sq = (upper * upper + k * k) / (n * n) / std::pow(lower * lower + k * k, 2);
  r.C2 = std::max(1.0 / r.bound_K_R, std::sqrt(r.bound_norm_sq));

  const std::size_t N = field.size();
  r.min_eig_K_R.resize(N);
  r.min_eig_K_I.resize(N);
  r.norm_sq.resize(N);
  r.local_C2.resize(N);
  const double slack = 1e-12;
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::SelfAdjointEigenSolver<Mat3> eR(field.K_R[i], Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Mat3> eI(field.K_I[i], Eigen::EigenvaluesOnly);
    const double minR = eR.eigenvalues().minCoeff(), maxR = eR.eigenvalues().cwiseAbs().maxCoeff();
    const double minI = eI.eigenvalues().minCoeff(), maxI = eI.eigenvalues().cwiseAbs().maxCoeff();
    r.min_eig_K_R[i] = minR;
    r.min_eig_K_I[i] = minI;
    r.norm_sq[i] = maxR * maxR + maxI * maxI;
    r.local_C2[i] = std::max(1.0 / minR, maxR);
    const int p = static_cast<int>(i);
    if (minR < r.bound_K_R * (1.0 - slack)) r.violations.push_back({p, "K_R lower bound", minR, r.bound_K_R});
    if (k > 0 && minI < r.bound_K_I * (1.0 - slack)) r.violations.push_back({p, "K_I lower bound", minI, r.bound_K_I});
    if (!(minI > 0.0) && k > 0) r.violations.push_back({p, "K_I not positive definite", minI, 0.0});
    if (r.norm_sq[i] > r.bound_norm_sq * (1.0 + slack))
      r.violations.push_back({p, "boundedness", r.norm_sq[i], r.bound_norm_sq});
    if (field.q_R[i] < 1.0 / lam * (1.0 - slack)) r.violations.push_back({p, "q lower bound", field.q_R[i], 1.0 / lam});
    if (field.q_R[i] > lam * (1.0 + slack)) r.violations.push_back({p, "q upper bound", field.q_R[i], lam});
  }
  return r;
}

namespace {

double w1p_norm(const GridDomain& grid, const std::vector<double>& values, double p) {
  double acc = 0.0;
  for (int id = 0; id < grid.node_count(); ++id) {
    double g2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = nodal_partial(grid, values, id, a);
      g2 += d * d;
    }
    acc += grid.volume_weight(id) * (std::pow(std::abs(values[id]), p) + std::pow(std::sqrt(g2), p));
  }
  return std::pow(acc, 1.0 / p);
}

}  // namespace

AdmissibilityReport check_admissibility(const OpticalMedium& medium) {
  medium.check_shapes();
  AdmissibilityReport r;
  const auto& a = medium.apriori;
  const double lam = a.lambda, cE = a.calE;
  const double slack = 1e-12;
  const GridDomain& g = medium.grid;
  for (int id = 0; id < g.node_count(); ++id) {
    const double ma = medium.mu_a[id], ms = medium.mu_s[id];
    if (ma < (1 - slack) / lam || ma > lam * (1 + slack)) r.violations.push_back({id, "mu_a bounds", ma, ma * lam < 1 ? 1 / lam : lam});
    if (ms < (1 - slack) / lam || ms > lam * (1 + slack)) r.violations.push_back({id, "mu_s bounds", ms, ms * lam < 1 ? 1 / lam : lam});
    const Mat3& B = medium.B[id];
    const double asym = (B - B.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) r.violations.push_back({id, "B not symmetric", asym, 0.0});
    Eigen::SelfAdjointEigenSolver<Mat3> es(Mat3::Identity() - 0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    const double emin = es.eigenvalues().minCoeff(), emax = es.eigenvalues().maxCoeff();
    if (emin < (1 - slack) / cE) r.violations.push_back({id, "I-B lower bound", emin, 1 / cE});
    if (emax > cE * (1 + slack)) r.violations.push_back({id, "I-B upper bound", emax, cE});
    if (medium.b_interior_support && g.on_boundary(id) && B.cwiseAbs().maxCoeff() > 0.0)
      r.violations.push_back({id, "B support reaches the boundary", B.cwiseAbs().maxCoeff(), 0.0});
  }
  r.w1p_mu_a = w1p_norm(g, medium.mu_a, a.p);
  r.w1p_mu_s = w1p_norm(g, medium.mu_s, a.p);
  std::vector<double> bnorm(g.node_count());
  for (int id = 0; id < g.node_count(); ++id) bnorm[id] = medium.B[id].norm();
  // Frobenius norm of B as a scalar proxy for the matrix-valued W^{1,p} norm.
  r.w1p_B = w1p_norm(g, bnorm, a.p);
  if (r.w1p_mu_a > a.E) r.violations.push_back({-1, "W1p(mu_a) exceeds E", r.w1p_mu_a, a.E});
  if (r.w1p_mu_s > a.E) r.violations.push_back({-1, "W1p(mu_s) exceeds E", r.w1p_mu_s, a.E});
  if (r.w1p_B > a.E) r.violations.push_back({-1, "W1p(B) exceeds E", r.w1p_B, a.E});
  return r;
}

}  // namespace otlab::medium
