#include "otlab/singular.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "otlab/gegenbauer.hpp"

namespace otlab::singular {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd offset(const SingularityPoint& at, const Eigen::VectorXd& x) {
  if (x.size() != at.z.size()) throw DomainError("singular: point dimension does not match the pole");
  Eigen::VectorXd d = x - at.z;
  if (d.norm() == 0.0) throw DomainError("singular: evaluation at the pole x = z");
  return d;
}

struct QuadraticParts {
  Complex Q, r, A;
};

QuadraticParts parts(const SingularityPoint& at, const Eigen::VectorXd& d) {
  // Bilinear products: Eigen's dot() would conjugate its left operand.
  const Eigen::VectorXcd dc = d.cast<Complex>();
  return {(dc.array() * (at.K_inv * dc).array()).sum(), (at.last_row().array() * dc.array()).sum(), at.last_entry()};
}

void merge(BranchDiagnostics* out, const BranchDiagnostics& in) {
  if (!out) return;
  out->near_cut |= in.near_cut;
  out->worst_arg = std::max(out->worst_arg, in.worst_arg);
}

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
struct GaussRule {
  std::vector<double> x, w;
};

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    g.x[i] = -x;
    g.x[n - 1 - i] = x;
    g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(g)).first->second;
}

}  // namespace

void SingularityPoint::validate() const {
  const auto n = z.size();
  if (n < 3) throw DomainError("singular: dimension must be at least 3");
  if (K_inv.rows() != n || K_inv.cols() != n) throw DomainError("singular: K^{-1}(z) has the wrong shape");
  const double asym = (K_inv - K_inv.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, K_inv.cwiseAbs().maxCoeff())) throw DomainError("singular: K^{-1}(z) is not symmetric");
}

SingularityPoint SingularityPoint::from_tensor(Eigen::VectorXd z, Eigen::MatrixXcd K_inv) {
  SingularityPoint p{std::move(z), std::move(K_inv)};
  p.validate();
  return p;
}

SingularityPoint SingularityPoint::from_coefficients(Eigen::VectorXd z, double mu_a, double mu_s, const Eigen::MatrixXd& B,
                                                     double k) {
  return from_tensor(std::move(z), medium::inverse_diffusion_tensor(mu_a, mu_s, B, k));
}

SingularityPoint SingularityPoint::from_medium(const medium::OpticalMedium& medium, const Vec3& z) {
  medium.check_shapes();
  const GridDomain& g = medium.grid;
  if (!g.contains(z)) throw DomainError("singular: pole outside the medium grid");
  const double h = g.spacing();
  const int m = g.points_per_axis();
  std::array<int, 3> lo{};
  for (int a = 0; a < 3; ++a) lo[a] = std::clamp(static_cast<int>(std::floor(z[a] / h)), 0, m - 2);
  for (int c = 0; c < 8; ++c) {
    const int id = g.id(lo[0] + (c & 1), lo[1] + ((c >> 1) & 1), lo[2] + ((c >> 2) & 1));
    if (medium.B[id].cwiseAbs().maxCoeff() > 0.0) throw DomainError("singular: B does not vanish near the pole");
  }
  const double ma = g.interpolate(medium.mu_a, z), ms = g.interpolate(medium.mu_s, z);
  return from_coefficients(z, ma, ms, Eigen::MatrixXd::Zero(3, 3), medium.apriori.k);
}

Complex principal_branch_power(Complex w, double exponent, BranchDiagnostics* diag) {
  if (w == Complex(0.0)) throw DomainError("principal_branch_power: w = 0");
  const double arg = std::arg(w);
  if (diag) {
    diag->worst_arg = std::max(diag->worst_arg, std::abs(arg));
    if (std::abs(arg) > kPi - 1e-9) diag->near_cut = true;
  }
  return std::exp(exponent * Complex(std::log(std::abs(w)), arg));
}

Complex fundamental_solution(const SingularityPoint& at, const Eigen::VectorXd& x, BranchDiagnostics* diag) {
  const Eigen::VectorXd d = offset(at, x);
  const int n = at.dimension();
  return principal_branch_power(parts(at, d).Q, 0.5 * (2 - n), diag);
}

Complex leading_term(const SingularSolutionSpec& spec, const Eigen::VectorXd& x, BranchDiagnostics* diag) {
  if (spec.m < 0) throw DomainError("leading_term: m must be non-negative");
  const SingularityPoint& at = spec.at;
  const Eigen::VectorXd d = offset(at, x);
  const int n = at.dimension(), m = spec.m;
  const auto [Q, r, A] = parts(at, d);
  BranchDiagnostics local;
  const Complex power = principal_branch_power(Q, 0.5 * (2 - n - m), &local);
  const Complex zeta = r / principal_branch_power(A * Q, 0.5, &local);
  const Complex am = m == 0 ? Complex(1.0) : principal_branch_power(A, 0.5 * m, &local);
  merge(diag, local);
  return power * std::tgamma(m + 1.0) * am * gegenbauer::eval(gegenbauer::GegenbauerSpec::for_dimension(m, n), zeta);
}

Eigen::VectorXcd leading_term_gradient(const SingularSolutionSpec& spec, const Eigen::VectorXd& x) {
  const SingularityPoint& at = spec.at;
  const Eigen::VectorXd d = offset(at, x);
  const int n = at.dimension(), m = spec.m;
  const auto [Q, r, A] = parts(at, d);
  const double beta = 0.5 * (2 - n - m);
  const Complex Qb = principal_branch_power(Q, beta);
  const Complex S = principal_branch_power(A * Q, 0.5);
  const Complex zeta = r / S;
  const Complex am = m == 0 ? Complex(1.0) : principal_branch_power(A, 0.5 * m);
  const auto gs = gegenbauer::GegenbauerSpec::for_dimension(m, n);
  const Eigen::VectorXcd gradQ = 2.0 * (at.K_inv * d.cast<Complex>());
  const Eigen::VectorXcd gradZeta = at.last_row() / S - zeta / (2.0 * Q) * gradQ;
  const double mf = std::tgamma(m + 1.0);
  return mf * am * (beta * Qb / Q * gegenbauer::eval(gs, zeta) * gradQ + Qb * gegenbauer::derivative(gs, zeta) * gradZeta);
}

Complex leading_term_isotropic(const SingularSolutionSpec& spec, const Eigen::VectorXd& x) {
  const SingularityPoint& at = spec.at;
  const Eigen::VectorXd d = offset(at, x);
  const int n = at.dimension(), m = spec.m;
  const Complex nc = at.last_entry();
  const Eigen::MatrixXcd iso = nc * Eigen::MatrixXcd::Identity(n, n);
  if ((at.K_inv - iso).cwiseAbs().maxCoeff() > 1e-12 * std::abs(nc))
    throw DomainError("leading_term_isotropic: K^{-1}(z) is not a multiple of the identity");
  const Complex c = nc / static_cast<double>(n);
  const double rho = d.norm();
  return std::tgamma(m + 1.0) * principal_branch_power(c, 0.5 * (2 - n)) * std::pow(rho, 2.0 - n - m) *
         gegenbauer::eval(gegenbauer::GegenbauerSpec::for_dimension(m, n), Complex(d[n - 1] / rho, 0.0));
}

double isotropic_constant_ratio(int n) { return std::pow(static_cast<double>(n), 0.5 * (2 - n)); }

Complex um_via_induction(const SingularSolutionSpec& spec, const Eigen::VectorXd& x) {
  if (spec.m < 0 || spec.m > 8) throw DomainError("um_via_induction: supported for 0 <= m <= 8");
  const SingularityPoint& at = spec.at;
  const Eigen::VectorXd d = offset(at, x);
  const int n = at.dimension(), m = spec.m;
  const auto [Q, r, A] = parts(at, d);
  const double a0 = 0.5 * (2 - n);
  Complex sum = 0.0;
  for (int j = 0; j <= m / 2; ++j) {
    double prod = 1.0;
    for (int k = 0; k <= m - j - 1; ++k) prod *= a0 - k;
    const double comb = std::tgamma(m + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(m - 2.0 * j + 1.0));
    sum += comb * prod * std::pow(-2.0 * r, m - 2 * j) * std::pow(A, j) * principal_branch_power(Q, a0 - m + j);
  }
  return sum;
}

double laplace_constant(int n) {
  if (n < 3) throw DomainError("laplace_constant: n must be at least 3");
  const double area = 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
  return 1.0 / ((n - 2) * area);
}

double truncated_laplace_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int nu) {
  if (x.size() != y.size()) throw DomainError("truncated_laplace_kernel: dimension mismatch");
  const int n = static_cast<int>(x.size());
  const double dist = (x - y).norm();
  if (dist == 0.0) throw DomainError("truncated_laplace_kernel: x = y");
  const double Cn = laplace_constant(n);
  double out = -Cn * std::pow(dist, 2.0 - n);
  if (nu < 0) return out;
  const double rx = x.norm(), ry = y.norm();
  if (rx == 0.0) throw DomainError("truncated_laplace_kernel: x = 0 with nu >= 0");
  const double t = ry > 0.0 ? std::clamp(x.dot(y) / (rx * ry), -1.0, 1.0) : 0.0;
  for (int j = 0; j <= nu; ++j) {
    const double radial = std::pow(ry, j) / std::pow(rx, j + n - 2);
    if (radial == 0.0) continue;
    out += Cn * radial * gegenbauer::eval(gegenbauer::GegenbauerSpec::for_dimension(j, n), t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncated Newtonian potential, n = 3.

namespace {

struct Frame {
  Vec3 e1, e2, e3;
};

Frame pole_frame(const Vec3& x) {
  Frame f;
  f.e3 = x.normalized();
  const Vec3 trial = std::abs(f.e3[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  f.e1 = (trial - trial.dot(f.e3) * f.e3).normalized();
  f.e2 = f.e3.cross(f.e1);
  return f;
}

struct Rules {
  int radial, polar, azimuthal;
};

Rules rules_for(int level) { return {8 + 4 * level, 12 + 6 * level, 16 + 8 * level}; }

class PotentialIntegrator {
 public:
  PotentialIntegrator(const std::function<Complex(const Vec3&)>& f, int nu, const Vec3& x, Rules rules)
      : f_(f), nu_(nu), r_(x.norm()), frame_(pole_frame(x)), rules_(rules), cn_(laplace_constant(3)) {}

  long evaluations() const noexcept { return evals_; }

  // int_a^b rho^2 A(rho) d rho, with A the angular integral of Gamma_nu f.
  Complex shell(double a, double b) {
    const GaussRule& g = gauss_legendre(rules_.radial);
    Complex s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double rho = 0.5 * (a + b) + 0.5 * (b - a) * g.x[i];
      s += 0.5 * (b - a) * g.w[i] * rho * rho * angular(rho);
    }
    return s;
  }

 private:
  Vec3 point(double rho, double ct, double phi) const {
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    return rho * (st * std::cos(phi) * frame_.e1 + st * std::sin(phi) * frame_.e2 + ct * frame_.e3);
  }

  Complex eval_f(const Vec3& y) {
    ++evals_;
    return f_(y);
  }

  Complex angular(double rho) { return rho <= 0.5 * r_ ? angular_tail(rho) : angular_split(rho); }

  // |y| <= |x|/2: Gamma_nu = -C sum_{j > nu} rho^j / r^{j+1} P_j(cos theta).
  Complex angular_tail(double rho) {
    const GaussRule& g = gauss_legendre(rules_.polar);
    const int np = rules_.azimuthal;
    const double ratio = rho / r_;
    int J = nu_ + 1;
    while (std::pow(ratio, J) > 1e-18 && J < 400) ++J;
    Complex s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double ct = g.x[i];
      double pm1 = 0.0, p = 1.0, rp = 1.0, kern = nu_ < 0 ? 1.0 : 0.0;
      for (int j = 1; j <= J; ++j) {
        const double next = ((2.0 * j - 1.0) * ct * p - (j - 1.0) * pm1) / j;
        pm1 = p;
        p = next;
        rp *= ratio;
        if (j > nu_) kern += rp * p;
      }
      kern *= -cn_ / r_;
      Complex ring = 0.0;
      for (int k = 0; k < np; ++k) ring += eval_f(point(rho, ct, 2.0 * kPi * k / np));
      s += g.w[i] * kern * ring * (2.0 * kPi / np);
    }
    return s;
  }

  // |y| > |x|/2: Gamma part in the variable w = |x - y|, polynomial part in cos theta.
  Complex angular_split(double rho) {
    const GaussRule& g = gauss_legendre(rules_.polar);
    const int np = rules_.azimuthal;
    const double dphi = 2.0 * kPi / np;
    Complex gamma_part = 0.0;
    const double wlo = std::abs(r_ - rho), whi = r_ + rho;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double w = 0.5 * (wlo + whi) + 0.5 * (whi - wlo) * g.x[i];
      const double ct = std::clamp((r_ * r_ + rho * rho - w * w) / (2.0 * r_ * rho), -1.0, 1.0);
      Complex ring = 0.0;
      for (int k = 0; k < np; ++k) ring += eval_f(point(rho, ct, k * dphi));
      gamma_part += 0.5 * (whi - wlo) * g.w[i] * ring * dphi;
    }
    gamma_part *= -cn_ / (r_ * rho);
    if (nu_ < 0) return gamma_part;
    Complex poly = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double ct = g.x[i];
      double pm1 = 0.0, p = 1.0, rp = 1.0 / r_, kern = rp;
      for (int j = 1; j <= nu_; ++j) {
        const double next = ((2.0 * j - 1.0) * ct * p - (j - 1.0) * pm1) / j;
        pm1 = p;
        p = next;
        rp *= rho / r_;
        kern += rp * p;
      }
      Complex ring = 0.0;
      for (int k = 0; k < np; ++k) ring += eval_f(point(rho, ct, k * dphi));
      poly += g.w[i] * kern * ring * dphi;
    }
    return gamma_part + cn_ * poly;
  }

  const std::function<Complex(const Vec3&)>& f_;
  int nu_;
  double r_;
  Frame frame_;
  Rules rules_;
  double cn_;
  long evals_ = 0;
};

struct LevelResult {
  Complex value;
  double tail_bound;
  long evaluations;
};

LevelResult integrate_level(const std::function<Complex(const Vec3&)>& f, int nu, const Vec3& x,
                            const PotentialOptions& opt, int level) {
  PotentialIntegrator integ(f, nu, x, rules_for(level));
  const double r = x.norm(), R = opt.radius;
  Complex outer = 0.0;
  // Outward from |x|/2: split at |x|, then dyadic up to R.
  std::vector<double> edges{0.5 * r, r};
  for (double e = 2.0 * r; e < R; e *= 2.0) edges.push_back(e);
  edges.push_back(R);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) outer += integ.shell(edges[i], edges[i + 1]);
  // Inward dyadic shells until the geometric tail is negligible.
  Complex inner = 0.0;
  double prev = 0.0, tail = 0.0;
  int quiet = 0;
  double b = 0.5 * r;
  for (int k = 0;; ++k) {
    if (k >= opt.max_shells)
      throw NumericalError("singular", "potential quadrature: shell budget exhausted, tail estimate " + std::to_string(tail));
    const Complex c = integ.shell(0.5 * b, b);
    inner += c;
    b *= 0.5;
    const double mag = std::abs(c), total = std::abs(outer + inner);
    if (k > 0 && prev > 0.0 && mag < prev) {
      const double q = mag / prev;
      tail = mag * q / (1.0 - q);
    } else {
      tail = k == 0 ? mag : prev + mag;  // not yet decaying
    }
    prev = mag;
    if (mag == 0.0 && total == 0.0) {
      if (++quiet >= 3) {
        tail = 0.0;
        break;
      }
      continue;
    }
    if (k >= 3 && tail <= 0.05 * opt.tolerance * total) break;
  }
  return {outer + inner, tail, integ.evaluations()};
}

}  // namespace

PotentialValue newtonian_potential_truncated(const std::function<Complex(const Vec3&)>& f, int nu, const Vec3& x,
                                             const PotentialOptions& options) {
  const double r = x.norm();
  if (!(r > 0.0)) throw DomainError("newtonian_potential_truncated: x must differ from the origin");
  if (!(r < options.radius)) throw DomainError("newtonian_potential_truncated: x must lie inside B_R");
  if (nu < -1) throw DomainError("newtonian_potential_truncated: nu must be at least -1");
  PotentialValue out;
  LevelResult coarse = integrate_level(f, nu, x, options, 0);
  out.evaluations = coarse.evaluations;
  for (int level = 1; level <= options.max_level; ++level) {
    const LevelResult fine = integrate_level(f, nu, x, options, level);
    out.evaluations += fine.evaluations;
    const double diff = std::abs(fine.value - coarse.value);
    out.value = fine.value;
    out.level = level;
    out.error_estimate = diff + fine.tail_bound;
    if (out.error_estimate <= options.tolerance * std::abs(fine.value) || fine.value == Complex(0.0)) return out;
    coarse = fine;
  }
  throw NumericalError("singular", "potential quadrature did not reach tolerance; achieved relative error " +
                                       std::to_string(out.error_estimate / std::abs(out.value)));
}

double potential_laplacian_residual(const std::function<Complex(const Vec3&)>& f, int nu, const Vec3& x,
                                    const PotentialOptions& options, double delta) {
  if (delta <= 0.0) delta = x.norm() / 50.0;
  if (!(x.norm() > 4.0 * delta)) throw DomainError("potential_laplacian_residual: stencil reaches the origin");
  auto u = [&](const Vec3& y) { return newtonian_potential_truncated(f, nu, y, options).value; };
  const Complex u0 = u(x);
  auto laplacian = [&](double d, const std::array<std::array<Complex, 4>, 3>& v) {
    Complex s = 0.0;
    for (int a = 0; a < 3; ++a) s += (-v[a][0] + 16.0 * v[a][1] - 30.0 * u0 + 16.0 * v[a][2] - v[a][3]) / (12.0 * d * d);
    return s;
  };
  std::array<std::array<Complex, 4>, 3> near{}, far{};
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = delta;
    near[a] = {u(x + 2 * e), u(x + e), u(x - e), u(x - 2 * e)};
    far[a] = {u(x + 4 * e), near[a][0], near[a][3], u(x - 4 * e)};
  }
  const Complex lap = (16.0 * laplacian(delta, near) - laplacian(2 * delta, far)) / 15.0;
  const Complex fx = f(x);
  if (fx == Complex(0.0)) return std::abs(lap);
  return std::abs(lap - fx) / std::abs(fx);
}

double gradient_lower_bracket(int m, int n, double t) {
  if (std::abs(t) > 1.0) throw DomainError("gradient_lower_bracket: |t| must not exceed 1");
  const auto spec = gegenbauer::GegenbauerSpec::for_dimension(m, n);
  const double c = gegenbauer::eval(spec, t);
  const double dc = gegenbauer::derivative(spec, Complex(t, 0.0)).real();
  const double a = 2.0 - n - m;
  return a * a * c * c + dc * dc * (1.0 - t * t);
}

double gradient_bracket_min(int m, int n, int points) {
  if (points < 2) throw DomainError("gradient_bracket_min: need at least two points");
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) best = std::min(best, gradient_lower_bracket(m, n, -1.0 + 2.0 * i / (points - 1)));
  return best;
}

CorrectionReport correction_w(const medium::OpticalMedium& medium, const SingularSolutionSpec& spec,
                              const Annulus& annulus, const solver::AssemblyOptions& options) {
  const GridDomain& g = medium.grid;
  spec.at.validate();
  if (spec.at.dimension() != 3) throw DomainError("correction_w: the solver is three-dimensional");
  const Vec3 z = spec.at.z;
  const double h = g.spacing();
  if (!(annulus.r_min >= 2.0 * h - 1e-12)) throw DomainError("correction_w: inner radius must be at least 2h");
  if (!(annulus.R > 2.0 * annulus.r_min)) throw DomainError("correction_w: outer radius must exceed twice the inner radius");
  if (!g.contains(z) || g.boundary_distance(z) < annulus.R - 1e-12)
    throw DomainError("correction_w: annulus does not fit inside the cube");

  const int N = g.node_count();
  std::vector<double> dist(N);
  for (int id = 0; id < N; ++id) dist[id] = (g.point(id) - z).norm();

  solver::AssemblyOptions opt = options;
  opt.unknown_mask.assign(N, 0);
  for (int id = 0; id < N; ++id) opt.unknown_mask[id] = dist[id] > annulus.r_min && dist[id] < annulus.R;
  const solver::DiscreteOperator op = solver::assemble(medium, opt);

  solver::ComplexField um = solver::ComplexField::zeros(g);
  for (int id = 0; id < N; ++id)
    if (dist[id] > 0.0) um.values[id] = leading_term(spec, g.point(id));
  solver::ComplexField rhs = solver::apply_operator(op, um);
  for (auto& v : rhs.values) v = -v;

  CorrectionReport rep;
  rep.w = solver::solve_dirichlet(op, solver::ComplexField::zeros(g), rhs);

  std::vector<double> edges{annulus.r_min};
  while (edges.back() * std::sqrt(2.0) < annulus.R * (1 - 1e-9)) edges.push_back(edges.back() * std::sqrt(2.0));
  edges.push_back(annulus.R);
  const std::size_t shells = edges.size() - 1;
  rep.sup_w.assign(shells, 0.0);
  rep.sup_rDw.assign(shells, 0.0);
  rep.sup_um.assign(shells, 0.0);
  for (std::size_t s = 0; s < shells; ++s) rep.shell_radius.push_back(std::sqrt(edges[s] * edges[s + 1]));
  for (int id : op.unknowns()) {
    const double d = dist[id];
    const auto it = std::upper_bound(edges.begin(), edges.end(), d);
    if (it == edges.begin() || it == edges.end()) continue;
    const std::size_t s = static_cast<std::size_t>(it - edges.begin()) - 1;
    double grad2 = 0.0;
    for (int a = 0; a < 3; ++a) grad2 += std::norm(nodal_partial(g, rep.w.values, id, a));
    rep.sup_w[s] = std::max(rep.sup_w[s], std::abs(rep.w.values[id]));
    rep.sup_rDw[s] = std::max(rep.sup_rDw[s], d * std::sqrt(grad2));
    rep.sup_um[s] = std::max(rep.sup_um[s], std::abs(um.values[id]));
    rep.sup_w_total = std::max(rep.sup_w_total, std::abs(rep.w.values[id]));
    rep.sup_um_total = std::max(rep.sup_um_total, std::abs(um.values[id]));
  }
  rep.fit_w = loglog_fit(rep.shell_radius, rep.sup_w);
  rep.fit_rDw = loglog_fit(rep.shell_radius, rep.sup_rDw);
  const double alpha = medium.apriori.alpha;
  rep.exponent_statement = 2.0 - 3.0 + alpha;
  rep.exponent_proof = 2.0 - 3.0 - spec.m + alpha;
  rep.fit_rejected = !(rep.fit_w.rms_residual <= rep.max_fit_residual);
  return rep;
}

}  // namespace otlab::singular
