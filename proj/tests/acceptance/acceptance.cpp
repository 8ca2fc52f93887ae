// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is 0 only when every selected
// criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "../support/oracles.hpp"
#include "otlab/cli.hpp"
#include "otlab/dnmap.hpp"
#include "otlab/fit.hpp"
#include "otlab/gegenbauer.hpp"
#include "otlab/medium.hpp"
#include "otlab/singular.hpp"
#include "otlab/solver.hpp"
#include "otlab/stability.hpp"

using namespace otlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

// ---- shared fixtures ------------------------------------------------------

medium::CoefficientFunctions background() {
  medium::CoefficientFunctions c;
  c.mu_a = [](const Vec3& x) { return 1.0 + 0.1 * std::cos(x[0] + 2 * x[1]); };
  c.mu_s = [](const Vec3& x) { return 1.2 + 0.1 * x[2]; };
  c.B = [](const Vec3& x) {
    Mat3 B = Mat3::Zero();
    B(0, 2) = B(2, 0) = 0.05 * std::sin(x[1]);
    return B;
  };
  return c;
}

medium::CoefficientFunctions perturbed(double eps) {
  auto c = background();
  auto base = c.mu_a;
  c.mu_a = [base, eps](const Vec3& x) { return base(x) + eps * std::exp(-8.0 * (x - Vec3(0.4, 0.6, 0.5)).squaredNorm()); };
  return c;
}

medium::OpticalMedium make(const medium::CoefficientFunctions& c, int points, double k = 0.2) {
  medium::AprioriData ap;
  ap.k = k;
  return medium::sample_medium(c, GridDomain(1.0, points), ap);
}

singular::SingularityPoint random_admissible_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> mu(0.8, 1.25), kk(0.05, 3.0), u(-1.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n * n; ++i) A.data()[i] = u(rng);
  Eigen::MatrixXd B = 0.5 * (A + A.transpose());
  B *= 0.15 / B.norm();
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = u(rng);
  return singular::SingularityPoint::from_coefficients(z, mu(rng), mu(rng), B, kk(rng));
}

stability::PerturbationSpec spec_from_default(int profile_order, double alpha) {
  const auto cfg = cli::parse_config(cli::default_config());
  stability::PerturbationSpec spec;
  spec.base = cfg.coefficients();
  spec.apriori = cfg.apriori;
  spec.grid_points = 17;
  spec.profile_order = profile_order;
  spec.alpha = alpha;
  return spec;
}

// ---- criteria ---------------------------------------------------------------

Outcome k_ranges() {
  const auto r = medium::k_admissible_ranges(1, 1, 3);
  const long double s3 = std::sqrt(3.0L);
  const double e0 = std::abs(r.k0 - static_cast<double>(4 - 2 * s3));
  const double e1 = std::abs(r.k0_tilde - static_cast<double>(4 + 2 * s3));
  return {e0 <= 1e-6 && e1 <= 1e-6,
          "k0=" + fmt(r.k0) + " k0_tilde=" + fmt(r.k0_tilde) + " errors " + fmt(e0) + ", " + fmt(e1)};
}

Outcome gegenbauer_suite() {
  using namespace gegenbauer;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double ode = 0.0, endpoint = 0.0, deriv = 0.0;
  for (int n = 3; n <= 6; ++n)
    for (int m = 0; m <= 8; ++m) {
      const auto spec = GegenbauerSpec::for_dimension(m, n);
      for (int t = 0; t < 100; ++t) {
        const auto r = ode_residual(spec, u(rng));
        ode = std::max(ode, std::abs(r.standard) / r.scale);
        const Complex z(u(rng), u(rng));
        const double d = 1e-6;
        const Complex fd = (eval(spec, z + d) - eval(spec, z - d)) / (2 * d);
        const Complex an = derivative(spec, z);
        deriv = std::max(deriv, std::abs(fd - an) / std::max(1.0, std::abs(an)));
      }
      // C_m^{(n-2)/2}(1) = binom(m + n - 3, m), C_m(-1) = (-1)^m C_m(1)
      const double binom = std::round(std::exp(std::lgamma(m + n - 2.0) - std::lgamma(m + 1.0) - std::lgamma(n - 2.0)));
      const auto e = endpoint_values(spec);
      endpoint = std::max({endpoint, std::abs(e.at_plus_one - binom) / binom,
                           std::abs(e.at_minus_one - (m % 2 ? -binom : binom)) / binom,
                           std::abs(eval(spec, 1.0) - binom) / binom});
    }
  return {ode <= 1e-9 && endpoint <= 1e-12 && deriv <= 1e-6,
          "ode " + fmt(ode) + ", endpoint " + fmt(endpoint) + ", derivative vs FD " + fmt(deriv)};
}

Outcome singular_oracle() {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  double gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 3;
    const auto at = random_admissible_point(rng, n);
    for (int m = 0; m <= 5; ++m) {
      Eigen::VectorXd x = at.z;
      for (int i = 0; i < n; ++i) x[i] += g(rng);
      const Complex a = singular::leading_term({m, at}, x), b = singular::um_via_induction({m, at}, x);
      gap = std::max(gap, std::abs(a - b) / std::abs(b));
    }
  }
  const GridDomain coarse(1.0, 9);
  const Vec3 z(0.5, 0.45, -0.3);
  double worst_order = 1e9;
  std::string orders;
  for (int m = 0; m <= 4; ++m) {
    std::vector<double> hs, res;
    for (int pts : {17, 33, 65}) {
      hs.push_back(1.0 / (pts - 1));
      res.push_back(testing::leading_term_residual(pts, m, z, coarse));
    }
    const double order = loglog_fit(hs, res).slope;
    worst_order = std::min(worst_order, order);
    orders += (m ? "/" : "") + fmt(order);
  }
  return {gap <= 1e-9 && worst_order >= 1.8, "induction gap " + fmt(gap) + ", residual orders m=0..4 " + orders};
}

Outcome gradient_bracket() {
  double worst = 1e300;
  for (int n = 3; n <= 5; ++n)
    for (int m = 0; m <= 8; ++m) worst = std::min(worst, singular::gradient_bracket_min(m, n));
  return {worst > 0.0, "min bracket " + fmt(worst)};
}

Outcome potential_decay() {
  singular::PotentialOptions opt;
  opt.tolerance = 1e-10;
  bool ok = true;
  std::string detail;
  for (auto [s, nu] : {std::pair{3.5, 0}, std::pair{4.6, 1}}) {
    const auto f = [s = s](const Vec3& y) { return Complex(std::pow(y.norm(), -s - 1.0) * y[2], 0.0); };
    std::vector<double> radii, mags;
    for (int k = 7; k <= 12; ++k) {
      const Vec3 x = std::pow(2.0, -k) * Vec3(0.3, -0.5, 0.8).normalized();
      radii.push_back(x.norm());
      mags.push_back(std::abs(singular::newtonian_potential_truncated(f, nu, x, opt).value));
    }
    const double slope = loglog_fit(radii, mags).slope;
    ok = ok && std::abs(slope - (2 - s)) <= 0.1;
    detail += (detail.empty() ? "" : "; ") + std::string("s=") + fmt(s) + " exponent " + fmt(slope) + " (expected " + fmt(2 - s) + ")";
  }
  return {ok, detail};
}

Complex mms_u(const Vec3& x) { return std::exp(x[0] + x[1]) * Complex(1.0, std::cos(x[2])); }
std::array<Complex, 3> mms_grad(const Vec3& x) {
  const double e = std::exp(x[0] + x[1]);
  const Complex v = e * Complex(1.0, std::cos(x[2]));
  return {v, v, Complex(0.0, -e * std::sin(x[2]))};
}

Outcome solver_convergence() {
  medium::CoefficientFunctions c;
  c.mu_a = [](const Vec3& x) { return 1.0 + 0.2 * std::sin(2 * x[0]) * std::cos(x[1] + x[2]); };
  c.mu_s = [](const Vec3& x) { return 1.0 + 0.1 * x[2] * x[2]; };
  c.B = [](const Vec3& x) {
    Mat3 B = Mat3::Zero();
    B(0, 1) = B(1, 0) = 0.08 * std::sin(x[0] + x[2]);
    B(1, 2) = B(2, 1) = 0.05 * x[0];
    B(0, 0) = 0.1 * x[1];
    return B;
  };
  const double k = 0.2;
  std::vector<double> hs, errs;
  for (int pts : {17, 25, 33}) {
    const auto med = make(c, pts, k);
    const GridDomain& g = med.grid;
    const auto op = solver::assemble(med);
    const auto gdata = solver::ComplexField::sample(g, mms_u);
    const auto f = solver::ComplexField::sample(
        g, [&](const Vec3& x) { return testing::apply_continuous(c, k, mms_u, mms_grad, x); });
    const auto u = solver::solve_dirichlet(op, gdata, f);
    double err = 0.0;
    for (int id = 0; id < g.node_count(); ++id) err = std::max(err, std::abs(u.values[id] - gdata.values[id]));
    hs.push_back(g.spacing());
    errs.push_back(err);
  }
  const double order = loglog_fit(hs, errs).slope;
  return {std::abs(order - 2.0) <= 0.2,
          "order " + fmt(order) + " (errors " + fmt(errs[0]) + ", " + fmt(errs[1]) + ", " + fmt(errs[2]) + ")"};
}

Outcome alessandrini() {
  auto fdata = [](const Vec3& x) { return Complex(1.0 + x[0] * x[1], 0.5 * std::sin(x[2])); };
  auto gdata = [](const Vec3& x) { return Complex(std::cos(x[0] - x[2]), x[1]); };
  std::vector<double> hs, res;
  for (int pts : {17, 21, 25}) {
    const auto m1 = make(background(), pts), m2 = make(perturbed(0.5), pts);
    const auto rep = dnmap::alessandrini_residual(m1, m2, dnmap::boundary_trace(m1.grid, fdata),
                                                  dnmap::boundary_trace(m1.grid, gdata));
    hs.push_back(m1.grid.spacing());
    res.push_back(rep.residual);
  }
  const double order = loglog_fit(hs, res).slope;
  const bool decreasing = res[1] < res[0] && res[2] < res[1];

  const auto med = make(background(), 9);
  const double tol = dnmap::DNOptions{}.tolerance;
  const auto same = dnmap::alessandrini_residual(med, med, dnmap::boundary_trace(med.grid, fdata),
                                                 dnmap::boundary_trace(med.grid, gdata));
  return {decreasing && order >= 1.0 && same.residual <= 10 * tol,
          "residuals " + fmt(res[0]) + ", " + fmt(res[1]) + ", " + fmt(res[2]) + " order " + fmt(order) +
              "; coinciding media " + fmt(same.residual)};
}

Outcome dn_structure() {
  const auto m1 = make(background(), 9), m2 = make(perturbed(0.3), 9);
  const dnmap::DNOptions opt;
  const auto d1 = dnmap::assemble_dn(m1, opt), d2 = dnmap::assemble_dn(m2, opt);
  const double sym = std::max(d1.symmetry_residual(), d2.symmetry_residual());
  const dnmap::SobolevScale scale(m1.grid);
  const Eigen::MatrixXcd delta = dnmap::dn_difference(d1, d2);
  const auto power = dnmap::star_norm(delta, scale);
  const double dense = dnmap::star_norm_dense(delta, scale);
  const double gap = std::abs(power.value - dense) / dense;
  return {sym <= 10 * opt.tolerance && gap <= 1e-6,
          "symmetry " + fmt(sym) + ", star norm " + fmt(power.value) + " vs SVD " + fmt(dense) + " (relative " + fmt(gap) + ")"};
}

Outcome lipschitz_sweep() {
  const auto rep = stability::run_stability_experiment(spec_from_default(0, 0.25), 0, {});
  double rmin = 1e300, rmax = 0.0;
  for (const auto& r : rep.rows) {
    rmin = std::min(rmin, r.boundary_sup / r.star);
    rmax = std::max(rmax, r.boundary_sup / r.star);
  }
  const auto& fit = rep.fits.front();
  const bool ok = rep.rows.size() == 6 && std::isfinite(rep.max_ratio) && rmax <= 2 * rmin &&
                  std::abs(fit.fit.slope - 1.0) <= 0.15;
  return {ok, std::to_string(rep.rows.size()) + " points, slope " + fmt(fit.fit.slope) + ", ratio in [" + fmt(rmin) + ", " +
                  fmt(rmax) + "]"};
}

Outcome holder_sweep() {
  const auto rep = stability::run_stability_experiment(spec_from_default(1, 0.5), 1, {});
  for (const auto& f : rep.fits)
    if (f.quantity == "normal_derivative" && f.order == 1) {
      const bool ok = rep.rows.size() >= 2 && std::abs(f.predicted - 1.0 / 3.0) < 1e-12 && f.violations == 0 &&
                      std::isfinite(f.C) && f.C > 0;
      return {ok, std::to_string(rep.rows.size()) + " points, delta_1 " + fmt(f.predicted) + ", C " + fmt(f.C) +
                      ", violations " + std::to_string(f.violations) + ", observed slope " + fmt(f.fit.slope)};
    }
  return {false, "no first normal derivative fit in the report"};
}

Outcome remainder_decay() {
  const GridDomain g(1.0, 17);
  const double h = g.spacing(), alpha = 0.25;
  const auto med = testing::unit_medium(g, 0.2);
  const Vec3 z = Vec3::Constant(0.5 + 0.5 * h);
  bool ok = true;
  std::string detail;
  for (int m : {0, 1}) {
    const singular::SingularSolutionSpec spec{m, singular::SingularityPoint::from_medium(med, z)};
    const auto rep = singular::correction_w(med, spec, {2 * h, 0.44});
    const double target = 2 - 3 - m + alpha;
    ok = ok && !rep.fit_rejected && rep.fit_w.slope >= target - 0.15;
    detail += (detail.empty() ? "" : "; ") + std::string("m=") + std::to_string(m) + " slope " + fmt(rep.fit_w.slope) +
              " (statement " + fmt(rep.exponent_statement) + ", proof " + fmt(rep.exponent_proof) + ")";
  }
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "otlab-acceptance-determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto doc = cli::default_config();
  doc["grid"]["points"] = 13;
  doc["singular"]["r_min"] = 0.1875;
  doc["stability"]["eps_count"] = 3;
  std::ofstream(dir / "config.json") << doc.dump(2);
  const std::vector<std::vector<std::string>> commands = {
      {"check"}, {"solve", "--dump-slice", "z=0.5"}, {"singular", "--correction"}, {"stability"}, {"gegenbauer-table"}};
  std::streambuf* saved = std::cout.rdbuf();
  std::ostringstream sink;
  std::cout.rdbuf(sink.rdbuf());
  int failures = 0;
  for (const char* tag : {"a", "b"})
    for (auto args : commands) {
      args.insert(args.begin(), {"otlab", "-c", (dir / "config.json").string(), "--out", (dir / tag).string(), "--seed", "11"});
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      failures += cli::run(static_cast<int>(argv.size()), argv.data()) != 0;
    }
  std::cout.rdbuf(saved);
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const auto ext = e.path().extension();
    if (ext != ".json" && ext != ".csv") continue;
    ++files;
    differ += slurp(e.path()) != slurp(dir / "b" / e.path().filename());
  }
  return {failures == 0 && files >= 8 && differ == 0,
          std::to_string(files) + " JSON/CSV files compared, " + std::to_string(differ) + " differ, " +
              std::to_string(failures) + " failed runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"k-range reproduction", k_ranges},
      {"Gegenbauer suite", gegenbauer_suite},
      {"singular-solution oracle", singular_oracle},
      {"gradient lower bracket", gradient_bracket},
      {"truncated Newtonian potential decay", potential_decay},
      {"solver convergence (17/25/33)", solver_convergence},
      {"Alessandrini identity", alessandrini},
      {"D-N structure", dn_structure},
      {"Lipschitz sweep, profile order 0", lipschitz_sweep},
      {"Holder sweep, h = 1", holder_sweep},
      {"remainder decay", remainder_decay},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !out.pass;
    std::printf("%s %2d %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
