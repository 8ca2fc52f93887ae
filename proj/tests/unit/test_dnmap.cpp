#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/oracles.hpp"
#include "otlab/dnmap.hpp"
#include "otlab/fit.hpp"
#include "otlab/singular.hpp"

using namespace otlab;
using namespace otlab::dnmap;
using otlab::medium::AprioriData;
using otlab::medium::CoefficientFunctions;

namespace {

CoefficientFunctions background() {
  CoefficientFunctions c;
  c.mu_a = [](const Vec3& x) { return 1.0 + 0.1 * std::cos(x[0] + 2 * x[1]); };
  c.mu_s = [](const Vec3& x) { return 1.2 + 0.1 * x[2]; };
  c.B = [](const Vec3& x) {
    Mat3 B = Mat3::Zero();
    B(0, 2) = B(2, 0) = 0.05 * std::sin(x[1]);
    return B;
  };
  return c;
}

CoefficientFunctions perturbed(double eps) {
  auto c = background();
  auto base = c.mu_a;
  c.mu_a = [base, eps](const Vec3& x) { return base(x) + eps * std::exp(-8.0 * (x - Vec3(0.4, 0.6, 0.5)).squaredNorm()); };
  return c;
}

medium::OpticalMedium make(const CoefficientFunctions& c, int points, double k = 0.2) {
  AprioriData ap;
  ap.k = k;
  return medium::sample_medium(c, GridDomain(1.0, points), ap);
}

Eigen::VectorXcd random_boundary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(nd(rng), nd(rng));
  return v;
}

// Composite Gauss-Legendre rule on [0, 1] with `panels` panels of 8 nodes.
std::vector<std::pair<double, double>> composite_rule(int panels) {
  static const double x8[] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                              0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static const double w8[] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                              0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  std::vector<std::pair<double, double>> r;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < 8; ++i) r.emplace_back((p + 0.5 * (x8[i] + 1.0)) / panels, 0.5 * w8[i] / panels);
  return r;
}

}  // namespace

TEST_CASE("Sobolev scale structure") {
  const GridDomain g(1.0, 9);
  const SobolevScale s(g);
  const int nb = s.size();
  CHECK(nb == 6 * 8 * 8 + 2);
  const Eigen::MatrixXd S(s.stiffness());
  CHECK((S - S.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(S.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.mass().sum() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(s.eigenvalues().minCoeff() >= 0.0);
  CHECK(s.eigenvalues()[0] < 1e-10);
  CHECK(s.eigenvalues()[1] > 1.0);
  // Eigenvectors are M-orthonormal.
  const Eigen::MatrixXd G = s.eigenvectors().transpose() * s.mass().asDiagonal() * s.eigenvectors();
  CHECK((G - Eigen::MatrixXd::Identity(nb, nb)).cwiseAbs().maxCoeff() < 1e-10);

  SUBCASE("constant function norm is the boundary area") {
    const Complex c(0.7, -1.3);
    const Eigen::VectorXcd f = Eigen::VectorXcd::Constant(nb, c);
    CHECK(sobolev_norm(f, s, 0.5) * sobolev_norm(f, s, 0.5) == doctest::Approx(6.0 * std::norm(c)).epsilon(1e-12));
  }
  SUBCASE("fractional powers compose to the identity") {
    std::mt19937_64 rng(3);
    const Eigen::VectorXcd f = random_boundary(nb, rng);
    const Eigen::VectorXcd back = s.apply_power(s.apply_power(f, 0.25), -0.25);
    CHECK((back - f).norm() / f.norm() < 1e-10);
    const Eigen::VectorXcd half = s.apply_power(f, 0.25);
    // ||f||_{1/2}^2 = ||(I + Delta)^{1/4} f||_{L2(M)}^2
    CHECK(sobolev_norm(f, s, 0.5) * sobolev_norm(f, s, 0.5) ==
          doctest::Approx((half.conjugate().array() * s.mass().array() * half.array()).sum().real()).epsilon(1e-10));
  }
  SUBCASE("duality sandwich") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXcd phi = random_boundary(nb, rng), f = random_boundary(nb, rng);
      CHECK(std::abs(duality_pairing(phi, f)) <= sobolev_norm(phi, s, -0.5) * sobolev_norm(f, s, 0.5) * (1 + 1e-12));
    }
    // Equality for phi = M (I + Delta)^{1/2} f.
    const Eigen::VectorXcd f = random_boundary(nb, rng);
    const Eigen::VectorXcd phi = s.mass().cast<Complex>().asDiagonal() * s.apply_power(f, 0.5).conjugate();
    CHECK(std::abs(duality_pairing(phi, f)) ==
          doctest::Approx(sobolev_norm(phi, s, -0.5) * sobolev_norm(f, s, 0.5)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(sobolev_pairing(Eigen::VectorXcd::Zero(nb), Eigen::VectorXcd::Zero(nb), s, 1.0), DomainError);
}

TEST_CASE("D-N operator structure") {
  const auto med = make(background(), 9);
  const DNOptions opt;
  const DNOperator dn = assemble_dn(med, opt);
  const int nb = static_cast<int>(med.grid.boundary_nodes().size());
  REQUIRE(dn.matrix.rows() == nb);
  CHECK(dn.symmetry_residual() <= 10 * opt.tolerance);
  CHECK(dn.medium_fingerprint == med.fingerprint());
  CHECK(dn.grid_fingerprint == med.grid.fingerprint());

  SUBCASE("deterministic and thread independent") {
    DNOptions two = opt;
    two.threads = 2;
    CHECK(assemble_dn(med, opt).matrix == dn.matrix);
    CHECK(assemble_dn(med, two).matrix == dn.matrix);
  }
  SUBCASE("constants lie in the kernel without reaction") {
    DNOptions noreact = opt;
    noreact.include_reaction = false;
    const auto d0 = assemble_dn(med, noreact);
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(nb);
    CHECK((d0.matrix * ones).cwiseAbs().maxCoeff() < 1e-9 * d0.matrix.cwiseAbs().maxCoeff());
  }
  SUBCASE("energy identity for random data") {
    solver::AssemblyOptions aopt;
    const auto op = solver::assemble(med, aopt);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXcd f = random_boundary(nb, rng);
      auto data = solver::ComplexField::zeros(med.grid);
      for (int p = 0; p < nb; ++p) data.values[med.grid.boundary_nodes()[p]] = f[p];
      const auto u = solver::solve_dirichlet(op, data, solver::ComplexField::zeros(med.grid));
      const Eigen::Map<const Eigen::VectorXcd> uv(u.values.data(), med.grid.node_count());
      const Complex energy = uv.dot(op.node_matrix() * uv);
      const Complex pairing = f.dot(dn.matrix * f);
      CHECK(std::abs(pairing - energy) <= 1e-9 * std::abs(energy));
      CHECK(pairing.real() > 0.0);
    }
  }
  SUBCASE("reflection relabels the boundary") {
    auto c = background();
    CoefficientFunctions r{[c](const Vec3& x) { return c.mu_a(Vec3(1 - x[0], x[1], x[2])); },
                           [c](const Vec3& x) { return c.mu_s(Vec3(1 - x[0], x[1], x[2])); },
                           [c](const Vec3& x) {
                             Mat3 P = Mat3::Identity();
                             P(0, 0) = -1;
                             return Mat3(P * c.B(Vec3(1 - x[0], x[1], x[2])) * P);
                           }};
    const auto dr = assemble_dn(make(r, 9), opt);
    const GridDomain& g = med.grid;
    const int m = g.points_per_axis();
    std::vector<int> perm(nb);
    for (int p = 0; p < nb; ++p) {
      const auto ijk = g.index(g.boundary_nodes()[p]);
      perm[p] = g.boundary_position(g.id(m - 1 - ijk[0], ijk[1], ijk[2]));
    }
    double worst = 0.0;
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) worst = std::max(worst, std::abs(dr.matrix(perm[i], perm[j]) - dn.matrix(i, j)));
    CHECK(worst <= 1e-9 * dn.matrix.cwiseAbs().maxCoeff());
  }
  SUBCASE("binary container round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "otlab_dn_test.bin").string();
    dn.save(path);
    const auto back = DNOperator::load(path);
    CHECK(back.matrix == dn.matrix);
    CHECK(back.medium_fingerprint == dn.medium_fingerprint);
    CHECK(back.grid_fingerprint == dn.grid_fingerprint);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_AS(DNOperator::load(path), ValidationError);
    {
      std::ofstream out(path, std::ios::binary);
      out << "NOTADNOP and more bytes to fill the header out";
    }
    CHECK_THROWS_AS(DNOperator::load(path), ValidationError);
    std::filesystem::remove(path);
  }
}

TEST_CASE("star norm") {
  const auto m1 = make(background(), 9);
  const auto m2 = make(perturbed(0.3), 9);
  const SobolevScale scale(m1.grid);
  const Eigen::MatrixXcd delta = dn_difference(assemble_dn(m1), assemble_dn(m2));
  CHECK(star_norm(Eigen::MatrixXcd::Zero(delta.rows(), delta.cols()), scale).value == 0.0);
  const auto res = star_norm(delta, scale);
  const double dense = star_norm_dense(delta, scale);
  MESSAGE("power iterations " << res.iterations << ", norm " << res.value);
  CHECK(std::abs(res.value - dense) <= 1e-6 * dense);
  const Complex c(-0.6, 1.7);
  CHECK(star_norm(c * delta, scale).value == doctest::Approx(std::abs(c) * res.value).epsilon(1e-6));
  StarNormOptions capped;
  capped.max_iterations = 2;
  CHECK_THROWS_AS(star_norm(delta, scale, capped), NumericalError);
  CHECK_THROWS_AS(dn_difference(assemble_dn(m1), assemble_dn(make(background(), 11))), DomainError);
}

TEST_CASE("star norm of a D-N difference is linear in a small perturbation") {
  const auto base = make(background(), 9);
  const SobolevScale scale(base.grid);
  const auto d0 = assemble_dn(base);
  std::vector<double> eps, norms;
  for (double e = 0.2; e > 0.01; e /= 2) {
    eps.push_back(e);
    norms.push_back(star_norm(dn_difference(assemble_dn(make(perturbed(e), 9)), d0), scale).value);
  }
  const double slope = loglog_fit(eps, norms).slope;
  MESSAGE("Frechet slope " << slope);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("Alessandrini identity") {
  SUBCASE("coinciding media") {
    const auto med = make(background(), 9);
    std::mt19937_64 rng(9);
    const int nb = static_cast<int>(med.grid.boundary_nodes().size());
    const auto rep = alessandrini_residual(med, med, random_boundary(nb, rng), random_boundary(nb, rng));
    CHECK(rep.rhs == Complex(0.0));
    CHECK(rep.residual <= 10 * DNOptions{}.tolerance);
  }
  SUBCASE("left side matches the D-N matrices") {
    const auto m1 = make(background(), 9), m2 = make(perturbed(0.5), 9);
    std::mt19937_64 rng(10);
    const int nb = static_cast<int>(m1.grid.boundary_nodes().size());
    const Eigen::VectorXcd f = random_boundary(nb, rng), g = random_boundary(nb, rng);
    const auto rep = alessandrini_residual(m1, m2, f, g);
    const Complex direct = (g.transpose() * dn_difference(assemble_dn(m1), assemble_dn(m2)) * f)(0, 0);
    CHECK(std::abs(rep.lhs - direct) <= 1e-8 * std::abs(direct));
  }
  SUBCASE("refinement with smooth data") {
    auto fdata = [](const Vec3& x) { return Complex(1.0 + x[0] * x[1], 0.5 * std::sin(x[2])); };
    auto gdata = [](const Vec3& x) { return Complex(std::cos(x[0] - x[2]), x[1]); };
    // The 9 and 13 point grids are still pre-asymptotic for this pair.
    std::vector<double> hs, res;
    for (int pts : {17, 21, 25}) {
      const auto m1 = make(background(), pts), m2 = make(perturbed(0.5), pts);
      const auto rep = alessandrini_residual(m1, m2, boundary_trace(m1.grid, fdata), boundary_trace(m1.grid, gdata));
      hs.push_back(m1.grid.spacing());
      res.push_back(rep.residual);
      MESSAGE("grid " << pts << " lhs " << rep.lhs << " residual " << rep.residual);
    }
    const double order = loglog_fit(hs, res).slope;
    MESSAGE("Alessandrini residual order " << order);
    CHECK(order >= 1.0);
  }
  SUBCASE("random nodal data on a coarse grid") {
    const auto m1 = make(background(), 9), m2 = make(perturbed(0.5), 9);
    std::mt19937_64 rng(11);
    const int nb = static_cast<int>(m1.grid.boundary_nodes().size());
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial)
      worst = std::max(worst, alessandrini_residual(m1, m2, random_boundary(nb, rng), random_boundary(nb, rng)).residual);
    MESSAGE("worst random-data residual " << worst << " against 5h = " << 5 * m1.grid.spacing());
    CHECK(worst <= 5 * m1.grid.spacing());
  }
}

TEST_CASE("D-N pairing of analytic solutions converges at second order") {
  // Constant principal part without reaction: u_1 and u_0 with poles outside
  // the cube solve the equation, and <Lambda u, v> = int_boundary (K grad u . nu) v.
  const double k = 0.2;
  const auto at = singular::SingularityPoint::from_coefficients(Vec3(0.5, 0.45, -0.3), 1.0, 1.0, Eigen::MatrixXd::Zero(3, 3), k);
  const singular::SingularSolutionSpec su{1, at};
  auto at2 = at;
  at2.z = Vec3(1.4, 0.5, 0.6);
  const singular::SingularSolutionSpec sv{0, at2};
  const Complex kappa = medium::diffusion_tensor(1.0, 1.0, Mat3::Zero(), k)(0, 0);

  const auto rule = composite_rule(16);
  Complex exact = 0.0;
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side)
      for (const auto& [a, wa] : rule)
        for (const auto& [b, wb] : rule) {
          Vec3 x;
          x[axis] = side;
          x[(axis + 1) % 3] = a;
          x[(axis + 2) % 3] = b;
          const auto grad = singular::leading_term_gradient(su, x);
          exact += wa * wb * kappa * (side ? 1.0 : -1.0) * grad[axis] * singular::leading_term(sv, x);
        }

  std::vector<double> hs, errs;
  for (int pts : {9, 13, 17}) {
    const auto med = testing::unit_medium(GridDomain(1.0, pts), k);
    DNOptions opt;
    opt.include_reaction = false;
    const auto dn = assemble_dn(med, opt);
    const auto f = boundary_trace(med.grid, [&](const Vec3& x) { return singular::leading_term(su, x); });
    const auto g = boundary_trace(med.grid, [&](const Vec3& x) { return singular::leading_term(sv, x); });
    const Complex pairing = (g.transpose() * dn.matrix * f)(0, 0);
    hs.push_back(med.grid.spacing());
    errs.push_back(std::abs(pairing - exact) / std::abs(exact));
    MESSAGE("grid " << pts << " pairing " << pairing << " exact " << exact);
  }
  const double order = loglog_fit(hs, errs).slope;
  MESSAGE("pairing order " << order);
  CHECK(order == doctest::Approx(2.0).epsilon(0.1));
}
