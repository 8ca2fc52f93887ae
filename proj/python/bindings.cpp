#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otlab/cli.hpp"
#include "otlab/dnmap.hpp"
#include "otlab/gegenbauer.hpp"
#include "otlab/medium.hpp"
#include "otlab/singular.hpp"
#include "otlab/solver.hpp"
#include "otlab/stability.hpp"

namespace py = pybind11;
using namespace otlab;

namespace {

py::array_t<Complex> cube(const solver::ComplexField& f) {
  const py::ssize_t m = f.grid.points_per_axis();
  py::array_t<Complex> out({m, m, m});
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  return out;
}

Eigen::MatrixXd b_or_zero(const std::optional<Eigen::MatrixXd>& B) {
  if (!B) return Eigen::MatrixXd::Zero(3, 3);
  if (B->rows() != 3 || B->cols() != 3) throw ValidationError("", "B must be 3x3");
  return *B;
}

class Config {
 public:
  explicit Config(const std::string& text) : cfg_(cli::parse_config(parse(text))) {}

  std::string fingerprint() const { return hex64(cfg_.fingerprint); }
  int points() const { return cfg_.points; }

  py::array_t<Complex> solve(bool reaction) const {
    const auto med = cfg_.sample();
    solver::AssemblyOptions opt;
    opt.include_reaction = reaction;
    const auto op = solver::assemble(med, opt);
    const auto& s = cfg_.solve;
    const auto g = solver::ComplexField::sample(med.grid, [&](const Vec3& x) { return Complex(s.g_re(x), s.g_im(x)); });
    const auto f = solver::ComplexField::sample(med.grid, [&](const Vec3& x) { return Complex(s.f_re(x), s.f_im(x)); });
    solver::ComplexField u;
    {
      py::gil_scoped_release release;
      u = solver::solve_dirichlet(op, g, f);
    }
    return cube(u);
  }

  Eigen::MatrixXcd dn(bool reaction, int threads) const {
    dnmap::DNOptions opt;
    opt.include_reaction = reaction;
    opt.threads = threads;
    const auto med = cfg_.sample();
    py::gil_scoped_release release;
    return dnmap::assemble_dn(med, opt).matrix;
  }

  double star_norm(const Eigen::MatrixXcd& delta, bool dense) const {
    const dnmap::SobolevScale scale(cfg_.grid());
    if (dense) return dnmap::star_norm_dense(delta, scale);
    dnmap::StarNormOptions opt;
    opt.seed = cfg_.seed;
    return dnmap::star_norm(delta, scale, opt).value;
  }

  py::dict check() const {
    const auto med = cfg_.sample();
    const auto adm = medium::check_admissibility(med);
    const auto r = medium::k_admissible_ranges(cfg_.apriori.lambda, cfg_.apriori.calE, cfg_.apriori.n);
    py::dict d;
    d["admissible"] = adm.ok();
    d["violations"] = adm.violations.size();
    d["k0"] = r.k0;
    d["k0_tilde"] = r.k0_tilde;
    d["k_admissible"] = r.admissible(cfg_.apriori.k);
    return d;
  }

 private:
  static nlohmann::json parse(const std::string& text) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("", std::string("config is not valid JSON: ") + e.what());
    }
  }
  cli::RunConfig cfg_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the otlab numerical laboratory";
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def("k_admissible_ranges", [](double lam, double calE, int n) {
    const auto r = medium::k_admissible_ranges(lam, calE, n);
    return std::make_pair(r.k0, r.k0_tilde);
  }, py::arg("lam"), py::arg("calE"), py::arg("n") = 3);

  m.def("diffusion_tensor", [](double mu_a, double mu_s, std::optional<Eigen::MatrixXd> B, double k) {
    return medium::diffusion_tensor(mu_a, mu_s, b_or_zero(B), k);
  }, py::arg("mu_a"), py::arg("mu_s"), py::arg("B") = py::none(), py::arg("k") = 0.2);

  m.def("gegenbauer", [](int deg, int n, Complex t) {
    return gegenbauer::eval(gegenbauer::GegenbauerSpec::for_dimension(deg, n), t);
  }, py::arg("m"), py::arg("n"), py::arg("t"));

  m.def("leading_term", [](int order, const Eigen::VectorXd& z, const Eigen::VectorXd& x, double mu_a, double mu_s,
                           std::optional<Eigen::MatrixXd> B, double k) {
    if (z.size() != x.size()) throw ValidationError("", "z and x must have the same length");
    Eigen::MatrixXd b = B ? *B : Eigen::MatrixXd::Zero(z.size(), z.size());
    const auto at = singular::SingularityPoint::from_coefficients(z, mu_a, mu_s, b, k);
    return singular::leading_term({order, at}, x);
  }, py::arg("m"), py::arg("z"), py::arg("x"), py::arg("mu_a") = 1.0, py::arg("mu_s") = 1.0, py::arg("B") = py::none(),
     py::arg("k") = 0.2);

  m.def("gradient_bracket_min", &singular::gradient_bracket_min, py::arg("m"), py::arg("n"), py::arg("points") = 10001);
  m.def("delta_h", &stability::delta_h, py::arg("alpha"), py::arg("h"));

  m.def("default_config", [] { return cli::default_config().dump(); });

  py::class_<Config>(m, "Config")
      .def(py::init<const std::string&>(), py::arg("json_text"))
      .def_property_readonly("fingerprint", &Config::fingerprint)
      .def_property_readonly("points", &Config::points)
      .def("check", &Config::check)
      .def("solve", &Config::solve, py::arg("reaction") = true)
      .def("dn", &Config::dn, py::arg("reaction") = true, py::arg("threads") = 1)
      .def("star_norm", &Config::star_norm, py::arg("delta"), py::arg("dense") = false);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "otlab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    py::gil_scoped_release release;
    return cli::run(static_cast<int>(argv.size()), argv.data());
  }, py::arg("args"));
}
