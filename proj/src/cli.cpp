#include "otlab/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "otlab/default_config.hpp"
#include "otlab/dnmap.hpp"
#include "otlab/gegenbauer.hpp"
#include "otlab/report.hpp"
#include "otlab/singular.hpp"
#include "otlab/solver.hpp"
#include "otlab/stability.hpp"

namespace otlab::cli {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---- validation helpers -------------------------------------------------

const json& member(const json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.is_object()) throw ValidationError(ptr, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(ptr + "/" + key, "required field is missing");
  return *it;
}

double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ValidationError(ptr, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw ValidationError(ptr, "expected an integer");
  return v.get<int>();
}

Vec3 vec3(const json& v, const std::string& ptr) {
  if (!v.is_array() || v.size() != 3) throw ValidationError(ptr, "expected an array of three numbers");
  return Vec3(number(v[0], ptr + "/0"), number(v[1], ptr + "/1"), number(v[2], ptr + "/2"));
}

Expression expression(const json& v, const std::string& ptr) {
  if (v.is_number()) return Expression::constant(v.get<double>());
  if (!v.is_string()) throw ValidationError(ptr, "expected an expression string or a number");
  try {
    return Expression::parse(v.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(ptr, e.what());
  }
}

void reject_unknown(const json& obj, const std::vector<std::string>& known, const std::string& ptr) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ValidationError(ptr + "/" + it.key(), "unknown field");
}

template <class F>
void optional_field(const json& obj, const std::string& key, const std::string& ptr, F&& read) {
  const auto it = obj.find(key);
  if (it != obj.end() && !it->is_null()) read(*it, ptr + "/" + key);
}

ScalarSource scalar_source(const json& v, const std::string& ptr, int nodes) {
  ScalarSource s;
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != nodes)
      throw ValidationError(ptr, "nodal array must have " + std::to_string(nodes) + " entries");
    for (std::size_t i = 0; i < v.size(); ++i) s.samples.push_back(number(v[i], ptr + "/" + std::to_string(i)));
  } else {
    s.expression = expression(v, ptr);
  }
  return s;
}

std::function<double(const Vec3&)> as_function(const ScalarSource& s, const GridDomain& g) {
  if (s.expression) return *s.expression;
  return [samples = s.samples, g](const Vec3& x) { return g.interpolate(samples, x); };
}

// ---- output helpers -------------------------------------------------------

struct Context {
  RunConfig config;
  std::filesystem::path out;
  int threads = 1;
  std::string command;

  std::string provenance() const {
    return "otlab " + std::string(kVersion) + " command=" + command + " config=" + hex64(config.fingerprint);
  }
  ojson header() const {
    ojson h;
    h["otlab_version"] = std::string(kVersion);
    h["command"] = command;
    h["config_fingerprint"] = hex64(config.fingerprint);
    return h;
  }
  std::string path(const std::string& ext) const { return (out / (command + ext)).string(); }
  void write_json(const ojson& j) const {
    report::write_text(path(".json"), j.dump(2) + "\n");
    std::cout << "wrote " << path(".json") << "\n";
  }
  void wrote(const std::string& ext) const { std::cout << "wrote " << path(ext) << "\n"; }
};

ojson json_double(double v) { return std::isfinite(v) ? ojson(v) : ojson(report::format_double(v)); }

ojson fit_json(const LogLogFit& f) {
  return ojson{{"slope", json_double(f.slope)}, {"intercept", json_double(f.intercept)},
               {"rms_residual", json_double(f.rms_residual)}, {"points", f.points}};
}

ojson violations_json(const std::vector<medium::Violation>& v, std::size_t limit = 20) {
  ojson arr = ojson::array();
  for (std::size_t i = 0; i < v.size() && i < limit; ++i)
    arr.push_back({{"node", v[i].point}, {"kind", v[i].kind}, {"value", json_double(v[i].value)}, {"bound", json_double(v[i].bound)}});
  return arr;
}

ojson medium_json(const medium::OpticalMedium& med) {
  return ojson{{"fingerprint", hex64(med.fingerprint())},
               {"grid_fingerprint", hex64(med.grid.fingerprint())},
               {"points_per_axis", med.grid.points_per_axis()},
               {"spacing", med.grid.spacing()}};
}

// ---- commands -------------------------------------------------------------

int cmd_check(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto med = cfg.sample();
  const auto adm = medium::check_admissibility(med);
  const auto ell = medium::verify_ellipticity(medium::split_real_imag(med), cfg.apriori);
  const auto ranges = medium::k_admissible_ranges(cfg.apriori.lambda, cfg.apriori.calE, cfg.apriori.n);
  ojson j = ctx.header();
  j["medium"] = medium_json(med);
  j["k_ranges"] = {{"k0", ranges.k0}, {"k0_tilde", ranges.k0_tilde}, {"k", cfg.apriori.k}, {"admissible", ranges.admissible(cfg.apriori.k)}};
  j["admissibility"] = {{"ok", adm.ok()},
                        {"violation_count", adm.violations.size()},
                        {"violations", violations_json(adm.violations)},
                        {"w1p_mu_a", adm.w1p_mu_a},
                        {"w1p_mu_s", adm.w1p_mu_s},
                        {"w1p_B", adm.w1p_B},
                        {"w1p_is_approximation", adm.w1p_is_approximation}};
  double minKR = std::numeric_limits<double>::infinity(), maxC2 = 0.0;
  for (double v : ell.min_eig_K_R) minKR = std::min(minKR, v);
  for (double v : ell.local_C2) maxC2 = std::max(maxC2, v);
  j["ellipticity"] = {{"ok", ell.ok()},
                      {"bound_K_R", ell.bound_K_R},
                      {"bound_K_I", ell.bound_K_I},
                      {"bound_norm_sq", ell.bound_norm_sq},
                      {"C2", ell.C2},
                      {"min_eig_K_R", minKR},
                      {"max_local_C2", maxC2},
                      {"violation_count", ell.violations.size()},
                      {"violations", violations_json(ell.violations)}};
  ctx.write_json(j);
  if (!adm.ok()) throw ValidationError("/medium", "medium is not admissible: " + adm.violations.front().kind);
  if (!ranges.admissible(cfg.apriori.k)) throw ValidationError("/apriori/k", "wave number outside the admissible ranges");
  return 0;
}

int cmd_solve(const Context& ctx, bool reaction, const std::string& slice) {
  const auto& cfg = ctx.config;
  const auto med = cfg.sample();
  const GridDomain g = med.grid;
  solver::AssemblyOptions opt;
  opt.include_reaction = reaction;
  opt.threads = ctx.threads;
  const auto op = solver::assemble(med, opt);
  const auto& s = cfg.solve;
  const auto gdata = solver::ComplexField::sample(g, [&](const Vec3& x) { return Complex(s.g_re(x), s.g_im(x)); });
  const auto f = solver::ComplexField::sample(g, [&](const Vec3& x) { return Complex(s.f_re(x), s.f_im(x)); });
  const auto u = solver::solve_dirichlet(op, gdata, f);
  double umax = 0.0;
  for (auto v : u.values) umax = std::max(umax, std::abs(v));
  ojson j = ctx.header();
  j["medium"] = medium_json(med);
  j["reaction"] = reaction;
  j["unknowns"] = op.unknowns().size();
  j["relative_residual"] = solver::relative_residual(op, u, f);
  j["max_abs_u"] = umax;
  const Complex energy = solver::energy_form(op, u, u);
  j["energy"] = {{"re", energy.real()}, {"im", energy.imag()}};

  if (!slice.empty()) {
    const auto eq = slice.find('=');
    if (eq == std::string::npos || slice.substr(0, eq) != "z") throw ValidationError("", "--dump-slice expects z=<value>");
    double zval = 0.0;
    try {
      zval = std::stod(slice.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("", "--dump-slice expects z=<value>");
    }
    if (zval < 0.0 || zval > g.extent()) throw ValidationError("", "--dump-slice z is outside the cube");
    const int kk = static_cast<int>(std::lround(zval / g.spacing()));
    report::CsvTable t(ctx.provenance() + " slice_k=" + std::to_string(kk), {"i", "j", "x", "y", "z", "re", "im", "abs"});
    const int m = g.points_per_axis();
    for (int i = 0; i < m; ++i)
      for (int jj = 0; jj < m; ++jj) {
        const int id = g.id(i, jj, kk);
        const Vec3 x = g.point(id);
        const Complex v = u.values[id];
        t.add_row(std::vector<double>{double(i), double(jj), x[0], x[1], x[2], v.real(), v.imag(), std::abs(v)});
      }
    t.write(ctx.path(".csv"));
    ctx.wrote(".csv");
    j["slice"] = {{"k", kk}, {"z", kk * g.spacing()}};
  }
  ctx.write_json(j);
  return 0;
}

int cmd_dn(const Context& ctx, const std::string& save, const std::string& load) {
  const auto& cfg = ctx.config;
  const auto med = cfg.sample();
  dnmap::DNOptions opt;
  opt.threads = ctx.threads;
  const auto dn = dnmap::assemble_dn(med, opt);
  const dnmap::SobolevScale scale(med.grid);
  ojson j = ctx.header();
  j["medium"] = medium_json(med);
  j["boundary_nodes"] = dn.matrix.rows();
  j["symmetry_residual"] = dn.symmetry_residual();
  dnmap::StarNormOptions sopt;
  sopt.seed = cfg.seed;
  if (!save.empty()) {
    dn.save(save);
    j["saved"] = save;
  }
  if (!load.empty()) {
    const auto other = dnmap::DNOperator::load(load);
    if (other.grid_fingerprint != dn.grid_fingerprint)
      throw ValidationError("", load + " was computed on a different grid");
    const auto diff = dnmap::star_norm(dnmap::dn_difference(dn, other), scale, sopt);
    j["loaded"] = {{"path", load},
                   {"medium_fingerprint", hex64(other.medium_fingerprint)},
                   {"same_medium", other.medium_fingerprint == dn.medium_fingerprint},
                   {"star_norm_difference", diff.value},
                   {"iterations", diff.iterations}};
  }
  report::CsvTable t(ctx.provenance(), {"index", "eigenvalue", "weight"});
  const auto& lam = scale.eigenvalues();
  for (int i = 0; i < scale.size(); ++i) t.add_row(std::vector<double>{double(i), lam[i], std::pow(1.0 + lam[i], -0.5)});
  t.write(ctx.path(".csv"));
  ctx.wrote(".csv");
  ctx.write_json(j);
  return 0;
}

int cmd_singular(const Context& ctx, bool correction) {
  const auto& cfg = ctx.config;
  const auto& sc = cfg.singular;
  const auto med = cfg.sample();
  const auto at = singular::SingularityPoint::from_medium(med, sc.z);
  const singular::SingularSolutionSpec spec{sc.m, at};
  ojson j = ctx.header();
  j["medium"] = medium_json(med);
  j["m"] = sc.m;
  j["z"] = {sc.z[0], sc.z[1], sc.z[2]};
  j["K_inv_nn"] = {{"re", at.last_entry().real()}, {"im", at.last_entry().imag()}};
  j["exponent"] = 2 - 3 - sc.m;

  // Closed form against the induction double sum at seeded random points.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  report::CsvTable pts(ctx.provenance(), {"x1", "x2", "x3", "re_um", "im_um", "relative_gap"});
  for (int i = 0; i < 50; ++i) {
    Vec3 d(u(rng), u(rng), u(rng));
    d *= (0.05 + 0.25 * (u(rng) + 1.0)) / d.norm();
    const Eigen::VectorXd x = sc.z + d;
    const Complex a = singular::leading_term(spec, x);
    const double gap = sc.m <= 8 ? std::abs(a - singular::um_via_induction(spec, x)) / std::abs(a) : 0.0;
    worst = std::max(worst, gap);
    pts.add_row(std::vector<double>{x[0], x[1], x[2], a.real(), a.imag(), gap});
  }
  j["induction_gap"] = worst;
  j["gradient_bracket_min"] = singular::gradient_bracket_min(sc.m, 3);

  report::LogLogPlot plot;
  plot.provenance = ctx.provenance();
  plot.title = "correction w, m = " + std::to_string(sc.m);
  plot.x_label = "|x - z|";
  plot.y_label = "sup over shell";
  if (correction) {
    solver::AssemblyOptions opt;
    opt.threads = ctx.threads;
    const auto rep = singular::correction_w(med, spec, {sc.r_min, sc.R}, opt);
    j["correction"] = {{"r_min", sc.r_min},
                       {"R", sc.R},
                       {"fit_w", fit_json(rep.fit_w)},
                       {"fit_rDw", fit_json(rep.fit_rDw)},
                       {"exponent_statement", rep.exponent_statement},
                       {"exponent_proof", rep.exponent_proof},
                       {"fit_rejected", rep.fit_rejected},
                       {"sup_w", rep.sup_w_total},
                       {"sup_um", rep.sup_um_total}};
    report::CsvTable shells(ctx.provenance(), {"radius", "sup_w", "sup_r_grad_w", "sup_um"});
    for (std::size_t s = 0; s < rep.shell_radius.size(); ++s)
      shells.add_row(std::vector<double>{rep.shell_radius[s], rep.sup_w[s], rep.sup_rDw[s], rep.sup_um[s]});
    shells.write(ctx.path(".csv"));
    plot.series.push_back({"sup |w|", rep.shell_radius, rep.sup_w, false});
    plot.series.push_back({"sup |u_m|", rep.shell_radius, rep.sup_um, false});
    for (double e : {rep.exponent_statement, rep.exponent_proof}) {
      report::Series guide{"r^" + report::format_double(e), rep.shell_radius, {}, true};
      for (double r : rep.shell_radius) guide.y.push_back(rep.sup_w.front() * std::pow(r / rep.shell_radius.front(), e));
      plot.series.push_back(guide);
    }
  } else {
    pts.write(ctx.path(".csv"));
  }
  ctx.wrote(".csv");
  if (correction) {
    plot.write(ctx.path(".svg"));
    ctx.wrote(".svg");
  }
  ctx.write_json(j);
  return 0;
}

int cmd_stability(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto& st = cfg.stability;
  stability::PerturbationSpec spec;
  spec.base = cfg.coefficients();
  spec.apriori = cfg.apriori;
  spec.grid_points = cfg.points;
  spec.profile_order = st.profile_order;
  spec.patch_center = st.patch_center;
  spec.tangential_radius = st.tangential_radius;
  spec.normal_scale = st.normal_scale;
  spec.alpha = st.alpha;
  spec.E_h = st.E_h;
  if (cfg.extent != 1.0) throw ValidationError("/grid/extent", "stability experiments run on the unit cube");
  stability::SweepOptions sweep;
  sweep.eps_start = st.eps_start;
  sweep.count = st.eps_count;
  sweep.factor = st.eps_factor;
  sweep.threads = ctx.threads;
  const auto rep = stability::run_stability_experiment(spec, st.h, sweep);

  ojson j = ctx.header();
  j["base_fingerprint"] = hex64(rep.base_fingerprint);
  j["h"] = rep.h;
  j["alpha"] = rep.alpha;
  j["profile_order"] = rep.profile_order;
  j["k"] = rep.k;
  j["k_ranges"] = {{"k0", rep.k_ranges.k0}, {"k0_tilde", rep.k_ranges.k0_tilde}};
  j["nu_tilde"] = {{"band", rep.nu.band}, {"tau0", rep.nu.tau0}, {"C", rep.nu.C}};
  j["delta_h"] = stability::delta_h(st.alpha, st.h);
  j["max_ratio_boundary_over_star"] = json_double(rep.max_ratio);
  ojson rows = ojson::array();
  std::vector<std::string> cols{"epsilon", "star_norm", "boundary_sup"};
  for (int q = 0; q <= st.h; ++q) cols.push_back("normal_d" + std::to_string(q));
  cols.push_back("tensor_gap");
  cols.push_back("linear_response");
  report::CsvTable t(ctx.provenance(), cols);
  for (const auto& r : rep.rows) {
    ojson normals = ojson::array();
    for (double v : r.normal) normals.push_back(v);
    rows.push_back({{"epsilon", r.epsilon},
                    {"star_norm", r.star},
                    {"boundary_sup", r.boundary_sup},
                    {"normal_derivatives", normals},
                    {"tensor_gap", r.tensor_gap},
                    {"linear_response", r.linear_response},
                    {"star_iterations", r.star_iterations}});
    std::vector<double> row{r.epsilon, r.star, r.boundary_sup};
    row.insert(row.end(), r.normal.begin(), r.normal.end());
    row.push_back(r.tensor_gap);
    row.push_back(r.linear_response ? 1.0 : 0.0);
    t.add_row(row);
  }
  j["rows"] = rows;
  ojson fits = ojson::array();
  for (const auto& f : rep.fits)
    fits.push_back({{"quantity", f.quantity},
                    {"order", f.order},
                    {"predicted_exponent", f.predicted},
                    {"observed", fit_json(f.fit)},
                    {"C", json_double(f.C)},
                    {"violations", f.violations}});
  j["fits"] = fits;
  j["warnings"] = rep.warnings;
  t.write(ctx.path(".csv"));
  ctx.wrote(".csv");

  report::LogLogPlot plot;
  plot.provenance = ctx.provenance();
  plot.title = "boundary stability, profile order " + std::to_string(st.profile_order);
  plot.x_label = "||Lambda_1 - Lambda_2||_*";
  plot.y_label = "boundary norm";
  std::vector<double> star;
  for (const auto& r : rep.rows) star.push_back(r.star);
  for (const auto& f : rep.fits) {
    if (f.quantity == "tensor_gap") continue;
    report::Series s{f.quantity == "boundary_sup" ? "sup |mu1 - mu2|" : "sup |d^" + std::to_string(f.order) + "/dnu (mu1 - mu2)|", star, {}, false};
    for (const auto& r : rep.rows) s.y.push_back(f.quantity == "boundary_sup" ? r.boundary_sup : r.normal[f.order]);
    if (std::all_of(s.y.begin(), s.y.end(), [](double v) { return v <= 0.0; })) continue;
    plot.series.push_back(s);
    report::Series guide{"C star^" + report::format_double(f.predicted), star, {}, true};
    for (double x : star) guide.y.push_back(f.C * std::pow(x, f.predicted));
    plot.series.push_back(guide);
  }
  plot.write(ctx.path(".svg"));
  ctx.wrote(".svg");
  ctx.write_json(j);
  return 0;
}

int cmd_gegenbauer(const Context& ctx, int n, int max_degree, int points) {
  if (n < 3) throw ValidationError("", "--n must be at least 3");
  if (max_degree < 0 || max_degree > 64) throw ValidationError("", "--max-degree must lie in [0, 64]");
  if (points < 2) throw ValidationError("", "--points must be at least 2");
  std::vector<std::string> cols{"t"};
  for (int m = 0; m <= max_degree; ++m) cols.push_back("C" + std::to_string(m));
  report::CsvTable t(ctx.provenance() + " n=" + std::to_string(n), cols);
  double worst_ode = 0.0, worst_endpoint = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = -1.0 + 2.0 * i / (points - 1);
    std::vector<double> row{x};
    for (int m = 0; m <= max_degree; ++m) {
      const auto spec = gegenbauer::GegenbauerSpec::for_dimension(m, n);
      row.push_back(gegenbauer::eval(spec, x));
      const auto r = gegenbauer::ode_residual(spec, x);
      worst_ode = std::max(worst_ode, r.standard / r.scale);
    }
    t.add_row(row);
  }
  for (int m = 0; m <= max_degree; ++m) {
    const auto spec = gegenbauer::GegenbauerSpec::for_dimension(m, n);
    const auto e = gegenbauer::endpoint_values(spec);
    worst_endpoint = std::max(worst_endpoint, std::abs(gegenbauer::eval(spec, 1.0) - e.at_plus_one) / std::abs(e.at_plus_one));
  }
  t.write(ctx.path(".csv"));
  ctx.wrote(".csv");
  ojson j = ctx.header();
  j["n"] = n;
  j["max_degree"] = max_degree;
  j["points"] = points;
  j["max_relative_ode_residual"] = worst_ode;
  j["max_relative_endpoint_gap"] = worst_endpoint;
  ctx.write_json(j);
  return 0;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("", "config " + path + " is not valid JSON: " + e.what());
  }
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("OTLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
    throw ValidationError("", "OTLAB_THREADS must be a positive integer");
  }
  return 1;
}

}  // namespace

medium::CoefficientFunctions RunConfig::coefficients() const {
  const GridDomain g = grid();
  medium::CoefficientFunctions c;
  c.mu_a = as_function(mu_a, g);
  c.mu_s = as_function(mu_s, g);
  if (B) {
    c.B = [b = *B](const Vec3& x) {
      Mat3 m;
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) m(r, s) = b[3 * r + s](x);
      return m;
    };
  }
  return c;
}

medium::OpticalMedium RunConfig::sample() const {
  return medium::sample_medium(coefficients(), grid(), apriori, b_interior_support);
}

const json& default_config() {
  static const json doc = json::parse(kDefaultConfig);
  return doc;
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  if (!doc.is_object()) throw ValidationError("", "config must be a JSON object");
  reject_unknown(doc, {"grid", "apriori", "medium", "solve", "singular", "stability", "output", "seed"}, "");
  c.source = doc;
  c.fingerprint = [&] {
    // The output directory does not affect any result.
    json content = doc;
    content.erase("output");
    Fnv1a f;
    f.update(content.dump());
    return f.digest();
  }();

  const json& grid = member(doc, "grid", "");
  reject_unknown(grid, {"extent", "points"}, "/grid");
  c.extent = number(member(grid, "extent", "/grid"), "/grid/extent");
  c.points = integer(member(grid, "points", "/grid"), "/grid/points");
  if (!(c.extent > 0)) throw ValidationError("/grid/extent", "must be positive");
  if (c.points < 9 || c.points > 65 || c.points % 2 == 0) throw ValidationError("/grid/points", "must be odd and in [9, 65]");

  const json& ap = member(doc, "apriori", "");
  reject_unknown(ap, {"n", "p", "lambda", "E", "calE", "k", "r0", "L", "diam", "alpha"}, "/apriori");
  c.apriori.n = integer(member(ap, "n", "/apriori"), "/apriori/n");
  c.apriori.p = number(member(ap, "p", "/apriori"), "/apriori/p");
  c.apriori.lambda = number(member(ap, "lambda", "/apriori"), "/apriori/lambda");
  c.apriori.E = number(member(ap, "E", "/apriori"), "/apriori/E");
  c.apriori.calE = number(member(ap, "calE", "/apriori"), "/apriori/calE");
  c.apriori.k = number(member(ap, "k", "/apriori"), "/apriori/k");
  c.apriori.alpha = number(member(ap, "alpha", "/apriori"), "/apriori/alpha");
  optional_field(ap, "r0", "/apriori", [&](const json& v, const std::string& p) { c.apriori.r0 = number(v, p); });
  optional_field(ap, "L", "/apriori", [&](const json& v, const std::string& p) { c.apriori.L = number(v, p); });
  optional_field(ap, "diam", "/apriori", [&](const json& v, const std::string& p) { c.apriori.diam = number(v, p); });
  if (c.apriori.n != 3) throw ValidationError("/apriori/n", "the grid experiments are three-dimensional");
  c.apriori.validate();

  const int nodes = c.points * c.points * c.points;
  const json& med = member(doc, "medium", "");
  reject_unknown(med, {"mu_a", "mu_s", "B", "b_interior_support"}, "/medium");
  c.mu_a = scalar_source(member(med, "mu_a", "/medium"), "/medium/mu_a", nodes);
  c.mu_s = scalar_source(member(med, "mu_s", "/medium"), "/medium/mu_s", nodes);
  optional_field(med, "B", "/medium", [&](const json& v, const std::string& p) {
    if (!v.is_array() || v.size() != 3) throw ValidationError(p, "expected a 3x3 array of expressions");
    std::array<Expression, 9> b{Expression::constant(0), Expression::constant(0), Expression::constant(0),
                                Expression::constant(0), Expression::constant(0), Expression::constant(0),
                                Expression::constant(0), Expression::constant(0), Expression::constant(0)};
    for (int r = 0; r < 3; ++r) {
      const std::string pr = p + "/" + std::to_string(r);
      if (!v[r].is_array() || v[r].size() != 3) throw ValidationError(pr, "expected a row of three expressions");
      for (int s = 0; s < 3; ++s) b[3 * r + s] = expression(v[r][s], pr + "/" + std::to_string(s));
    }
    c.B = b;
  });
  optional_field(med, "b_interior_support", "/medium", [&](const json& v, const std::string& p) {
    if (!v.is_boolean()) throw ValidationError(p, "expected a boolean");
    c.b_interior_support = v.get<bool>();
  });

  optional_field(doc, "solve", "", [&](const json& v, const std::string& p) {
    reject_unknown(v, {"g_re", "g_im", "f_re", "f_im"}, p);
    optional_field(v, "g_re", p, [&](const json& e, const std::string& q) { c.solve.g_re = expression(e, q); });
    optional_field(v, "g_im", p, [&](const json& e, const std::string& q) { c.solve.g_im = expression(e, q); });
    optional_field(v, "f_re", p, [&](const json& e, const std::string& q) { c.solve.f_re = expression(e, q); });
    optional_field(v, "f_im", p, [&](const json& e, const std::string& q) { c.solve.f_im = expression(e, q); });
  });

  optional_field(doc, "singular", "", [&](const json& v, const std::string& p) {
    reject_unknown(v, {"m", "z", "r_min", "R"}, p);
    optional_field(v, "m", p, [&](const json& e, const std::string& q) { c.singular.m = integer(e, q); });
    optional_field(v, "z", p, [&](const json& e, const std::string& q) { c.singular.z = vec3(e, q); });
    optional_field(v, "r_min", p, [&](const json& e, const std::string& q) { c.singular.r_min = number(e, q); });
    optional_field(v, "R", p, [&](const json& e, const std::string& q) { c.singular.R = number(e, q); });
    if (c.singular.m < 0 || c.singular.m > 64) throw ValidationError(p + "/m", "must lie in [0, 64]");
  });

  optional_field(doc, "stability", "", [&](const json& v, const std::string& p) {
    auto& s = c.stability;
    reject_unknown(v, {"profile_order", "h", "alpha", "eps_start", "eps_count", "eps_factor", "patch_center",
                       "tangential_radius", "normal_scale", "E_h"}, p);
    optional_field(v, "profile_order", p, [&](const json& e, const std::string& q) { s.profile_order = integer(e, q); });
    optional_field(v, "h", p, [&](const json& e, const std::string& q) { s.h = integer(e, q); });
    optional_field(v, "alpha", p, [&](const json& e, const std::string& q) { s.alpha = number(e, q); });
    optional_field(v, "eps_start", p, [&](const json& e, const std::string& q) { s.eps_start = number(e, q); });
    optional_field(v, "eps_count", p, [&](const json& e, const std::string& q) { s.eps_count = integer(e, q); });
    optional_field(v, "eps_factor", p, [&](const json& e, const std::string& q) { s.eps_factor = number(e, q); });
    optional_field(v, "patch_center", p, [&](const json& e, const std::string& q) { s.patch_center = vec3(e, q); });
    optional_field(v, "tangential_radius", p, [&](const json& e, const std::string& q) { s.tangential_radius = number(e, q); });
    optional_field(v, "normal_scale", p, [&](const json& e, const std::string& q) { s.normal_scale = number(e, q); });
    optional_field(v, "E_h", p, [&](const json& e, const std::string& q) { s.E_h = number(e, q); });
    if (s.profile_order < 0 || s.profile_order > 3) throw ValidationError(p + "/profile_order", "must lie in [0, 3]");
    if (s.h < 0 || s.h > 3) throw ValidationError(p + "/h", "must lie in [0, 3]");
    if (!(s.alpha > 0 && s.alpha <= 1)) throw ValidationError(p + "/alpha", "must lie in (0, 1]");
    if (!(s.eps_start > 0)) throw ValidationError(p + "/eps_start", "must be positive");
    if (s.eps_count < 2 || s.eps_count > 12) throw ValidationError(p + "/eps_count", "must lie in [2, 12]");
    if (!(s.eps_factor > 0 && s.eps_factor < 1)) throw ValidationError(p + "/eps_factor", "must lie in (0, 1)");
  });

  optional_field(doc, "output", "", [&](const json& v, const std::string& p) {
    if (!v.is_string() || v.get<std::string>().empty()) throw ValidationError(p, "expected a directory name");
    c.output = v.get<std::string>();
  });
  optional_field(doc, "seed", "", [&](const json& v, const std::string& p) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ValidationError(p, "expected a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  });
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"otlab: numerical laboratory for time-harmonic diffuse optical tomography"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "JSON run configuration (default: bundled configs/default.json)");
  app.add_option("-o,--out", out_dir, "output directory (overrides the config)");
  app.add_option("-t,--threads", threads, "worker threads (fallback: OTLAB_THREADS, then 1)")->check(CLI::Range(1, 1024));
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.set_version_flag("--version", std::string(kVersion));

  auto* check = app.add_subcommand("check", "admissibility, ellipticity and k-range report for the configured medium");

  auto* solve = app.add_subcommand("solve", "Dirichlet solve with the configured data");
  std::optional<int> grid_points;
  bool no_reaction = false;
  std::string slice;
  solve->add_option("--grid", grid_points, "points per axis (overrides the config)");
  solve->add_flag("--no-reaction", no_reaction, "drop the (mu_a - ik) u term");
  solve->add_option("--dump-slice", slice, "write the solution on the plane z=<value> as CSV");

  auto* dn = app.add_subcommand("dn", "assemble the D-N matrix");
  std::string save, load;
  dn->add_option("--save", save, "write the matrix to a binary container");
  dn->add_option("--load", load, "compare against a saved container");

  auto* sing = app.add_subcommand("singular", "singular solution checks and the correction w");
  std::optional<int> m_opt;
  std::vector<double> z_opt;
  bool correction = false;
  sing->add_option("--m", m_opt, "order m");
  sing->add_option("--z", z_opt, "pole position x1,x2,x3")->expected(3)->delimiter(',');
  sing->add_flag("--correction", correction, "solve for w on the configured annulus and fit its decay");

  auto* stab = app.add_subcommand("stability", "boundary stability sweep");
  stab->set_help_flag("--help", "print this help message and exit");
  std::optional<int> profile_order, h_opt, eps_count;
  std::optional<double> alpha, eps_start, k_opt;
  stab->add_option("--profile-order", profile_order, "order j of the perturbation profile d^j");
  stab->add_option("--h", h_opt, "highest normal derivative order");
  stab->add_option("--alpha", alpha, "Holder exponent of the perturbation");
  stab->add_option("--eps-start", eps_start, "largest amplitude");
  stab->add_option("--eps-count", eps_count, "number of geometric amplitudes (factor 1/2)");
  stab->add_option("--k", k_opt, "wave number (overrides the config)");

  auto* geg = app.add_subcommand("gegenbauer-table", "tabulate C_m^{(n-2)/2} on [-1, 1]");
  int geg_n = 3, geg_max = 8, geg_points = 21;
  geg->add_option("--n", geg_n, "space dimension");
  geg->add_option("--max-degree", geg_max, "largest degree m");
  geg->add_option("--points", geg_points, "equispaced samples in [-1, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json doc = config_path.empty() ? default_config() : read_json_file(config_path);
    if (!doc.is_object()) throw ValidationError("", "config must be a JSON object");
    if (!out_dir.empty()) doc["output"] = out_dir;
    if (seed) doc["seed"] = *seed;
    if (solve->parsed() && grid_points) doc["grid"]["points"] = *grid_points;
    if (sing->parsed()) {
      if (m_opt) doc["singular"]["m"] = *m_opt;
      if (!z_opt.empty()) doc["singular"]["z"] = z_opt;
    }
    if (stab->parsed()) {
      if (profile_order) doc["stability"]["profile_order"] = *profile_order;
      if (h_opt) doc["stability"]["h"] = *h_opt;
      if (alpha) doc["stability"]["alpha"] = *alpha;
      if (eps_start) doc["stability"]["eps_start"] = *eps_start;
      if (eps_count) doc["stability"]["eps_count"] = *eps_count;
      if (k_opt) doc["apriori"]["k"] = *k_opt;
    }

    Context ctx;
    ctx.config = parse_config(doc);
    ctx.threads = resolve_threads(threads);
    ctx.out = ctx.config.output;
    std::filesystem::create_directories(ctx.out);

    if (check->parsed()) {
      ctx.command = "check";
      return cmd_check(ctx);
    }
    if (solve->parsed()) {
      ctx.command = "solve";
      return cmd_solve(ctx, !no_reaction, slice);
    }
    if (dn->parsed()) {
      ctx.command = "dn";
      return cmd_dn(ctx, save, load);
    }
    if (sing->parsed()) {
      ctx.command = "singular";
      return cmd_singular(ctx, correction);
    }
    if (stab->parsed()) {
      ctx.command = "stability";
      return cmd_stability(ctx);
    }
    ctx.command = "gegenbauer-table";
    return cmd_gegenbauer(ctx, geg_n, geg_max, geg_points);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error in " << e.module() << ": " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "filesystem error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace otlab::cli
