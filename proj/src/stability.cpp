#include "otlab/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "otlab/parallel.hpp"

namespace otlab::stability {

namespace {

// Smooth step: 1 for t <= 0, 0 for t >= 1, C-infinity in between.
double cutoff(double t) {
  auto psi = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double a = psi(1.0 - t), b = psi(t);
  return a / (a + b);
}

// exp(1 - 1/(1 - s^2)) on |s| < 1: value 1 and vanishing odd derivatives at 0.
double bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

// Fornberg weights for the order-th derivative at 0 from nodes t.
std::vector<double> fd_weights(const std::vector<double>& t, int order) {
  const int n = static_cast<int>(t.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0, c4 = t[0];
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = t[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = t[i] - t[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][order];
  return w;
}

using MultiIndex = std::array<int, 3>;

std::vector<MultiIndex> multi_indices(int order) {
  std::vector<MultiIndex> out;
  for (int a = order; a >= 0; --a)
    for (int b = order - a; b >= 0; --b) out.push_back({a, b, order - a - b});
  return out;
}

template <class T>
std::vector<T> differentiate(const GridDomain& g, const std::vector<T>& f, const MultiIndex& gamma) {
  std::vector<T> cur = f;
  for (int axis = 0; axis < 3; ++axis)
    for (int r = 0; r < gamma[axis]; ++r) {
      std::vector<T> next(cur.size());
      for (int id = 0; id < g.node_count(); ++id) next[id] = nodal_partial(g, cur, id, axis);
      cur = std::move(next);
    }
  return cur;
}

double binomial(const MultiIndex& g, const MultiIndex& b) {
  double r = 1.0;
  for (int a = 0; a < 3; ++a) r *= std::tgamma(g[a] + 1.0) / (std::tgamma(b[a] + 1.0) * std::tgamma(g[a] - b[a] + 1.0));
  return r;
}

// Derivatives of K = M^{-1}/n at the boundary nodes for every beta <= gamma,
// from nodal derivatives of mu_a and (I - B) mu_s.
std::vector<CMat3> chain_rule_derivative(const medium::OpticalMedium& med, const MultiIndex& gamma) {
  const GridDomain& g = med.grid;
  const int N = g.node_count();
  const double k = med.apriori.k;
  const double n = 3.0;
  std::vector<MultiIndex> betas;
  for (int a = 0; a <= gamma[0]; ++a)
    for (int b = 0; b <= gamma[1]; ++b)
      for (int c = 0; c <= gamma[2]; ++c) betas.push_back({a, b, c});
  std::sort(betas.begin(), betas.end(), [](const MultiIndex& x, const MultiIndex& y) {
    const int sx = x[0] + x[1] + x[2], sy = y[0] + y[1] + y[2];
    return sx != sy ? sx < sy : x < y;
  });

  std::vector<Mat3> P(N);
  for (int id = 0; id < N; ++id) P[id] = (Mat3::Identity() - med.B[id]) * med.mu_s[id];
  std::map<MultiIndex, std::vector<double>> dmu;
  std::map<MultiIndex, std::vector<Mat3>> dP;
  for (const auto& b : betas) {
    dmu[b] = differentiate(g, med.mu_a, b);
    dP[b] = differentiate(g, P, b);
  }

  const auto& bnodes = g.boundary_nodes();
  std::vector<CMat3> out(bnodes.size());
  for (std::size_t p = 0; p < bnodes.size(); ++p) {
    const int id = bnodes[p];
    std::map<MultiIndex, CMat3> dM, dN;
    for (const auto& b : betas) {
      CMat3 m = dP[b][id].cast<Complex>();
      m.diagonal().array() += dmu[b][id];
      dM[b] = m;
    }
    dM[{0, 0, 0}].diagonal().array() -= Complex(0.0, k);
    const CMat3 N0 = dM[{0, 0, 0}].inverse();
    for (const auto& b : betas) {
      if (b == MultiIndex{0, 0, 0}) {
        dN[b] = N0;
        continue;
      }
      CMat3 s = CMat3::Zero();
      for (const auto& c : betas) {
        if (c == b || c[0] > b[0] || c[1] > b[1] || c[2] > b[2]) continue;
        const MultiIndex diff{b[0] - c[0], b[1] - c[1], b[2] - c[2]};
        s += binomial(b, c) * dM[diff] * dN[c];
      }
      dN[b] = -N0 * s;
    }
    out[p] = dN[gamma] / n;
  }
  return out;
}

double difference_norm(const GridDomain& g, const std::vector<double>& f) {
  double s = 0.0;
  for (int id : g.boundary_nodes()) s = std::max(s, std::abs(f[id]));
  return s;
}

// Sampled C^{h,alpha} estimate of the perturbation on the boundary layer
// dist < 0.5: sup of all partials up to order h plus the (h+1)-st order sup
// times diam^{1-alpha}, which bounds the Holder seminorm of D^h.
double holder_estimate(const PerturbationSpec& spec, int h, double eps) {
  const GridDomain g(1.0, spec.grid_points);
  const double step = 1e-3;
  double total = 0.0;
  for (int order = 0; order <= h + 1; ++order) {
    double sup = 0.0;
    for (const auto& gamma : multi_indices(order))
      for (int id = 0; id < g.node_count(); ++id) {
        const Vec3 x = g.point(id);
        if (g.boundary_distance(x) >= 0.5) continue;
        // Nested central differences, evaluated in the open neighbourhood of x.
        double acc = 0.0;
        const int terms = 1 << order;
        for (int mask = 0; mask < terms; ++mask) {
          Vec3 y = x;
          double sign = 1.0;
          int bit = 0;
          for (int axis = 0; axis < 3; ++axis)
            for (int r = 0; r < gamma[axis]; ++r, ++bit) {
              const bool plus = (mask >> bit) & 1;
              y[axis] += plus ? 0.5 * step : -0.5 * step;
              if (!plus) sign = -sign;
            }
          acc += sign * spec.difference(y, eps);
        }
        sup = std::max(sup, std::abs(acc) / std::pow(step, order));
      }
    total += order <= h ? sup : sup * std::pow(std::sqrt(3.0), 1.0 - spec.alpha);
  }
  return total;
}

}  // namespace

Vec3 nu_tilde_at(const GridDomain& grid, const Vec3& x0, double band) {
  Vec3 v = Vec3::Zero();
  for (int a = 0; a < 3; ++a) v[a] = cutoff((grid.extent() - x0[a]) / band) - cutoff(x0[a] / band);
  const double n = v.norm();
  if (n == 0.0) throw DomainError("nu_tilde_at: point is not near the boundary");
  return v / n;
}

NonTangentialField build_nu_tilde(const GridDomain& grid, double band) {
  NonTangentialField f;
  f.grid = grid;
  const double h = grid.spacing();
  f.band = band > 0.0 ? band : 2.0 * h;
  f.tau0 = 4.0 * h;
  f.C = std::numeric_limits<double>::infinity();
  for (int id : grid.boundary_nodes()) {
    const Vec3 x0 = grid.point(id);
    const Vec3 nu = nu_tilde_at(grid, x0, f.band);
    f.nu.push_back(nu);
    for (double tau : {h, 2.0 * h, 4.0 * h}) f.C = std::min(f.C, grid.exterior_distance(x0 + tau * nu) / tau);
  }
  return f;
}

NormalDerivative normal_derivative_sup(const std::vector<double>& field, const NonTangentialField& nu, int j) {
  const GridDomain& g = nu.grid;
  if (static_cast<int>(field.size()) != g.node_count()) throw DomainError("normal_derivative_sup: field size mismatch");
  if (j < 0) throw DomainError("normal_derivative_sup: negative order");
  NormalDerivative out;
  const double h = g.spacing();
  out.step = std::max(h, std::sqrt(h) / (2.0 * (j + 1)));
  std::vector<double> t(j + 2);
  for (int i = 0; i <= j + 1; ++i) t[i] = -i * out.step;
  const std::vector<double> w = fd_weights(t, j);
  const auto& bnodes = g.boundary_nodes();
  for (std::size_t p = 0; p < bnodes.size(); ++p) {
    const Vec3 x0 = g.point(bnodes[p]);
    bool inside = true;
    double d = 0.0;
    for (int i = 0; i <= j + 1; ++i) {
      const Vec3 x = x0 + t[i] * nu.nu[p];
      if (!g.contains(x, 1e-12)) {
        inside = false;
        break;
      }
      d += w[i] * g.interpolate(field, x);
    }
    if (!inside) {
      ++out.skipped;
      continue;
    }
    if (std::abs(d) > out.sup) {
      out.sup = std::abs(d);
      out.worst_node = static_cast<int>(p);
    }
  }
  return out;
}

double delta_h(double alpha, int h) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("delta_h: alpha must lie in (0, 1]");
  if (h < 0) throw DomainError("delta_h: h must be non-negative");
  double r = 1.0;
  for (int i = 0; i <= h; ++i) r *= alpha / (alpha + i);
  return r;
}

int PerturbationSpec::face_axis() const {
  for (int a = 0; a < 3; ++a)
    if (patch_center[a] == 0.0 || patch_center[a] == 1.0) return a;
  throw DomainError("PerturbationSpec: patch center must lie on a face of the unit cube");
}

double PerturbationSpec::difference(const Vec3& x, double eps) const {
  const int a = face_axis();
  const double d = patch_center[a] == 0.0 ? x[a] : 1.0 - x[a];
  Vec3 tangential = x - patch_center;
  tangential[a] = 0.0;
  return eps * std::pow(d, profile_order) * bump(tangential.norm() / tangential_radius) * bump(d / normal_scale);
}

double tensor_derivative_gap(const medium::OpticalMedium& m1, const medium::OpticalMedium& m2, int h, bool chain_rule) {
  if (h < 0 || h > 3) throw DomainError("tensor_derivative_gap: supported orders are 0..3");
  const GridDomain& g = m1.grid;
  if (g.fingerprint() != m2.grid.fingerprint()) throw DomainError("tensor_derivative_gap: grids differ");
  double sup = 0.0;
  for (const auto& gamma : multi_indices(h)) {
    if (chain_rule) {
      const auto d1 = chain_rule_derivative(m1, gamma);
      const auto d2 = chain_rule_derivative(m2, gamma);
      for (std::size_t p = 0; p < d1.size(); ++p) sup = std::max(sup, (d1[p] - d2[p]).cwiseAbs().maxCoeff());
    } else {
      const auto t1 = medium::split_real_imag(m1);
      const auto t2 = medium::split_real_imag(m2);
      std::vector<CMat3> diff(g.node_count());
      for (int id = 0; id < g.node_count(); ++id) diff[id] = t1.K[id] - t2.K[id];
      const auto d = differentiate(g, diff, gamma);
      for (int id : g.boundary_nodes()) sup = std::max(sup, d[id].cwiseAbs().maxCoeff());
    }
  }
  return sup;
}

StabilityReport run_stability_experiment(const PerturbationSpec& spec, int h, const SweepOptions& sweep) {
  spec.apriori.validate();
  if (h < 0) throw DomainError("run_stability_experiment: h must be non-negative");
  if (sweep.count < 2 || !(sweep.eps_start > 0.0) || !(sweep.factor > 0.0 && sweep.factor < 1.0))
    throw DomainError("run_stability_experiment: the sweep needs at least two geometric points");
  StabilityReport rep;
  rep.h = h;
  rep.alpha = spec.alpha;
  rep.profile_order = spec.profile_order;
  rep.k = spec.apriori.k;
  rep.k_ranges = medium::k_admissible_ranges(spec.apriori.lambda, spec.apriori.calE, spec.apriori.n);
  if (!rep.k_ranges.admissible(spec.apriori.k))
    throw DomainError("run_stability_experiment: k = " + std::to_string(spec.apriori.k) + " is outside (0, " +
                      std::to_string(rep.k_ranges.k0) + "] and [" + std::to_string(rep.k_ranges.k0_tilde) + ", inf)");
  spec.face_axis();

  const GridDomain grid(1.0, spec.grid_points);
  const auto base = medium::sample_medium(spec.base, grid, spec.apriori, h >= 1);
  const auto base_adm = medium::check_admissibility(base);
  if (!base_adm.ok()) {
    const auto& v = base_adm.violations.front();
    if (v.kind == "B support reaches the boundary")
      throw DomainError("run_stability_experiment: supp(B) must stay inside the domain when h >= 1");
    throw DomainError("run_stability_experiment: base medium is not admissible (" + v.kind + ")");
  }
  rep.base_fingerprint = base.fingerprint();
  rep.nu = build_nu_tilde(grid);

  std::vector<double> eps;
  for (int i = 0; i < sweep.count; ++i) {
    const double e = sweep.eps_start * std::pow(sweep.factor, i);
    if (e < 100.0 * sweep.tolerance) {
      rep.warnings.push_back("epsilon " + std::to_string(e) + " is below the solver floor and was dropped");
      continue;
    }
    eps.push_back(e);
  }
  const double holder = holder_estimate(spec, h, eps.front());
  if (holder > spec.E_h)
    throw DomainError("run_stability_experiment: C^{h,alpha} estimate " + std::to_string(holder) + " of the largest perturbation exceeds E_h");

  dnmap::DNOptions dopt;
  dopt.tolerance = sweep.tolerance;
  const dnmap::DNOperator dn_base = dnmap::assemble_dn(base, dopt);
  const dnmap::SobolevScale scale(grid);

  std::vector<StabilityRow> rows(eps.size());
  std::vector<std::string> row_warning(eps.size());
  std::vector<char> keep(eps.size(), 1);
  parallel_for(static_cast<int>(eps.size()), sweep.threads, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      auto coeffs = spec.base;
      const double amp = eps[i];
      const auto base_mu = spec.base.mu_a;
      coeffs.mu_a = [&spec, base_mu, amp](const Vec3& x) { return base_mu(x) + spec.difference(x, amp); };
      const auto med = medium::sample_medium(coeffs, grid, spec.apriori, h >= 1);
      if (!medium::check_admissibility(med).ok()) {
        keep[i] = 0;
        row_warning[i] = "epsilon " + std::to_string(amp) + " breaks admissibility and was removed";
        continue;
      }
      StabilityRow& row = rows[i];
      row.epsilon = amp;
      const auto star = dnmap::star_norm(dnmap::dn_difference(dnmap::assemble_dn(med, dopt), dn_base), scale);
      row.star = star.value;
      row.star_iterations = star.iterations;
      std::vector<double> diff(grid.node_count());
      for (int id = 0; id < grid.node_count(); ++id) diff[id] = base.mu_a[id] - med.mu_a[id];
      row.boundary_sup = difference_norm(grid, diff);
      for (int j = 0; j <= h; ++j) row.normal.push_back(normal_derivative_sup(diff, rep.nu, j).sup);
      row.tensor_gap = tensor_derivative_gap(base, med, h);
    }
  });
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (keep[i])
      rep.rows.push_back(rows[i]);
    else
      rep.warnings.push_back(row_warning[i]);
  }
  if (rep.rows.size() < 2) throw DomainError("run_stability_experiment: fewer than two admissible sweep points");

  // Linear-response flag: the boundary quantity per unit star stays within 10%
  // of its value at the smallest epsilon.
  const int watch = std::min(spec.profile_order, h);
  auto watched = [&](const StabilityRow& r) { return spec.profile_order == 0 ? r.boundary_sup : r.normal[watch]; };
  const StabilityRow& smallest = rep.rows.back();
  const double ref = smallest.star > 0.0 ? watched(smallest) / smallest.star : 0.0;
  for (auto& r : rep.rows) {
    const double ratio = r.star > 0.0 ? watched(r) / r.star : 0.0;
    r.linear_response = ref > 0.0 && std::abs(ratio / ref - 1.0) <= 0.1;
    if (r.star > 0.0) rep.max_ratio = std::max(rep.max_ratio, r.boundary_sup / r.star);
  }

  auto add_fit = [&](const std::string& name, int order, double predicted, auto&& value) {
    StabilityFit f;
    f.quantity = name;
    f.order = order;
    f.predicted = predicted;
    std::vector<double> x, y;
    for (const auto& r : rep.rows) {
      x.push_back(r.star);
      y.push_back(value(r));
    }
    f.fit = loglog_fit(x, y);
    const auto& top = rep.rows.front();
    f.C = top.star > 0.0 ? value(top) / std::pow(top.star, predicted) : 0.0;
    for (const auto& r : rep.rows)
      if (value(r) > f.C * std::pow(r.star, predicted) * (1.0 + 1e-9)) ++f.violations;
    rep.fits.push_back(std::move(f));
  };
  add_fit("boundary_sup", 0, 1.0, [](const StabilityRow& r) { return r.boundary_sup; });
  for (int j = 0; j <= h; ++j)
    add_fit("normal_derivative", j, delta_h(spec.alpha, j), [j](const StabilityRow& r) { return r.normal[j]; });
  add_fit("tensor_gap", h, h == 0 ? 1.0 : delta_h(spec.alpha, h) * spec.alpha,
          [](const StabilityRow& r) { return r.tensor_gap; });
  return rep;
}

}  // namespace otlab::stability
