#pragma once

#include <string>
#include <vector>

#include "otlab/common.hpp"
#include "otlab/dnmap.hpp"
#include "otlab/fit.hpp"
#include "otlab/grid.hpp"
#include "otlab/medium.hpp"

namespace otlab::stability {

/// Outward unit field at the boundary nodes of the cube. Face normals are
/// blended with C-infinity weights within `band` of an edge or corner.
struct NonTangentialField {
  GridDomain grid;
  std::vector<Vec3> nu;  ///< one per grid.boundary_nodes() entry
  double band = 0.0;
  double tau0 = 0.0;
  /// Smallest dist(x0 + tau nu, boundary) / tau over the sampled tau.
  double C = 0.0;
};

/// band defaults to 2h; the comparability constant is measured at tau in {h, 2h, 4h}.
NonTangentialField build_nu_tilde(const GridDomain& grid, double band = 0.0);

/// Outward field at an arbitrary boundary point (same blend as build_nu_tilde).
Vec3 nu_tilde_at(const GridDomain& grid, const Vec3& x0, double band);

struct NormalDerivative {
  double sup = 0.0;
  int worst_node = -1;  ///< position in boundary_nodes()
  int skipped = 0;      ///< samples whose stencil left the cube
  double step = 0.0;
};

/// sup over boundary nodes of |d^j f / d nu^j| from a one-sided (inward)
/// Lagrange stencil with j + 2 points (second order), on trilinear
/// interpolants of the nodal samples. The step is max(h, sqrt(h)/(2(j+1))).
NormalDerivative normal_derivative_sup(const std::vector<double>& field, const NonTangentialField& nu, int j);

/// prod_{i=0}^{h} alpha / (alpha + i).
double delta_h(double alpha, int h);

struct PerturbationSpec {
  medium::CoefficientFunctions base;
  medium::AprioriData apriori;
  int grid_points = 17;
  /// The difference behaves like d^j near the patch face, d = distance to that face.
  int profile_order = 0;
  double epsilon = 0.0;
  Vec3 patch_center = Vec3(0.5, 0.5, 0.0);
  double tangential_radius = 0.35;
  double normal_scale = 0.3;
  double alpha = 0.25;
  /// Bound on the C^{h,alpha} norm of the difference near the boundary.
  double E_h = 10.0;

  /// mu_a2 - mu_a1 at x for amplitude `eps`.
  double difference(const Vec3& x, double eps) const;
  /// Patch face axis (the coordinate that is 0 or 1 at patch_center).
  int face_axis() const;
};

struct StabilityRow {
  double epsilon = 0.0;
  double star = 0.0;            ///< ||Lambda_1 - Lambda_2||_*
  double boundary_sup = 0.0;    ///< ||mu_1 - mu_2||_{L infinity(boundary)}
  std::vector<double> normal;   ///< ||d^j/dnu^j (mu_1 - mu_2)||, j = 0..h
  double tensor_gap = 0.0;      ///< ||D^h (K_1 - K_2)||_{L infinity(boundary)}
  bool linear_response = true;
  int star_iterations = 0;
};

struct StabilityFit {
  std::string quantity;
  int order = 0;
  double predicted = 0.0;  ///< exponent of the one-sided bound
  LogLogFit fit;           ///< observed log-log relation against star
  double C = 0.0;          ///< quantity / star^predicted at the largest epsilon
  int violations = 0;      ///< rows where quantity > C star^predicted (1e-9 slack)
};

struct StabilityReport {
  int h = 0;
  double alpha = 0.0;
  int profile_order = 0;
  double k = 0.0;
  medium::KRanges k_ranges;
  NonTangentialField nu;
  std::vector<StabilityRow> rows;
  std::vector<StabilityFit> fits;
  /// Largest ||mu_1 - mu_2||_{L infinity(boundary)} / star over the sweep.
  double max_ratio = 0.0;
  std::vector<std::string> warnings;
  std::uint64_t base_fingerprint = 0;
};

struct SweepOptions {
  double eps_start = 0.2;
  double factor = 0.5;
  int count = 6;
  int threads = 1;
  double tolerance = 1e-10;
};

/// Assembles Lambda for the base and every perturbed medium, then tabulates the
/// boundary norms against ||Lambda_1 - Lambda_2||_* and fits the log-log
/// slopes. Throws DomainError for an inadmissible k, for supp(B) reaching the
/// boundary when h >= 1, or when the perturbation exceeds E_h.
StabilityReport run_stability_experiment(const PerturbationSpec& spec, int h, const SweepOptions& sweep = {});

/// ||D^h (K_1 - K_2)||_{L infinity(boundary)}: the largest entry of any h-th
/// order partial derivative. `chain_rule` accumulates derivatives of
/// K = M^{-1}/n from nodal derivatives of mu_a, mu_s and B (so dK/dmu_a = -nK^2
/// appears at first order); otherwise the K fields are differenced directly.
/// Supports h <= 3.
double tensor_derivative_gap(const medium::OpticalMedium& medium1, const medium::OpticalMedium& medium2, int h,
                             bool chain_rule = true);

}  // namespace otlab::stability
