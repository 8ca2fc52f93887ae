#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "otlab/expr.hpp"
#include "otlab/grid.hpp"
#include "otlab/medium.hpp"

namespace otlab::cli {

/// A scalar coefficient given as an expression in x1..x3 or as nodal samples
/// on the configured grid (trilinear interpolation elsewhere).
struct ScalarSource {
  std::optional<Expression> expression;
  std::vector<double> samples;
};

struct StabilityConfig {
  int profile_order = 0;
  int h = 0;
  double alpha = 0.25;
  double eps_start = 0.2;
  int eps_count = 6;
  double eps_factor = 0.5;
  Vec3 patch_center = Vec3(0.5, 0.5, 0.0);
  double tangential_radius = 0.35;
  double normal_scale = 0.3;
  double E_h = 10.0;
};

struct SingularConfig {
  int m = 0;
  Vec3 z = Vec3(0.53125, 0.53125, 0.53125);
  double r_min = 0.125;
  double R = 0.4375;
};

struct SolveConfig {
  Expression g_re = Expression::constant(1.0), g_im = Expression::constant(0.0);
  Expression f_re = Expression::constant(0.0), f_im = Expression::constant(0.0);
};

struct RunConfig {
  nlohmann::json source;  ///< effective document after command-line overrides
  std::uint64_t fingerprint = 0;
  double extent = 1.0;
  int points = 17;
  medium::AprioriData apriori;
  ScalarSource mu_a, mu_s;
  std::optional<std::array<Expression, 9>> B;
  bool b_interior_support = false;
  SolveConfig solve;
  SingularConfig singular;
  StabilityConfig stability;
  std::string output = "otlab-out";
  std::uint64_t seed = 7;

  GridDomain grid() const { return GridDomain(extent, points); }
  medium::CoefficientFunctions coefficients() const;
  medium::OpticalMedium sample() const;
};

/// Validates the document and throws ValidationError with a JSON pointer to
/// the first offending field.
RunConfig parse_config(const nlohmann::json& doc);

/// The bundled default configuration.
const nlohmann::json& default_config();

/// Entry point of the otlab executable. Returns 0 on success, 2 on validation
/// or domain errors, 3 on numerical failures.
int run(int argc, char** argv);

}  // namespace otlab::cli
