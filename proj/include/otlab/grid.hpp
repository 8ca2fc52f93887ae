#pragma once

#include <array>
#include <memory>
#include <vector>

#include "otlab/common.hpp"

namespace otlab {

/// Uniform node grid on the cube [0, extent]^3.
///
/// Nodes are numbered lexicographically, `id = (i * m + j) * m + k`. The
/// boundary and interior index sets are computed once and shared between
/// copies.
class GridDomain {
 public:
  static constexpr int kDim = 3;
  static constexpr int kMaxPointsPerAxis = 65;

  GridDomain() = default;
  GridDomain(double extent, int points_per_axis);

  int dimension() const noexcept { return kDim; }
  double extent() const noexcept { return extent_; }
  int points_per_axis() const noexcept { return m_; }
  double spacing() const noexcept { return h_; }
  int node_count() const noexcept { return m_ * m_ * m_; }

  int id(int i, int j, int k) const noexcept { return (i * m_ + j) * m_ + k; }
  std::array<int, 3> index(int id) const noexcept {
    return {id / (m_ * m_), (id / m_) % m_, id % m_};
  }
  Vec3 point(int id) const noexcept {
    const auto ijk = index(id);
    return {ijk[0] * h_, ijk[1] * h_, ijk[2] * h_};
  }
  bool on_boundary(int id) const noexcept;
  /// Number of axes along which the node sits on the boundary (0..3).
  int boundary_axes(int id) const noexcept;

  const std::vector<int>& boundary_nodes() const noexcept { return sets_->boundary; }
  const std::vector<int>& interior_nodes() const noexcept { return sets_->interior; }
  /// Position of a node inside boundary_nodes(), or -1.
  int boundary_position(int id) const noexcept { return sets_->boundary_pos[id]; }

  /// Trapezoidal volume weight of a node, h^3 halved per boundary axis.
  double volume_weight(int id) const noexcept;

  /// Nearest node to a point (clamped to the cube).
  int nearest_node(const Vec3& x) const noexcept;

  /// Trilinear interpolation of nodal samples; x is clamped to the cube.
  double interpolate(const std::vector<double>& values, const Vec3& x) const;
  bool contains(const Vec3& x, double slack = 1e-12) const noexcept;
  /// Euclidean distance from x to the closed cube (0 inside).
  double exterior_distance(const Vec3& x) const noexcept;
  /// Distance from an interior point to the cube surface.
  double boundary_distance(const Vec3& x) const noexcept;

  std::uint64_t fingerprint() const noexcept;

 private:
  struct IndexSets {
    std::vector<int> boundary;
    std::vector<int> interior;
    std::vector<int> boundary_pos;
  };
  double extent_ = 1.0;
  int m_ = 0;
  double h_ = 0.0;
  std::shared_ptr<const IndexSets> sets_;
};

/// Second-order nodal partial derivative along `axis`: central differences
/// inside, three-point one-sided differences on the faces.
template <class T>
T nodal_partial(const GridDomain& grid, const std::vector<T>& values, int id, int axis) {
  const int m = grid.points_per_axis();
  const double h = grid.spacing();
  auto ijk = grid.index(id);
  const int c = ijk[axis];
  auto at = [&](int shift) {
    auto p = ijk;
    p[axis] = c + shift;
    return values[grid.id(p[0], p[1], p[2])];
  };
  if (c == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (c == m - 1) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
  return (at(1) - at(-1)) / (2.0 * h);
}

}  // namespace otlab
