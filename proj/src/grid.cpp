#include "otlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace otlab {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

GridDomain::GridDomain(double extent, int points_per_axis) : extent_(extent), m_(points_per_axis) {
  if (!(extent > 0.0)) throw DomainError("grid extent must be positive");
  if (points_per_axis < 9 || points_per_axis % 2 == 0)
    throw DomainError("points per axis must be odd and at least 9");
  if (points_per_axis > kMaxPointsPerAxis)
    throw DomainError("points per axis exceeds the grid cap of " + std::to_string(kMaxPointsPerAxis));
  h_ = extent / (m_ - 1);
  auto sets = std::make_shared<IndexSets>();
  sets->boundary_pos.assign(node_count(), -1);
  for (int id = 0; id < node_count(); ++id) {
    if (on_boundary(id)) {
      sets->boundary_pos[id] = static_cast<int>(sets->boundary.size());
      sets->boundary.push_back(id);
    } else {
      sets->interior.push_back(id);
    }
  }
  sets_ = std::move(sets);
}

bool GridDomain::on_boundary(int id) const noexcept { return boundary_axes(id) > 0; }

int GridDomain::boundary_axes(int id) const noexcept {
  const auto ijk = index(id);
  int count = 0;
  for (int c : ijk) count += (c == 0 || c == m_ - 1) ? 1 : 0;
  return count;
}

double GridDomain::volume_weight(int id) const noexcept {
  return h_ * h_ * h_ * std::ldexp(1.0, -boundary_axes(id));
}

int GridDomain::nearest_node(const Vec3& x) const noexcept {
  std::array<int, 3> ijk{};
  for (int d = 0; d < 3; ++d) {
    const long c = std::lround(x[d] / h_);
    ijk[d] = static_cast<int>(std::clamp<long>(c, 0, m_ - 1));
  }
  return id(ijk[0], ijk[1], ijk[2]);
}

double GridDomain::interpolate(const std::vector<double>& values, const Vec3& x) const {
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int d = 0; d < 3; ++d) {
    const double s = std::clamp(x[d] / h_, 0.0, static_cast<double>(m_ - 1));
    int b = static_cast<int>(std::floor(s));
    if (b >= m_ - 1) b = m_ - 2;
    base[d] = b;
    frac[d] = s - b;
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int di = (c >> 2) & 1, dj = (c >> 1) & 1, dk = c & 1;
    const double w = (di ? frac[0] : 1 - frac[0]) * (dj ? frac[1] : 1 - frac[1]) * (dk ? frac[2] : 1 - frac[2]);
    if (w != 0.0) acc += w * values[id(base[0] + di, base[1] + dj, base[2] + dk)];
  }
  return acc;
}

bool GridDomain::contains(const Vec3& x, double slack) const noexcept {
  for (int d = 0; d < 3; ++d)
    if (x[d] < -slack || x[d] > extent_ + slack) return false;
  return true;
}

double GridDomain::exterior_distance(const Vec3& x) const noexcept {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double out = std::max({0.0, -x[d], x[d] - extent_});
    s += out * out;
  }
  return std::sqrt(s);
}

double GridDomain::boundary_distance(const Vec3& x) const noexcept {
  double dist = extent_;
  for (int d = 0; d < 3; ++d) dist = std::min({dist, x[d], extent_ - x[d]});
  return std::max(dist, 0.0);
}

std::uint64_t GridDomain::fingerprint() const noexcept {
  Fnv1a f;
  f.update("grid");
  f.update_value(extent_);
  f.update_value(m_);
  return f.digest();
}

}  // namespace otlab
