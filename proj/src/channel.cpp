#include "recyc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace recyc {

double AntennaLayout::min_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      best = std::min(best, (positions[i] - positions[j]).norm());
  return best;
}

namespace {

struct LatticeSite {
  int ring;
  double angle;
  Eigen::Vector2d position;
};

}  // namespace

AntennaLayout hex_layout(int n, double side) {
  require(n >= 1, ErrorKind::InvalidParameter, "hex_layout: n must be >= 1");
  require(side > 0.0, ErrorKind::InvalidParameter, "hex_layout: side must be > 0");

  const Eigen::Vector2d e1(side, 0.0);
  const Eigen::Vector2d e2(side / 2.0, side * std::numbers::sqrt3 / 2.0);

  // Ring r of the triangular lattice holds 6r sites; grow until n are covered.
  int rings = 0;
  while (1 + 3 * rings * (rings + 1) < n) ++rings;

  std::vector<LatticeSite> sites;
  for (int a = -rings; a <= rings; ++a) {
    for (int b = -rings; b <= rings; ++b) {
      const int ring = std::max({std::abs(a), std::abs(b), std::abs(a + b)});
      if (ring > rings) continue;
      const Eigen::Vector2d p = double(a) * e1 + double(b) * e2;
      double angle = b == 0 && a >= 0 ? 0.0 : std::atan2(p.y(), p.x());
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      sites.push_back({ring, angle, p});
    }
  }
  std::sort(sites.begin(), sites.end(), [](const LatticeSite& x, const LatticeSite& y) {
    return x.ring != y.ring ? x.ring < y.ring : x.angle < y.angle;
  });

  AntennaLayout layout;
  layout.positions.reserve(n);
  for (int i = 0; i < n; ++i) layout.positions.push_back(sites[i].position);
  return layout;
}

AntennaLayout ula_layout(int n, double spacing) {
  require(n >= 1, ErrorKind::InvalidParameter, "ula_layout: n must be >= 1");
  require(spacing > 0.0, ErrorKind::InvalidParameter, "ula_layout: spacing must be > 0");
  AntennaLayout layout;
  for (int i = 0; i < n; ++i) layout.positions.emplace_back(spacing * i, 0.0);
  return layout;
}

CouplingMatrix<double> coupling_from_layout(const AntennaLayout& layout, double alpha_ref,
                                            double d_ref, double exponent) {
  require(layout.size() >= 1, ErrorKind::InvalidParameter, "coupling_from_layout: empty layout");
  require(alpha_ref > 0.0 && alpha_ref < 1.0, ErrorKind::InvalidParameter,
          "coupling_from_layout: alpha_ref must lie in (0, 1)");
  require(d_ref > 0.0, ErrorKind::InvalidParameter, "coupling_from_layout: d_ref must be > 0");
  require(exponent >= 0.0, ErrorKind::InvalidParameter,
          "coupling_from_layout: exponent must be >= 0");

  const int m = layout.size();
  MatrixX<double> alpha = MatrixX<double>::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    for (int l = k + 1; l < m; ++l) {
      const double d = (layout.positions[k] - layout.positions[l]).norm();
      require(d > 0.0, ErrorKind::InvalidParameter,
              "coupling_from_layout: antennas " + std::to_string(k) + " and " +
                  std::to_string(l) + " coincide");
      const double a = std::min(alpha_ref * std::pow(d_ref / d, exponent), kCouplingCap);
      alpha(k, l) = a;
      alpha(l, k) = a;
    }
  }
  return CouplingMatrix<double>::from_matrix(std::move(alpha));
}

}  // namespace recyc
