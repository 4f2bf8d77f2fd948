#pragma once

#include "tsw/types.hpp"

namespace tsw {

// t_i(y) = <y - x, theta_i>.
CoordinateMatrix project_linear(const DiscreteMeasure& m, const TreeSystem& t);

// t_i(y) = ||y - x - r theta_i||_2. r = 0 takes a fused path that computes
// the shared coordinate once; it is bit-identical to the general path.
CoordinateMatrix project_circular(const DiscreteMeasure& m, const TreeSystem& t,
                                  double radius);

// Elementwise y + gamma * y^degree (odd degree), an injective map that
// sharpens clusters before linear projection.
Matrix spatial_map(const Matrix& points, const SpatialMapConfig& cfg);

// Geodesic distance to the root, arccos(<x, y>) in [0, pi]; one row since all
// edges of a spherical tree share the coordinate.
CoordinateMatrix project_spherical(const DiscreteMeasure& m,
                                   const SphericalTree& t);

inline constexpr double kSphericalLiftEps = 1e-6;

// Injective lift S^d -> S^(d+1):
//   k(y) = pi / (2 (1 + eps)) * (mean(y) + 1 + eps)
//   h(y) = (cos k(y), sin k(y) * y)
Matrix spherical_spatial_map(const Matrix& points,
                             double eps = kSphericalLiftEps);

}  // namespace tsw
