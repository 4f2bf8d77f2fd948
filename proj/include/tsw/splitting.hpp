#pragma once

#include "tsw/types.hpp"

namespace tsw {

enum class SplittingMode { Linear, Circular };

// Orthogonal distance from y to the full line {x + t theta : t in R}.
double point_line_distance(const Vector& y, const Vector& root,
                           const Vector& direction);

// Row-stochastic softmax weights alpha(y)_i = softmax(sign * d(y, L)_i / tau).
// Linear mode uses the point-line distance; circular mode uses the distance
// to the projected point x + ||y - x - r theta_i|| theta_i.
SplitWeights splitting_euclidean(const Matrix& points, const TreeSystem& t,
                                 SplittingMode mode, double radius,
                                 double sign, double temperature);

// Spherical splitting: beta_i = arccos(<y, y_i> / sqrt(1 - <x,y>^2)) *
// sqrt(1 - <x,y>^2), with beta = 0 at y = +-x, then softmax over edges.
SplitWeights splitting_spherical(const Matrix& points, const SphericalTree& t);

}  // namespace tsw
