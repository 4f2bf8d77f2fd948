#include "tsw/splitting.hpp"

#include <algorithm>
#include <cmath>

namespace tsw {

namespace {

void softmax_rows_inplace(Matrix& scores) {
  for (Index j = 0; j < scores.rows(); ++j) {
    const double m = scores.row(j).maxCoeff();
    scores.row(j) = (scores.row(j).array() - m).exp();
    scores.row(j) /= scores.row(j).sum();
  }
}

}  // namespace

double point_line_distance(const Vector& y, const Vector& root,
                           const Vector& direction) {
  require(y.size() == root.size() && y.size() == direction.size(),
          "point_line_distance: dimension mismatch");
  const Vector v = y - root;
  const Vector residual = v - v.dot(direction) * direction;
  return residual.norm();
}

SplitWeights splitting_euclidean(const Matrix& points, const TreeSystem& t,
                                 SplittingMode mode, double radius,
                                 double sign, double temperature) {
  require(points.cols() == t.dim(), "splitting: dimension mismatch");
  require(temperature > 0.0, "splitting: temperature must be > 0");
  require(radius >= 0.0, "splitting: radius must be >= 0");
  const Index n = points.rows();
  const Index k = t.lines();
  Matrix scores(n, k);
  const Matrix centered = points.rowwise() - t.root.transpose();
  for (Index i = 0; i < k; ++i) {
    const Vector theta = t.directions.row(i).transpose();
    for (Index j = 0; j < n; ++j) {
      const Vector v = centered.row(j).transpose();
      double dist;
      if (mode == SplittingMode::Linear) {
        dist = (v - v.dot(theta) * theta).norm();
      } else {
        const double coord = (v - radius * theta).norm();
        dist = (v - coord * theta).norm();
      }
      scores(j, i) = sign * dist / temperature;
    }
  }
  softmax_rows_inplace(scores);
  return SplitWeights{std::move(scores)};
}

SplitWeights splitting_spherical(const Matrix& points, const SphericalTree& t) {
  require(points.cols() == t.ambient_dim(), "splitting: dimension mismatch");
  const Index n = points.rows();
  const Index k = t.lines();
  Matrix scores(n, k);
  for (Index j = 0; j < n; ++j) {
    const double u = std::clamp(points.row(j).dot(t.root.transpose()), -1.0, 1.0);
    const double rho_sq = 1.0 - u * u;
    if (rho_sq < 1e-24) {
      // At the poles every edge is equidistant; beta degenerates to zero.
      scores.row(j).setZero();
      continue;
    }
    const double rho = std::sqrt(rho_sq);
    for (Index i = 0; i < k; ++i) {
      const double q = points.row(j).dot(t.edges.row(i));
      const double w = std::clamp(q / rho, -1.0, 1.0);
      scores(j, i) = std::acos(w) * rho;
    }
  }
  softmax_rows_inplace(scores);
  return SplitWeights{std::move(scores)};
}

}  // namespace tsw
