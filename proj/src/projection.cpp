#include "tsw/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tsw {

CoordinateMatrix project_linear(const DiscreteMeasure& m, const TreeSystem& t) {
  require(m.dim() == t.dim(), "project_linear: dimension mismatch");
  const Matrix centered = m.points.rowwise() - t.root.transpose();
  CoordinateMatrix out;
  out.values = t.directions * centered.transpose();  // k x n
  out.range = CoordinateMatrix::Range::RealLine;
  return out;
}

CoordinateMatrix project_circular(const DiscreteMeasure& m, const TreeSystem& t,
                                  double radius) {
  require(m.dim() == t.dim(), "project_circular: dimension mismatch");
  require(radius >= 0.0, "project_circular: radius must be >= 0");
  const Index n = m.size();
  const Index k = t.lines();
  const Matrix centered = m.points.rowwise() - t.root.transpose();
  CoordinateMatrix out;
  out.range = CoordinateMatrix::Range::NonnegRay;
  out.values.resize(k, n);
  if (radius == 0.0) {
    const Vector norms = centered.rowwise().norm();
    for (Index i = 0; i < k; ++i) out.values.row(i) = norms.transpose();
    return out;
  }
  for (Index i = 0; i < k; ++i) {
    const Matrix shifted =
        centered.rowwise() - radius * t.directions.row(i);
    out.values.row(i) = shifted.rowwise().norm().transpose();
  }
  return out;
}

Matrix spatial_map(const Matrix& points, const SpatialMapConfig& cfg) {
  cfg.validate();
  if (cfg.kind == SpatialMapConfig::Kind::Identity) return points;
  Matrix out = points;
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      const double y = points(i, j);
      out(i, j) = y + cfg.gamma * std::pow(y, cfg.degree);
    }
  }
  return out;
}

CoordinateMatrix project_spherical(const DiscreteMeasure& m,
                                   const SphericalTree& t) {
  require(m.dim() == t.ambient_dim(), "project_spherical: dimension mismatch");
  require(m.spherical, "project_spherical: measure must live on the sphere");
  const Index n = m.size();
  CoordinateMatrix out;
  out.range = CoordinateMatrix::Range::Arc0Pi;
  out.values.resize(1, n);
  for (Index j = 0; j < n; ++j) {
    const double dot = std::clamp(m.points.row(j).dot(t.root.transpose()), -1.0, 1.0);
    out.values(0, j) = std::acos(dot);
  }
  return out;
}

Matrix spherical_spatial_map(const Matrix& points, double eps) {
  const Index n = points.rows();
  const Index ambient = points.cols();
  require(ambient >= 2, "spherical_spatial_map: ambient dimension must be >= 2");
  Matrix out(n, ambient + 1);
  const double scale = std::numbers::pi / (2.0 * (1.0 + eps));
  for (Index j = 0; j < n; ++j) {
    const double mean = points.row(j).sum() / static_cast<double>(ambient);
    const double k = scale * (mean + 1.0 + eps);
    out(j, 0) = std::cos(k);
    out.row(j).tail(ambient) = std::sin(k) * points.row(j);
  }
  return out;
}

}  // namespace tsw
