#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "tsw/types.hpp"

namespace tsw::detail {

enum class ProjKind { Linear, Circular, CircularShared };

struct TreeEvalParams {
  ProjKind proj = ProjKind::Linear;
  double radius = 0.0;
  double sign = 1.0;
  double temperature = 1.0;
};

inline TreeEvalParams make_eval_params(const DistanceConfig& cfg,
                                       TswMode mode) {
  TreeEvalParams par;
  par.sign = cfg.splitting_sign;
  par.temperature = cfg.splitting_temperature;
  switch (mode) {
    case TswMode::DbLinear:
    case TswMode::Spatial:
      par.proj = ProjKind::Linear;
      par.radius = 0.0;
      break;
    case TswMode::Circular:
      par.proj = cfg.radius == 0.0 ? ProjKind::CircularShared
                                   : ProjKind::Circular;
      par.radius = cfg.radius;
      break;
    case TswMode::CircularR0:
      par.proj = ProjKind::CircularShared;
      par.radius = 0.0;
      break;
  }
  return par;
}

// Proximity to non-smooth configurations, used to exclude instances from
// finite-difference comparisons rather than fail them.
struct TieDiag {
  double min_gap = std::numeric_limits<double>::infinity();
  double min_abs_prefix = std::numeric_limits<double>::infinity();
  double min_denom = std::numeric_limits<double>::infinity();

  void merge(const TieDiag& o) {
    min_gap = std::min(min_gap, o.min_gap);
    min_abs_prefix = std::min(min_abs_prefix, o.min_abs_prefix);
    min_denom = std::min(min_denom, o.min_denom);
  }
};

struct Workspace {
  Matrix va, vb;
  Vector sqa, sqb;
  Matrix qa, qb;
  Matrix ta, tb;          // coordinates (n x k, or n x 1 when shared)
  Matrix alpha_a, alpha_b;
  Matrix grad_t, dalpha;  // per-line coordinate/mass sensitivities (a side)
  std::vector<std::int32_t> order;
  std::vector<double> coord, mass, prefix, suffix;
  std::vector<std::int32_t> tag;
};

// W1 on one tree between projected/split measures. pa/pb are points already
// living in the space the tree was sampled in. If grad_a is non-null it must
// be zero-initialised (n_a x d) and receives the gradient with respect to pa.
double euclidean_tree_value(const Matrix& pa, const Vector& wa,
                            const Matrix& pb, const Vector& wb,
                            const TreeSystem& tree, const TreeEvalParams& par,
                            Workspace& ws, Matrix* grad_a = nullptr,
                            TieDiag* diag = nullptr);

// Spherical counterpart; coordinates arccos(<root, y>) shared across edges,
// splitting by the tangent-angle softmax. Gradients are ambient.
double spherical_tree_value(const Matrix& pa, const Vector& wa,
                            const Matrix& pb, const Vector& wb,
                            const SphericalTree& tree, Workspace& ws,
                            Matrix* grad_a = nullptr, TieDiag* diag = nullptr);

}  // namespace tsw::detail
