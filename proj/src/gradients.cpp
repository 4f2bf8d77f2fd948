#include "tsw/gradients.hpp"

#include <cmath>
#include <numbers>

#include "tsw/distances.hpp"
#include "tsw/parallel.hpp"
#include "tsw/projection.hpp"
#include "tree_eval.hpp"

namespace tsw {

namespace {

// Diagonal of dh/dy for the elementwise odd-polynomial map, at raw points.
Matrix odd_poly_jacobian(const Matrix& raw, const SpatialMapConfig& cfg) {
  Matrix jac = Matrix::Ones(raw.rows(), raw.cols());
  if (cfg.kind == SpatialMapConfig::Kind::OddPoly) {
    const double scale = cfg.gamma * static_cast<double>(cfg.degree);
    for (Index i = 0; i < raw.rows(); ++i) {
      for (Index c = 0; c < raw.cols(); ++c) {
        jac(i, c) += scale * std::pow(raw(i, c), cfg.degree - 1);
      }
    }
  }
  return jac;
}

// Pull an ambient gradient on the lifted sphere S^(d+1) back through
// h(y) = (cos k(y), sin k(y) * y), k(y) = c (mean(y) + 1 + eps).
Matrix pull_back_lift(const Matrix& raw, const Matrix& lifted_grad) {
  const double eps = kSphericalLiftEps;
  const double c = std::numbers::pi / (2.0 * (1.0 + eps));
  const Index n = raw.rows();
  const Index d = raw.cols();
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) {
    const double k = c * (raw.row(i).mean() + 1.0 + eps);
    const double sk = std::sin(k);
    const double ck = std::cos(k);
    const double gy = lifted_grad.row(i).tail(d).dot(raw.row(i));
    const double dk = (c / static_cast<double>(d)) *
                      (-lifted_grad(i, 0) * sk + ck * gy);
    for (Index j = 0; j < d; ++j) {
      out(i, j) = dk + sk * lifted_grad(i, 1 + j);
    }
  }
  return out;
}

// Mean gradient over trees, accumulated in tree-index order.
Matrix mean_tree_gradient(std::vector<Matrix>& per_tree) {
  Matrix total = Matrix::Zero(per_tree[0].rows(), per_tree[0].cols());
  for (const Matrix& g : per_tree) total += g;
  return total / static_cast<double>(per_tree.size());
}

bool flag_threshold_hit(const detail::TieDiag& diag,
                        const FiniteDiffOptions& opt, double denom_floor) {
  return diag.min_gap < opt.gap_floor ||
         diag.min_abs_prefix < opt.prefix_floor ||
         diag.min_denom < denom_floor;
}

}  // namespace

GradientField grad_tsw_with_trees(const DiscreteMeasure& mu,
                                  const DiscreteMeasure& nu,
                                  const std::vector<TreeSystem>& trees,
                                  const DistanceConfig& cfg, TswMode mode,
                                  int threads) {
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  require(!trees.empty(), "need at least one tree");

  Matrix pa = mu.points;
  Matrix pb = nu.points;
  if (mode == TswMode::Spatial) {
    pa = spatial_map(pa, cfg.spatial_map);
    pb = spatial_map(pb, cfg.spatial_map);
  }
  const detail::TreeEvalParams par = detail::make_eval_params(cfg, mode);

  std::vector<Matrix> per_tree(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t j) {
    thread_local detail::Workspace ws;
    per_tree[j] = Matrix::Zero(pa.rows(), pa.cols());
    detail::euclidean_tree_value(pa, mu.weights, pb, nu.weights, trees[j], par,
                                 ws, &per_tree[j]);
  });

  GradientField field;
  field.values = mean_tree_gradient(per_tree);
  if (mode == TswMode::Spatial) {
    field.values =
        field.values.cwiseProduct(odd_poly_jacobian(mu.points, cfg.spatial_map));
  }
  return field;
}

GradientField grad_tsw(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const DistanceConfig& cfg, TswMode mode, int threads) {
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  cfg.validate(mu.dim());
  const std::vector<TreeSystem> trees = sample_tree_systems(mu.dim(), cfg);
  return grad_tsw_with_trees(mu, nu, trees, cfg, mode, threads);
}

GradientField grad_stsw_with_trees(const DiscreteMeasure& mu,
                                   const DiscreteMeasure& nu,
                                   const std::vector<SphericalTree>& trees,
                                   const DistanceConfig& cfg, StswMode mode,
                                   int threads) {
  require(mu.spherical && nu.spherical, "spherical measures required");
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  require(!trees.empty(), "need at least one tree");

  Matrix pa = mu.points;
  Matrix pb = nu.points;
  if (mode == StswMode::Spatial) {
    pa = spherical_spatial_map(pa);
    pb = spherical_spatial_map(pb);
  }

  std::vector<Matrix> per_tree(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t j) {
    thread_local detail::Workspace ws;
    per_tree[j] = Matrix::Zero(pa.rows(), pa.cols());
    detail::spherical_tree_value(pa, mu.weights, pb, nu.weights, trees[j], ws,
                                 &per_tree[j]);
  });

  GradientField field;
  field.values = mean_tree_gradient(per_tree);
  if (mode == StswMode::Spatial) {
    field.values = pull_back_lift(mu.points, field.values);
  }
  return field;
}

GradientField grad_stsw(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const DistanceConfig& cfg, StswMode mode,
                        int threads) {
  require(mu.spherical && nu.spherical, "spherical measures required");
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  const Index sphere_dim = mode == StswMode::Spatial ? mu.dim() : mu.dim() - 1;
  const std::vector<SphericalTree> trees =
      sample_spherical_trees(sphere_dim, cfg);
  return grad_stsw_with_trees(mu, nu, trees, cfg, mode, threads);
}

namespace {

template <typename ValueFn>
FiniteDiffReport central_difference_report(const Matrix& analytic,
                                           Matrix raw, ValueFn&& value,
                                           const FiniteDiffOptions& opt) {
  FiniteDiffReport report;
  double max_fd = 0.0;
  for (Index i = 0; i < raw.rows(); ++i) {
    for (Index c = 0; c < raw.cols(); ++c) {
      const double saved = raw(i, c);
      raw(i, c) = saved + opt.step;
      const double up = value(raw);
      raw(i, c) = saved - opt.step;
      const double down = value(raw);
      raw(i, c) = saved;
      const double fd = (up - down) / (2.0 * opt.step);
      max_fd = std::max(max_fd, std::abs(fd));
      report.max_abs_err =
          std::max(report.max_abs_err, std::abs(analytic(i, c) - fd));
    }
  }
  report.max_rel_err = report.max_abs_err / std::max(max_fd, 1e-12);
  return report;
}

}  // namespace

FiniteDiffReport finite_diff_check_tsw(const DiscreteMeasure& mu,
                                       const DiscreteMeasure& nu,
                                       const std::vector<TreeSystem>& trees,
                                       const DistanceConfig& cfg, TswMode mode,
                                       const FiniteDiffOptions& opt) {
  const GradientField analytic = grad_tsw_with_trees(mu, nu, trees, cfg, mode);
  const detail::TreeEvalParams par = detail::make_eval_params(cfg, mode);

  Matrix pb = nu.points;
  if (mode == TswMode::Spatial) pb = spatial_map(pb, cfg.spatial_map);

  detail::Workspace ws;
  detail::TieDiag diag;
  const auto value = [&](const Matrix& raw, detail::TieDiag* d) {
    const Matrix pa =
        mode == TswMode::Spatial ? spatial_map(raw, cfg.spatial_map) : raw;
    double acc = 0.0;
    for (const TreeSystem& tree : trees) {
      acc += detail::euclidean_tree_value(pa, mu.weights, pb, nu.weights, tree,
                                          par, ws, nullptr, d);
    }
    return acc / static_cast<double>(trees.size());
  };

  value(mu.points, &diag);  // collect degeneracy margins at the base point
  FiniteDiffReport report = central_difference_report(
      analytic.values, mu.points,
      [&](const Matrix& raw) { return value(raw, nullptr); }, opt);
  report.tie_flagged = flag_threshold_hit(diag, opt, opt.denom_floor);
  return report;
}

FiniteDiffReport finite_diff_check_stsw(
    const DiscreteMeasure& mu, const DiscreteMeasure& nu,
    const std::vector<SphericalTree>& trees, const DistanceConfig& cfg,
    StswMode mode, const FiniteDiffOptions& opt) {
  const GradientField analytic =
      grad_stsw_with_trees(mu, nu, trees, cfg, mode);

  Matrix pb = nu.points;
  if (mode == StswMode::Spatial) pb = spherical_spatial_map(pb);

  detail::Workspace ws;
  detail::TieDiag diag;
  const auto value = [&](const Matrix& raw, detail::TieDiag* d) {
    const Matrix pa =
        mode == StswMode::Spatial ? spherical_spatial_map(raw) : raw;
    double acc = 0.0;
    for (const SphericalTree& tree : trees) {
      acc += detail::spherical_tree_value(pa, mu.weights, pb, nu.weights, tree,
                                          ws, nullptr, d);
    }
    return acc / static_cast<double>(trees.size());
  };

  value(mu.points, &diag);
  FiniteDiffOptions sphere_opt = opt;
  sphere_opt.step = opt.sphere_step;
  FiniteDiffReport report = central_difference_report(
      analytic.values, mu.points,
      [&](const Matrix& raw) { return value(raw, nullptr); }, sphere_opt);
  report.tie_flagged = flag_threshold_hit(diag, opt, opt.sphere_denom_floor);
  return report;
}

}  // namespace tsw
