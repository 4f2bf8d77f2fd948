#include "tsw/distances.hpp"

#include <numeric>

#include "tsw/parallel.hpp"
#include "tsw/projection.hpp"
#include "tsw/rng.hpp"
#include "tsw/sampling.hpp"
#include "tsw/tree_ot.hpp"
#include "tree_eval.hpp"

namespace tsw {

namespace {

DistanceEstimate finish(std::vector<double> per_tree,
                        const DistanceConfig& cfg) {
  DistanceEstimate est;
  est.value = std::accumulate(per_tree.begin(), per_tree.end(), 0.0) /
              static_cast<double>(per_tree.size());
  est.per_tree = std::move(per_tree);
  est.config_echo = cfg;
  return est;
}

}  // namespace

std::vector<TreeSystem> sample_tree_systems(Index dim,
                                            const DistanceConfig& cfg) {
  cfg.validate(dim);
  std::vector<TreeSystem> trees;
  trees.reserve(static_cast<std::size_t>(cfg.num_trees));
  for (int j = 0; j < cfg.num_trees; ++j) {
    Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(j)));
    trees.push_back(sample_tree_system(dim, cfg.lines_per_tree, cfg.root_std,
                                       cfg.scheme, rng));
  }
  return trees;
}

std::vector<SphericalTree> sample_spherical_trees(Index sphere_dim,
                                                  const DistanceConfig& cfg) {
  cfg.validate(sphere_dim + 1);
  std::vector<SphericalTree> trees;
  trees.reserve(static_cast<std::size_t>(cfg.num_trees));
  for (int j = 0; j < cfg.num_trees; ++j) {
    Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(j)));
    trees.push_back(sample_spherical_tree(sphere_dim, cfg.lines_per_tree, rng));
  }
  return trees;
}

DistanceEstimate estimate_tsw_with_trees(const DiscreteMeasure& mu,
                                         const DiscreteMeasure& nu,
                                         const std::vector<TreeSystem>& trees,
                                         const DistanceConfig& cfg,
                                         TswMode mode, int threads) {
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  require(!trees.empty(), "need at least one tree");

  Matrix pa = mu.points;
  Matrix pb = nu.points;
  if (mode == TswMode::Spatial) {
    pa = spatial_map(pa, cfg.spatial_map);
    pb = spatial_map(pb, cfg.spatial_map);
  }
  const detail::TreeEvalParams par = detail::make_eval_params(cfg, mode);
  for (const TreeSystem& tree : trees) {
    require(tree.dim() == pa.cols(), "tree dimension mismatch");
  }

  std::vector<double> per_tree(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t j) {
    thread_local detail::Workspace ws;
    per_tree[j] = detail::euclidean_tree_value(pa, mu.weights, pb, nu.weights,
                                               trees[j], par, ws);
  });
  return finish(std::move(per_tree), cfg);
}

DistanceEstimate estimate_tsw(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu,
                              const DistanceConfig& cfg, TswMode mode,
                              int threads) {
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  cfg.validate(mu.dim());
  const std::vector<TreeSystem> trees = sample_tree_systems(mu.dim(), cfg);
  return estimate_tsw_with_trees(mu, nu, trees, cfg, mode, threads);
}

DistanceEstimate estimate_sw_with_directions(const DiscreteMeasure& mu,
                                             const DiscreteMeasure& nu,
                                             const Matrix& directions,
                                             int threads) {
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  require(directions.cols() == mu.dim(), "direction dimension mismatch");
  require(directions.rows() > 0, "need at least one direction");

  const Matrix qa = mu.points * directions.transpose();  // n_a x k
  const Matrix qb = nu.points * directions.transpose();

  std::vector<double> per_dir(static_cast<std::size_t>(directions.rows()));
  parallel_for(per_dir.size(), threads, [&](std::size_t j) {
    const Index c = static_cast<Index>(j);
    std::vector<ProjectedTreeMeasure::Atom> a(static_cast<std::size_t>(qa.rows()));
    std::vector<ProjectedTreeMeasure::Atom> b(static_cast<std::size_t>(qb.rows()));
    for (Index i = 0; i < qa.rows(); ++i) a[i] = {qa(i, c), mu.weights[i]};
    for (Index i = 0; i < qb.rows(); ++i) b[i] = {qb(i, c), nu.weights[i]};
    per_dir[j] = one_dim_w1(a, b);
  });

  DistanceEstimate est;
  est.value = std::accumulate(per_dir.begin(), per_dir.end(), 0.0) /
              static_cast<double>(per_dir.size());
  est.per_tree = std::move(per_dir);
  est.config_echo.num_trees = static_cast<int>(directions.rows());
  est.config_echo.lines_per_tree = 1;
  return est;
}

DistanceEstimate estimate_sw(const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, int num_projections,
                             std::uint64_t seed, int threads) {
  require(num_projections > 0, "num_projections must be positive");
  Matrix directions(num_projections, mu.dim());
  for (int j = 0; j < num_projections; ++j) {
    Rng rng(substream_seed(seed, static_cast<std::uint64_t>(j)));
    directions.row(j) = sample_unit_sphere(mu.dim(), rng);
  }
  DistanceEstimate est =
      estimate_sw_with_directions(mu, nu, directions, threads);
  est.config_echo.seed = seed;
  return est;
}

DistanceEstimate estimate_stsw_with_trees(
    const DiscreteMeasure& mu, const DiscreteMeasure& nu,
    const std::vector<SphericalTree>& trees, const DistanceConfig& cfg,
    StswMode mode, int threads) {
  require(mu.spherical && nu.spherical, "spherical measures required");
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  require(!trees.empty(), "need at least one tree");

  Matrix pa = mu.points;
  Matrix pb = nu.points;
  if (mode == StswMode::Spatial) {
    pa = spherical_spatial_map(pa);
    pb = spherical_spatial_map(pb);
  }
  for (const SphericalTree& tree : trees) {
    require(tree.ambient_dim() == pa.cols(), "tree dimension mismatch");
  }

  std::vector<double> per_tree(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t j) {
    thread_local detail::Workspace ws;
    per_tree[j] = detail::spherical_tree_value(pa, mu.weights, pb, nu.weights,
                                               trees[j], ws);
  });
  return finish(std::move(per_tree), cfg);
}

DistanceEstimate estimate_stsw(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu,
                               const DistanceConfig& cfg, StswMode mode,
                               int threads) {
  require(mu.spherical && nu.spherical, "spherical measures required");
  require(mu.dim() == nu.dim(), "measures must share the ambient dimension");
  const Index sphere_dim =
      mode == StswMode::Spatial ? mu.dim() : mu.dim() - 1;
  const std::vector<SphericalTree> trees =
      sample_spherical_trees(sphere_dim, cfg);
  return estimate_stsw_with_trees(mu, nu, trees, cfg, mode, threads);
}

}  // namespace tsw
