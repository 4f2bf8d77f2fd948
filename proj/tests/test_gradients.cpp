#include <cmath>
#include <vector>

#include "doctest.h"
#include "tsw/distances.hpp"
#include "tsw/gradients.hpp"
#include "tsw/rng.hpp"
#include "tsw/sampling.hpp"

using namespace tsw;

namespace {

DiscreteMeasure random_measure(Rng& rng, Index n, Index d) {
  Matrix pts(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) pts(i, c) = rng.normal();
  return DiscreteMeasure::uniform(std::move(pts));
}

DiscreteMeasure random_sphere_measure(Rng& rng, Index n, Index ambient) {
  Matrix pts(n, ambient);
  for (Index i = 0; i < n; ++i) pts.row(i) = sample_unit_sphere(ambient, rng);
  return DiscreteMeasure::uniform(std::move(pts), true);
}

DistanceConfig small_config(std::uint64_t seed, TswMode mode) {
  DistanceConfig cfg;
  cfg.num_trees = 3;
  cfg.lines_per_tree = 3;
  cfg.seed = seed;
  if (mode == TswMode::Circular) cfg.radius = 0.7;
  if (mode == TswMode::Spatial) {
    cfg.spatial_map.kind = SpatialMapConfig::Kind::OddPoly;
    cfg.spatial_map.degree = 3;
    cfg.spatial_map.gamma = 0.5;
  }
  return cfg;
}

}  // namespace

TEST_CASE("analytic euclidean gradients match central differences") {
  Rng rng(1);
  for (const TswMode mode : {TswMode::DbLinear, TswMode::Spatial,
                             TswMode::Circular, TswMode::CircularR0}) {
    int checked = 0;
    std::uint64_t seed = 500;
    while (checked < 8) {
      ++seed;
      const Index d = 2 + checked % 3;
      const DiscreteMeasure mu = random_measure(rng, 5, d);
      const DiscreteMeasure nu = random_measure(rng, 6, d);
      const DistanceConfig cfg = small_config(seed, mode);
      const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);
      const FiniteDiffReport rep =
          finite_diff_check_tsw(mu, nu, trees, cfg, mode);
      if (rep.tie_flagged) continue;  // degenerate geometry: redraw
      CHECK(rep.max_rel_err < 1e-4);
      ++checked;
    }
  }
}

TEST_CASE("analytic spherical gradients match central differences") {
  Rng rng(2);
  for (const StswMode mode : {StswMode::Plain, StswMode::Spatial}) {
    int checked = 0;
    std::uint64_t seed = 900;
    while (checked < 8) {
      ++seed;
      const DiscreteMeasure mu = random_sphere_measure(rng, 5, 3);
      const DiscreteMeasure nu = random_sphere_measure(rng, 6, 3);
      DistanceConfig cfg;
      cfg.num_trees = 3;
      cfg.lines_per_tree = 3;
      cfg.seed = seed;
      const Index sphere_dim = mode == StswMode::Spatial ? 3 : 2;
      const std::vector<SphericalTree> trees =
          sample_spherical_trees(sphere_dim, cfg);
      const FiniteDiffReport rep =
          finite_diff_check_stsw(mu, nu, trees, cfg, mode);
      if (rep.tie_flagged) continue;
      CHECK(rep.max_rel_err < 1e-3);
      ++checked;
    }
  }
}

TEST_CASE("finite-difference harness is exact on a quadratic") {
  // Validates the step-size choice on f(x) = ||x||^2 with known gradient 2x.
  Rng rng(3);
  Vector x(6);
  for (Index i = 0; i < 6; ++i) x[i] = rng.normal();
  const double step = 1e-6;
  for (Index i = 0; i < 6; ++i) {
    Vector up = x, dn = x;
    up[i] += step;
    dn[i] -= step;
    const double fd = (up.squaredNorm() - dn.squaredNorm()) / (2.0 * step);
    CHECK(std::abs(fd - 2.0 * x[i]) < 1e-8);
  }
}

TEST_CASE("gradient is exactly zero at mu = nu with paired trees") {
  Rng rng(4);
  for (const TswMode mode : {TswMode::DbLinear, TswMode::Spatial,
                             TswMode::Circular, TswMode::CircularR0}) {
    const DiscreteMeasure mu = random_measure(rng, 7, 3);
    const DistanceConfig cfg = small_config(42, mode);
    const std::vector<TreeSystem> trees = sample_tree_systems(3, cfg);
    const GradientField g = grad_tsw_with_trees(mu, mu, trees, cfg, mode);
    CHECK(g.values.cwiseAbs().maxCoeff() == 0.0);
  }
  const DiscreteMeasure sm = random_sphere_measure(rng, 7, 3);
  for (const StswMode mode : {StswMode::Plain, StswMode::Spatial}) {
    DistanceConfig cfg;
    cfg.num_trees = 3;
    cfg.lines_per_tree = 3;
    cfg.seed = 43;
    const Index sphere_dim = mode == StswMode::Spatial ? 3 : 2;
    const std::vector<SphericalTree> trees =
        sample_spherical_trees(sphere_dim, cfg);
    const GradientField g = grad_stsw_with_trees(sm, sm, trees, cfg, mode);
    CHECK(g.values.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("first-order Taylor expansion holds along random directions") {
  Rng rng(5);
  for (const TswMode mode :
       {TswMode::DbLinear, TswMode::Circular, TswMode::CircularR0}) {
    const Index d = 3;
    const DiscreteMeasure mu = random_measure(rng, 6, d);
    const DiscreteMeasure nu = random_measure(rng, 5, d);
    const DistanceConfig cfg = small_config(7, mode);
    const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);

    const auto value = [&](const Matrix& pts) {
      return estimate_tsw_with_trees(DiscreteMeasure(pts, mu.weights), nu,
                                     trees, cfg, mode)
          .value;
    };
    const GradientField g = grad_tsw_with_trees(mu, nu, trees, cfg, mode);

    Matrix v(mu.size(), d);
    for (Index i = 0; i < v.rows(); ++i)
      for (Index c = 0; c < d; ++c) v(i, c) = rng.normal();
    v /= v.norm();

    const double f0 = value(mu.points);
    const double dir = (g.values.array() * v.array()).sum();
    const double e3 =
        std::abs(value(mu.points + 1e-3 * v) - f0 - 1e-3 * dir);
    const double e4 =
        std::abs(value(mu.points + 1e-4 * v) - f0 - 1e-4 * dir);
    CHECK(e3 < 1e-4);
    CHECK(e4 < e3 / 5.0 + 1e-12);  // at least superlinear decay
  }
}

TEST_CASE("translation equivariance of euclidean gradients") {
  Rng rng(6);
  for (const TswMode mode : {TswMode::DbLinear, TswMode::Circular}) {
    const Index d = 3;
    const DiscreteMeasure mu = random_measure(rng, 6, d);
    const DiscreteMeasure nu = random_measure(rng, 5, d);
    const DistanceConfig cfg = small_config(11, mode);
    const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);

    Vector shift(d);
    for (Index c = 0; c < d; ++c) shift[c] = rng.normal();
    const IsometryEd g(Matrix::Identity(d, d), shift);
    std::vector<TreeSystem> strees;
    for (const TreeSystem& t : trees) strees.push_back(apply_isometry(g, t));

    const GradientField base = grad_tsw_with_trees(mu, nu, trees, cfg, mode);
    const GradientField moved = grad_tsw_with_trees(
        apply_isometry(g, mu), apply_isometry(g, nu), strees, cfg, mode);
    CHECK((base.values - moved.values).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("gradients stay finite on degenerate inputs") {
  Rng rng(7);
  DistanceConfig cfg;
  cfg.num_trees = 2;
  cfg.lines_per_tree = 3;
  cfg.radius = 0.5;
  for (int trial = 0; trial < 400; ++trial) {
    const Index d = 2 + trial % 3;
    cfg.seed = trial;
    Matrix pts(6, d);
    for (Index i = 0; i < 6; ++i)
      for (Index c = 0; c < d; ++c) pts(i, c) = rng.normal();
    pts.row(1) = pts.row(0);       // coincident within mu
    Matrix quts = pts;             // several points shared across measures
    quts.row(4).setZero();         // and one at the tree root's typical scale
    const DiscreteMeasure mu = DiscreteMeasure::uniform(pts);
    const DiscreteMeasure nu = DiscreteMeasure::uniform(quts);
    const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);
    for (const TswMode mode : {TswMode::DbLinear, TswMode::Spatial,
                               TswMode::Circular, TswMode::CircularR0}) {
      const GradientField g = grad_tsw_with_trees(mu, nu, trees, cfg, mode);
      CHECK(g.values.allFinite());
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    cfg.seed = 5000 + trial;
    Matrix pts(5, 3);
    for (Index i = 0; i < 5; ++i) pts.row(i) = sample_unit_sphere(3, rng);
    pts.row(1) = pts.row(0);
    const DiscreteMeasure mu = DiscreteMeasure::uniform(pts, true);
    Matrix quts = pts;
    quts.row(3) = -quts.row(0);  // antipodal pairs stress the pole branch
    const DiscreteMeasure nu = DiscreteMeasure::uniform(quts, true);
    for (const StswMode mode : {StswMode::Plain, StswMode::Spatial}) {
      const Index sphere_dim = mode == StswMode::Spatial ? 3 : 2;
      const std::vector<SphericalTree> trees =
          sample_spherical_trees(sphere_dim, cfg);
      const GradientField g = grad_stsw_with_trees(mu, nu, trees, cfg, mode);
      CHECK(g.values.allFinite());
    }
  }
}

TEST_CASE("gradient points roughly from source toward target for two atoms") {
  // Single points mu = {x}, nu = {y}: the estimate decreases by moving x
  // toward y, so <grad, x - y> must be >= 0.
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix px(1, 3), py(1, 3);
    for (Index c = 0; c < 3; ++c) {
      px(0, c) = rng.normal();
      py(0, c) = rng.normal();
    }
    const DiscreteMeasure mu = DiscreteMeasure::uniform(px);
    const DiscreteMeasure nu = DiscreteMeasure::uniform(py);
    DistanceConfig cfg;
    cfg.num_trees = 8;
    cfg.lines_per_tree = 4;
    cfg.seed = trial;
    const std::vector<TreeSystem> trees = sample_tree_systems(3, cfg);
    const GradientField g =
        grad_tsw_with_trees(mu, nu, trees, cfg, TswMode::DbLinear);
    const double along = (g.values.row(0) * (px.row(0) - py.row(0)).transpose())(0);
    CHECK(along >= 0.0);
  }
}
