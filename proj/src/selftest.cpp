#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "tsw/cli.hpp"
#include "tsw/distances.hpp"
#include "tsw/flows.hpp"
#include "tsw/gradients.hpp"
#include "tsw/rng.hpp"
#include "tsw/sampling.hpp"

namespace tsw {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

Matrix gaussian_points(Index n, Index d, Rng& rng) {
  Matrix pts(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) pts(i, j) = rng.normal();
  }
  return pts;
}

DiscreteMeasure random_measure(Index n, Index d, Rng& rng) {
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = rng.uniform(0.2, 1.0);
  w /= w.sum();
  return DiscreteMeasure(gaussian_points(n, d, rng), std::move(w));
}

DiscreteMeasure random_sphere_measure(Index n, Index d, Rng& rng) {
  Matrix pts(n, d);
  for (Index i = 0; i < n; ++i) {
    pts.row(i) = sample_unit_sphere(d, rng).transpose();
  }
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = rng.uniform(0.2, 1.0);
  w /= w.sum();
  return DiscreteMeasure(std::move(pts), std::move(w), true);
}

struct SpiderInstance {
  ProjectedTreeMeasure a;
  ProjectedTreeMeasure b;
  std::vector<std::vector<double>> coords_a, coords_b;
  std::vector<std::vector<std::int64_t>> units_a, units_b;
  std::int64_t total_units = 0;
};

// Mixed grid/continuous coordinates so coincidences and ties occur; integer
// unit masses keep the LP oracle exact.
SpiderInstance random_spider_instance(Rng& rng) {
  SpiderInstance inst;
  const std::size_t k = 1 + std::size_t(rng.next_u64() % 4);
  inst.coords_a.resize(k);
  inst.coords_b.resize(k);
  inst.units_a.resize(k);
  inst.units_b.resize(k);
  auto coord = [&rng]() {
    if (rng.next_u64() % 2 == 0) {
      return 0.25 * double(int(rng.next_u64() % 17) - 8);
    }
    return rng.uniform(-2.0, 2.0);
  };
  std::int64_t ta = 0;
  std::int64_t tb = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t na = std::size_t(rng.next_u64() % 4);
    for (std::size_t j = 0; j < na; ++j) {
      inst.coords_a[i].push_back(coord());
      inst.units_a[i].push_back(1 + std::int64_t(rng.next_u64() % 4));
      ta += inst.units_a[i].back();
    }
    const std::size_t nb = std::size_t(rng.next_u64() % 4);
    for (std::size_t j = 0; j < nb; ++j) {
      inst.coords_b[i].push_back(coord());
      inst.units_b[i].push_back(1 + std::int64_t(rng.next_u64() % 4));
      tb += inst.units_b[i].back();
    }
  }
  if (ta == 0) {
    const std::size_t line = rng.next_u64() % k;
    inst.coords_a[line].push_back(coord());
    inst.units_a[line].push_back(1);
    ta = 1;
  }
  if (tb < ta) {
    const std::size_t line = rng.next_u64() % k;
    inst.coords_b[line].push_back(coord());
    inst.units_b[line].push_back(ta - tb);
    tb = ta;
  } else if (ta < tb) {
    const std::size_t line = rng.next_u64() % k;
    inst.coords_a[line].push_back(coord());
    inst.units_a[line].push_back(tb - ta);
    ta = tb;
  }
  inst.total_units = ta;
  inst.a.lines.resize(k);
  inst.b.lines.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < inst.coords_a[i].size(); ++j) {
      inst.a.lines[i].push_back(
          {inst.coords_a[i][j],
           double(inst.units_a[i][j]) / double(inst.total_units)});
    }
    for (std::size_t j = 0; j < inst.coords_b[i].size(); ++j) {
      inst.b.lines[i].push_back(
          {inst.coords_b[i][j],
           double(inst.units_b[i][j]) / double(inst.total_units)});
    }
  }
  return inst;
}

DistanceConfig small_config(std::uint64_t seed) {
  DistanceConfig cfg;
  cfg.num_trees = 6;
  cfg.lines_per_tree = 3;
  cfg.radius = 0.6;
  cfg.seed = seed;
  return cfg;
}

DistanceConfig spatial_config(std::uint64_t seed) {
  DistanceConfig cfg = small_config(seed);
  cfg.spatial_map.kind = SpatialMapConfig::Kind::OddPoly;
  cfg.spatial_map.degree = 3;
  cfg.spatial_map.gamma = 0.5;
  return cfg;
}

SelftestSuite oracle_suite(std::uint64_t seed, const SpiderFn& spider) {
  SelftestSuite suite{"oracle_equivalence", 300, true, ""};
  Rng rng(substream_seed(seed, 1));
  double worst = 0.0;
  for (int trial = 0; trial < suite.trials; ++trial) {
    const SpiderInstance inst = random_spider_instance(rng);
    const double closed = spider(inst.a, inst.b);
    const double exact =
        lp_tree_w1_oracle(inst.coords_a, inst.units_a, inst.coords_b,
                          inst.units_b) /
        double(inst.total_units);
    worst = std::max(worst, std::abs(closed - exact));
    if (spider(inst.a, inst.a) != 0.0 || spider(inst.b, inst.b) != 0.0) {
      suite.passed = false;
      suite.detail = "nonzero self distance";
      return suite;
    }
  }
  suite.passed = worst <= 1e-9;
  suite.detail = "max |closed - oracle| = " + fmt("%.3g", worst);
  return suite;
}

SelftestSuite metric_axiom_suite(std::uint64_t seed) {
  SelftestSuite suite{"metric_axioms", 40, true, ""};
  Rng rng(substream_seed(seed, 2));
  double worst = 0.0;
  for (int trial = 0; trial < suite.trials && suite.passed; ++trial) {
    const Index d = 2 + Index(rng.next_u64() % 3);
    const Index n = 3 + Index(rng.next_u64() % 5);
    const DistanceConfig cfg = small_config(rng.next_u64());
    const DistanceConfig sp_cfg = spatial_config(cfg.seed);
    const DiscreteMeasure mu = random_measure(n, d, rng);
    const DiscreteMeasure nu = random_measure(n + 1, d, rng);
    const DiscreteMeasure rho = random_measure(n, d, rng);
    for (TswMode mode : {TswMode::DbLinear, TswMode::Spatial,
                         TswMode::Circular, TswMode::CircularR0}) {
      const DistanceConfig& c = mode == TswMode::Spatial ? sp_cfg : cfg;
      const double ab = estimate_tsw(mu, nu, c, mode).value;
      const double ba = estimate_tsw(nu, mu, c, mode).value;
      const double ac = estimate_tsw(mu, rho, c, mode).value;
      const double cb = estimate_tsw(rho, nu, c, mode).value;
      const double self = estimate_tsw(mu, mu, c, mode).value;
      worst = std::max(worst, std::abs(ab - ba));
      if (std::abs(ab - ba) > 1e-10 || ac > ab + cb + 1e-10 || self != 0.0) {
        suite.passed = false;
        suite.detail = "euclidean axiom violation";
      }
    }
    const DiscreteMeasure smu = random_sphere_measure(n, 3, rng);
    const DiscreteMeasure snu = random_sphere_measure(n + 1, 3, rng);
    const DiscreteMeasure srho = random_sphere_measure(n, 3, rng);
    for (StswMode mode : {StswMode::Plain, StswMode::Spatial}) {
      const double ab = estimate_stsw(smu, snu, cfg, mode).value;
      const double ba = estimate_stsw(snu, smu, cfg, mode).value;
      const double ac = estimate_stsw(smu, srho, cfg, mode).value;
      const double cb = estimate_stsw(srho, snu, cfg, mode).value;
      const double self = estimate_stsw(smu, smu, cfg, mode).value;
      worst = std::max(worst, std::abs(ab - ba));
      if (std::abs(ab - ba) > 1e-10 || ac > ab + cb + 1e-10 || self != 0.0) {
        suite.passed = false;
        suite.detail = "spherical axiom violation";
      }
    }
  }
  if (suite.passed) suite.detail = "max asymmetry = " + fmt("%.3g", worst);
  return suite;
}

SelftestSuite reduction_suite(std::uint64_t seed) {
  SelftestSuite suite{"reductions", 15, true, ""};
  Rng rng(substream_seed(seed, 3));
  double worst = 0.0;
  for (int trial = 0; trial < suite.trials; ++trial) {
    const Index d = 2 + Index(rng.next_u64() % 3);
    const DiscreteMeasure mu = random_measure(5, d, rng);
    const DiscreteMeasure nu = random_measure(6, d, rng);

    DistanceConfig cfg = small_config(rng.next_u64());
    cfg.lines_per_tree = 1;
    cfg.num_trees = 10;
    const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);
    Matrix directions(cfg.num_trees, d);
    for (int j = 0; j < cfg.num_trees; ++j) {
      directions.row(j) = trees[std::size_t(j)].directions.row(0);
    }
    const double tree_value =
        estimate_tsw_with_trees(mu, nu, trees, cfg, TswMode::DbLinear).value;
    const double sliced =
        estimate_sw_with_directions(mu, nu, directions).value;
    worst = std::max(worst, std::abs(tree_value - sliced));

    DistanceConfig circ = small_config(rng.next_u64());
    circ.radius = 0.0;
    const double fast = estimate_tsw(mu, nu, circ, TswMode::CircularR0).value;
    const double general =
        estimate_tsw(mu, nu, circ, TswMode::Circular).value;
    worst = std::max(worst, std::abs(fast - general));
  }
  suite.passed = worst <= 1e-10;
  suite.detail = "max reduction gap = " + fmt("%.3g", worst);
  return suite;
}

SelftestSuite invariance_suite(std::uint64_t seed) {
  SelftestSuite suite{"invariance", 20, true, ""};
  Rng rng(substream_seed(seed, 4));
  double worst = 0.0;
  for (int trial = 0; trial < suite.trials; ++trial) {
    const Index d = 2 + Index(rng.next_u64() % 3);
    const Index n = 3 + Index(rng.next_u64() % 4);
    const DiscreteMeasure mu = random_measure(n, d, rng);
    const DiscreteMeasure nu = random_measure(n + 1, d, rng);
    DistanceConfig cfg = small_config(rng.next_u64());
    const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);
    const IsometryEd g = random_isometry(d, 2.0, rng);
    std::vector<TreeSystem> moved;
    moved.reserve(trees.size());
    for (const TreeSystem& t : trees) moved.push_back(apply_isometry(g, t));
    const DiscreteMeasure gmu = apply_isometry(g, mu);
    const DiscreteMeasure gnu = apply_isometry(g, nu);
    for (TswMode mode :
         {TswMode::DbLinear, TswMode::Circular, TswMode::CircularR0}) {
      const DistanceEstimate base =
          estimate_tsw_with_trees(mu, nu, trees, cfg, mode);
      const DistanceEstimate mapped =
          estimate_tsw_with_trees(gmu, gnu, moved, cfg, mode);
      for (std::size_t j = 0; j < base.per_tree.size(); ++j) {
        worst = std::max(worst,
                         std::abs(base.per_tree[j] - mapped.per_tree[j]));
      }
    }

    // Spatial mode: the odd map commutes with signed permutations, so the
    // end-to-end distance is invariant under them (trees live in the mapped
    // space and are moved by the same signed permutation).
    DistanceConfig sp = spatial_config(cfg.seed);
    Matrix perm = Matrix::Zero(d, d);
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index i = d - 1; i > 0; --i) {
      std::swap(order[std::size_t(i)],
                order[rng.next_u64() % std::uint64_t(i + 1)]);
    }
    for (Index i = 0; i < d; ++i) {
      perm(order[std::size_t(i)], i) = rng.next_u64() % 2 == 0 ? 1.0 : -1.0;
    }
    const IsometryEd sg(perm, Vector::Zero(d));
    std::vector<TreeSystem> sp_moved;
    sp_moved.reserve(trees.size());
    for (const TreeSystem& t : trees) sp_moved.push_back(apply_isometry(sg, t));
    const DistanceEstimate sp_base =
        estimate_tsw_with_trees(mu, nu, trees, sp, TswMode::Spatial);
    const DistanceEstimate sp_mapped = estimate_tsw_with_trees(
        apply_isometry(sg, mu), apply_isometry(sg, nu), sp_moved, sp,
        TswMode::Spatial);
    for (std::size_t j = 0; j < sp_base.per_tree.size(); ++j) {
      worst = std::max(worst,
                       std::abs(sp_base.per_tree[j] - sp_mapped.per_tree[j]));
    }

    const DiscreteMeasure smu = random_sphere_measure(n, 4, rng);
    const DiscreteMeasure snu = random_sphere_measure(n + 1, 4, rng);
    const std::vector<SphericalTree> strees = sample_spherical_trees(3, cfg);
    const Matrix q = random_orthogonal(4, rng);
    std::vector<SphericalTree> rotated;
    rotated.reserve(strees.size());
    for (const SphericalTree& t : strees) rotated.push_back(rotate_tree(q, t));
    const DistanceEstimate sb =
        estimate_stsw_with_trees(smu, snu, strees, cfg, StswMode::Plain);
    const DistanceEstimate sm = estimate_stsw_with_trees(
        rotate_measure(q, smu), rotate_measure(q, snu), rotated, cfg,
        StswMode::Plain);
    for (std::size_t j = 0; j < sb.per_tree.size(); ++j) {
      worst = std::max(worst, std::abs(sb.per_tree[j] - sm.per_tree[j]));
    }
  }
  suite.passed = worst <= 1e-9;
  suite.detail = "max per-tree drift = " + fmt("%.3g", worst);
  return suite;
}

SelftestSuite gradient_suite(std::uint64_t seed) {
  SelftestSuite suite{"gradients", 12, true, ""};
  Rng rng(substream_seed(seed, 5));
  double worst_euclidean = 0.0;
  double worst_spherical = 0.0;
  const TswMode modes[] = {TswMode::DbLinear, TswMode::Spatial,
                           TswMode::Circular, TswMode::CircularR0};
  for (int trial = 0; trial < 8; ++trial) {
    const TswMode mode = modes[trial % 4];
    for (int attempt = 0;; ++attempt) {
      const Index d = 3;
      const DiscreteMeasure mu = random_measure(4, d, rng);
      const DiscreteMeasure nu = random_measure(5, d, rng);
      DistanceConfig cfg = mode == TswMode::Spatial
                               ? spatial_config(rng.next_u64())
                               : small_config(rng.next_u64());
      cfg.num_trees = 3;
      const std::vector<TreeSystem> trees = sample_tree_systems(d, cfg);
      const FiniteDiffReport report =
          finite_diff_check_tsw(mu, nu, trees, cfg, mode);
      if (report.tie_flagged && attempt < 30) continue;
      worst_euclidean = std::max(worst_euclidean, report.max_rel_err);
      break;
    }
  }
  for (int trial = 0; trial < 4; ++trial) {
    const StswMode mode = trial % 2 == 0 ? StswMode::Plain : StswMode::Spatial;
    for (int attempt = 0;; ++attempt) {
      const DiscreteMeasure mu = random_sphere_measure(4, 3, rng);
      const DiscreteMeasure nu = random_sphere_measure(5, 3, rng);
      DistanceConfig cfg = small_config(rng.next_u64());
      cfg.num_trees = 3;
      const Index sphere_dim = mode == StswMode::Spatial ? 3 : 2;
      const std::vector<SphericalTree> trees =
          sample_spherical_trees(sphere_dim, cfg);
      const FiniteDiffReport report =
          finite_diff_check_stsw(mu, nu, trees, cfg, mode);
      if (report.tie_flagged && attempt < 30) continue;
      worst_spherical = std::max(worst_spherical, report.max_rel_err);
      break;
    }
  }
  suite.passed = worst_euclidean < 1e-4 && worst_spherical < 1e-3;
  suite.detail = "max rel err: euclidean " + fmt("%.3g", worst_euclidean) +
                 ", spherical " + fmt("%.3g", worst_spherical);
  return suite;
}

SelftestSuite evaluation_suite(std::uint64_t seed) {
  SelftestSuite suite{"evaluation_oracle", 60, true, ""};
  Rng rng(substream_seed(seed, 6));
  double worst = 0.0;
  for (int trial = 0; trial < suite.trials; ++trial) {
    const Index n = 1 + Index(rng.next_u64() % 6);
    const bool sphere = trial % 2 == 1;
    const Index d = sphere ? 3 : 1 + Index(rng.next_u64() % 3);
    Matrix x(n, d), y(n, d);
    if (sphere) {
      for (Index i = 0; i < n; ++i) {
        x.row(i) = sample_unit_sphere(d, rng).transpose();
        y.row(i) = sample_unit_sphere(d, rng).transpose();
      }
    } else {
      x = gaussian_points(n, d, rng);
      y = gaussian_points(n, d, rng);
    }
    const GroundMetric ground =
        sphere ? GroundMetric::Geodesic : GroundMetric::Euclidean;
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (Index i = 0; i < n; ++i) {
        double c;
        if (ground == GroundMetric::Euclidean) {
          c = (x.row(i) - y.row(perm[std::size_t(i)])).norm();
        } else {
          c = std::acos(std::clamp(
              x.row(i).dot(y.row(perm[std::size_t(i)])), -1.0, 1.0));
        }
        total += c * c;
      }
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    worst = std::max(
        worst, std::abs(exact_w2(x, y, ground) -
                        std::sqrt(best / double(n))));
  }
  suite.passed = worst <= 1e-10;
  suite.detail = "max |assignment - brute force| = " + fmt("%.3g", worst);
  return suite;
}

SelftestSuite determinism_suite(std::uint64_t seed) {
  SelftestSuite suite{"determinism", 8, true, ""};
  Rng rng(substream_seed(seed, 7));
  for (int trial = 0; trial < suite.trials && suite.passed; ++trial) {
    const Index d = 2 + Index(rng.next_u64() % 3);
    const DiscreteMeasure mu = random_measure(6, d, rng);
    const DiscreteMeasure nu = random_measure(7, d, rng);
    const DistanceConfig cfg = small_config(rng.next_u64());
    for (TswMode mode : {TswMode::DbLinear, TswMode::Circular}) {
      if (estimate_tsw(mu, nu, cfg, mode, 1).value !=
          estimate_tsw(mu, nu, cfg, mode, 4).value) {
        suite.passed = false;
        suite.detail = "estimate depends on thread count";
      }
      const Matrix g1 = grad_tsw(mu, nu, cfg, mode, 1).values;
      const Matrix g4 = grad_tsw(mu, nu, cfg, mode, 4).values;
      if ((g1 - g4).cwiseAbs().maxCoeff() != 0.0) {
        suite.passed = false;
        suite.detail = "gradient depends on thread count";
      }
    }
    const DiscreteMeasure smu = random_sphere_measure(5, 3, rng);
    const DiscreteMeasure snu = random_sphere_measure(6, 3, rng);
    if (estimate_stsw(smu, snu, cfg, StswMode::Plain, 1).value !=
        estimate_stsw(smu, snu, cfg, StswMode::Plain, 3).value) {
      suite.passed = false;
      suite.detail = "spherical estimate depends on thread count";
    }
  }
  if (suite.passed) suite.detail = "bit-identical across thread counts";
  return suite;
}

}  // namespace

bool SelftestReport::all_passed() const {
  return std::all_of(suites.begin(), suites.end(),
                     [](const SelftestSuite& s) { return s.passed; });
}

SelftestReport run_selftest(std::uint64_t seed, const SpiderFn& spider) {
  SelftestReport report;
  report.suites.push_back(oracle_suite(seed, spider));
  report.suites.push_back(metric_axiom_suite(seed));
  report.suites.push_back(reduction_suite(seed));
  report.suites.push_back(invariance_suite(seed));
  report.suites.push_back(gradient_suite(seed));
  report.suites.push_back(evaluation_suite(seed));
  report.suites.push_back(determinism_suite(seed));
  return report;
}

}  // namespace tsw
