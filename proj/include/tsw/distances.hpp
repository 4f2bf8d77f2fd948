#pragma once

#include <vector>

#include "tsw/types.hpp"

namespace tsw {

// L tree systems drawn from substreams of cfg.seed; tree j is reproducible
// independently of how trees are scheduled across threads.
std::vector<TreeSystem> sample_tree_systems(Index dim,
                                            const DistanceConfig& cfg);

// L spherical trees on S^sphere_dim.
std::vector<SphericalTree> sample_spherical_trees(Index sphere_dim,
                                                  const DistanceConfig& cfg);

// Tree-sliced W1 estimate, mean over cfg.num_trees sampled trees. Spatial
// mode applies the configured odd-polynomial map before projecting; circular
// modes use radius cfg.radius (CircularR0 pins r = 0 and shares one sort
// across lines). The per-tree reduction runs in index order, so the result
// is identical for every `threads` value.
DistanceEstimate estimate_tsw(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu,
                              const DistanceConfig& cfg, TswMode mode,
                              int threads = 1);

// Same estimator on caller-supplied trees (paired-invariance tests, flows).
// Trees must live in the mapped space when mode == Spatial.
DistanceEstimate estimate_tsw_with_trees(const DiscreteMeasure& mu,
                                         const DiscreteMeasure& nu,
                                         const std::vector<TreeSystem>& trees,
                                         const DistanceConfig& cfg,
                                         TswMode mode, int threads = 1);

// Sliced W1: mean over directions of the 1-D projection distance.
DistanceEstimate estimate_sw(const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, int num_projections,
                             std::uint64_t seed, int threads = 1);

DistanceEstimate estimate_sw_with_directions(const DiscreteMeasure& mu,
                                             const DiscreteMeasure& nu,
                                             const Matrix& directions,
                                             int threads = 1);

// Spherical tree-sliced W1 on S^d. Plain mode samples trees on the data
// sphere; spatial mode lifts points to S^(d+1) first and samples trees there.
DistanceEstimate estimate_stsw(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu,
                               const DistanceConfig& cfg, StswMode mode,
                               int threads = 1);

DistanceEstimate estimate_stsw_with_trees(
    const DiscreteMeasure& mu, const DiscreteMeasure& nu,
    const std::vector<SphericalTree>& trees, const DistanceConfig& cfg,
    StswMode mode, int threads = 1);

}  // namespace tsw
