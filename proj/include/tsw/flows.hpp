#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tsw/rng.hpp"
#include "tsw/types.hpp"

namespace tsw {

// Distance family driving a gradient flow. Sw runs db_linear trees with one
// line each, so num_trees is the projection budget.
enum class FlowMethod {
  Sw,
  DbLinear,
  Spatial,
  Circular,
  CircularR0,
  StswPlain,
  StswSpatial,
};

bool method_is_spherical(FlowMethod method);
std::string_view method_token(FlowMethod method);
FlowMethod parse_method(std::string_view token);

enum class GroundMetric { Euclidean, Geodesic };

enum class FlowOptimizer { PlainSgd, AdaptiveMoment };

struct AdaptiveMomentParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct FlowConfig {
  FlowMethod method = FlowMethod::DbLinear;
  double learning_rate = 1e-3;
  int iterations = 2500;
  FlowOptimizer optimizer = FlowOptimizer::AdaptiveMoment;
  AdaptiveMomentParams adaptive;
  std::vector<int> checkpoints;  // strictly increasing, within [1, iterations]
  // Trees are resampled every iteration from substreams of eval_seed;
  // distance.seed is ignored inside a flow.
  DistanceConfig distance;
  GroundMetric ground = GroundMetric::Euclidean;
  std::uint64_t eval_seed = 0;

  void validate() const;
};

struct FlowCheckpoint {
  int iteration = 0;
  // Exact W2 for Euclidean flows, log10(max(W2, 1e-12)) for spherical ones.
  double metric = 0.0;
  // Mean wall-clock step time since the previous checkpoint (gradient and
  // update only; the checkpoint evaluation itself is excluded).
  double seconds_per_iter = 0.0;
};

struct FlowTrace {
  std::vector<FlowCheckpoint> rows;
};

// Exact 2-Wasserstein between equal-size uniform point clouds:
// sqrt(min over matchings of the mean squared ground cost), via an exact
// assignment solve. Geodesic ground is the great-circle angle arccos<x,y>,
// computed in chord form; it expects unit-norm rows.
double exact_w2(const Matrix& x, const Matrix& y, GroundMetric ground);

// Euclidean flow: optimizer step on the gradient of the configured distance,
// fresh trees per iteration; exact W2 against the target at checkpoints.
// Throws std::runtime_error on divergence (W2 > 1e6) or non-finite iterates.
FlowTrace run_flow_euclidean(const Matrix& source_init,
                             const DiscreteMeasure& target,
                             const FlowConfig& cfg, int threads = 1);

// Spherical flow: ambient gradient step, then row renormalization back to
// the sphere; records log10(max(W2, 1e-12)) with the configured ground.
FlowTrace run_flow_spherical(const Matrix& source_init,
                             const DiscreteMeasure& target,
                             const FlowConfig& cfg, int threads = 1);

// Named benchmark targets with uniform weights. Euclidean sets are 2-D
// (gaussians25, gaussians8, swiss_roll, half_moons, circle); vmf12 lives on
// the unit sphere of R^3. vmf_kappa applies to vmf12 only.
DiscreteMeasure make_dataset(const std::string& name, Index n, Rng& rng,
                             double vmf_kappa = 50.0);

// Names accepted by make_dataset.
const std::vector<std::string>& dataset_names();

// The twelve unit mean directions of the vmf12 mixture (icosahedron
// vertices), one per row.
Matrix vmf12_means();

// N(0, I) cloud, the standard flow initialization.
Matrix gaussian_cloud(Index n, Index dim, Rng& rng);

// Uniform cloud on the unit sphere of R^dim.
Matrix uniform_sphere_cloud(Index n, Index dim, Rng& rng);

}  // namespace tsw
