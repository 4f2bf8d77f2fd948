#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "tsw/assignment.hpp"
#include "tsw/flows.hpp"
#include "tsw/gradients.hpp"

namespace tsw {

namespace {

constexpr double kDivergenceCap = 1e6;
constexpr double kLogFloor = 1e-12;

std::pair<DistanceConfig, TswMode> euclidean_params(const FlowConfig& cfg) {
  DistanceConfig d = cfg.distance;
  switch (cfg.method) {
    case FlowMethod::Sw:
      d.lines_per_tree = 1;
      return {d, TswMode::DbLinear};
    case FlowMethod::DbLinear:
      return {d, TswMode::DbLinear};
    case FlowMethod::Spatial:
      return {d, TswMode::Spatial};
    case FlowMethod::Circular:
      return {d, TswMode::Circular};
    case FlowMethod::CircularR0:
      return {d, TswMode::CircularR0};
    default:
      throw std::invalid_argument("flow: method needs run_flow_spherical");
  }
}

StswMode spherical_mode(FlowMethod method) {
  switch (method) {
    case FlowMethod::StswPlain:
      return StswMode::Plain;
    case FlowMethod::StswSpatial:
      return StswMode::Spatial;
    default:
      throw std::invalid_argument("flow: method needs run_flow_euclidean");
  }
}

class OptimizerState {
 public:
  OptimizerState(Index n, Index d)
      : m_(Matrix::Zero(n, d)), v_(Matrix::Zero(n, d)) {}

  void step(const FlowConfig& cfg, int iter, const Matrix& grad, Matrix& x) {
    if (cfg.optimizer == FlowOptimizer::PlainSgd) {
      x.noalias() -= cfg.learning_rate * grad;
      return;
    }
    const AdaptiveMomentParams& p = cfg.adaptive;
    m_ = p.beta1 * m_ + (1.0 - p.beta1) * grad;
    v_ = p.beta2 * v_ + (1.0 - p.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(p.beta1, iter);
    const double c2 = 1.0 - std::pow(p.beta2, iter);
    x.array() -= cfg.learning_rate * (m_.array() / c1) /
                 ((v_.array() / c2).sqrt() + p.eps);
  }

 private:
  Matrix m_;
  Matrix v_;
};

double elapsed_seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

void check_metric(double w2, int iter) {
  if (!std::isfinite(w2) || w2 > kDivergenceCap) {
    throw std::runtime_error("flow diverged: W2 = " + std::to_string(w2) +
                             " at iteration " + std::to_string(iter));
  }
}

}  // namespace

void FlowConfig::validate() const {
  require(learning_rate > 0.0, "flow: learning_rate must be > 0");
  require(iterations >= 1, "flow: iterations must be >= 1");
  require(adaptive.beta1 >= 0.0 && adaptive.beta1 < 1.0,
          "flow: adaptive beta1 must be in [0, 1)");
  require(adaptive.beta2 >= 0.0 && adaptive.beta2 < 1.0,
          "flow: adaptive beta2 must be in [0, 1)");
  require(adaptive.eps > 0.0, "flow: adaptive eps must be > 0");
  int prev = 0;
  for (int cp : checkpoints) {
    require(cp >= 1 && cp <= iterations,
            "flow: checkpoints must lie in [1, iterations]");
    require(cp > prev, "flow: checkpoints must be strictly increasing");
    prev = cp;
  }
}

bool method_is_spherical(FlowMethod method) {
  return method == FlowMethod::StswPlain || method == FlowMethod::StswSpatial;
}

std::string_view method_token(FlowMethod method) {
  switch (method) {
    case FlowMethod::Sw:
      return "sw";
    case FlowMethod::DbLinear:
      return "db_linear";
    case FlowMethod::Spatial:
      return "spatial";
    case FlowMethod::Circular:
      return "circular";
    case FlowMethod::CircularR0:
      return "circular_r0";
    case FlowMethod::StswPlain:
      return "stsw";
    case FlowMethod::StswSpatial:
      return "spatial_stsw";
  }
  return "unknown";
}

FlowMethod parse_method(std::string_view token) {
  for (FlowMethod m :
       {FlowMethod::Sw, FlowMethod::DbLinear, FlowMethod::Spatial,
        FlowMethod::Circular, FlowMethod::CircularR0, FlowMethod::StswPlain,
        FlowMethod::StswSpatial}) {
    if (token == method_token(m)) return m;
  }
  throw std::invalid_argument("flow: unknown method '" + std::string(token) +
                              "'");
}

double exact_w2(const Matrix& x, const Matrix& y, GroundMetric ground) {
  require(x.rows() == y.rows(), "exact_w2: point counts must match");
  require(x.cols() == y.cols(), "exact_w2: dimensions must match");
  require(x.rows() >= 1, "exact_w2: empty input");
  const Index n = x.rows();
  Matrix cost(n, n);
  if (ground == GroundMetric::Euclidean) {
    for (Index i = 0; i < n; ++i) {
      cost.row(i) =
          (y.rowwise() - x.row(i)).rowwise().squaredNorm().transpose();
    }
  } else {
    // 2 asin(chord/2) equals arccos<x,y> for unit vectors and, unlike the
    // dot form, is exact at zero distance.
    for (Index i = 0; i < n; ++i) {
      const auto half_chord =
          0.5 * (y.rowwise() - x.row(i)).rowwise().norm().array();
      cost.row(i) =
          (2.0 * half_chord.min(1.0).asin()).square().transpose().matrix();
    }
  }
  std::vector<Index> row_to_col;
  const double total = solve_assignment(cost, row_to_col);
  return std::sqrt(std::max(total, 0.0) / double(n));
}

FlowTrace run_flow_euclidean(const Matrix& source_init,
                             const DiscreteMeasure& target,
                             const FlowConfig& cfg, int threads) {
  cfg.validate();
  require(!method_is_spherical(cfg.method),
          "flow: spherical method needs run_flow_spherical");
  require(source_init.rows() >= 1, "flow: empty source");
  require(source_init.cols() == target.dim(),
          "flow: source/target dimension mismatch");
  auto [dist_cfg, mode] = euclidean_params(cfg);
  dist_cfg.validate(source_init.cols());

  Matrix x = source_init;
  const Vector weights =
      Vector::Constant(x.rows(), 1.0 / double(x.rows()));
  OptimizerState opt(x.rows(), x.cols());
  FlowTrace trace;
  std::size_t next_cp = 0;
  int prev_cp_iter = 0;
  double step_seconds = 0.0;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    dist_cfg.seed = substream_seed(cfg.eval_seed, std::uint64_t(iter));
    const DiscreteMeasure mu(x, weights);
    const GradientField g = grad_tsw(mu, target, dist_cfg, mode, threads);
    opt.step(cfg, iter, g.values, x);
    step_seconds += elapsed_seconds(t0);
    if (!x.allFinite()) {
      throw std::runtime_error("flow: non-finite iterate at iteration " +
                               std::to_string(iter));
    }
    if (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] == iter) {
      const double w2 = exact_w2(x, target.points, cfg.ground);
      check_metric(w2, iter);
      trace.rows.push_back(
          {iter, w2, step_seconds / double(iter - prev_cp_iter)});
      prev_cp_iter = iter;
      step_seconds = 0.0;
      ++next_cp;
    }
  }
  return trace;
}

FlowTrace run_flow_spherical(const Matrix& source_init,
                             const DiscreteMeasure& target,
                             const FlowConfig& cfg, int threads) {
  cfg.validate();
  require(method_is_spherical(cfg.method),
          "flow: euclidean method needs run_flow_euclidean");
  require(source_init.rows() >= 1, "flow: empty source");
  require(source_init.cols() == target.dim(),
          "flow: source/target dimension mismatch");
  require(target.spherical, "flow: spherical flow needs a spherical target");
  const StswMode mode = spherical_mode(cfg.method);
  DistanceConfig dist_cfg = cfg.distance;
  dist_cfg.validate(source_init.cols());

  Matrix x = source_init;
  const Vector weights =
      Vector::Constant(x.rows(), 1.0 / double(x.rows()));
  OptimizerState opt(x.rows(), x.cols());
  FlowTrace trace;
  std::size_t next_cp = 0;
  int prev_cp_iter = 0;
  double step_seconds = 0.0;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    dist_cfg.seed = substream_seed(cfg.eval_seed, std::uint64_t(iter));
    const DiscreteMeasure mu(x, weights, true);
    const GradientField g = grad_stsw(mu, target, dist_cfg, mode, threads);
    opt.step(cfg, iter, g.values, x);
    const Vector norms = x.rowwise().norm();
    if (!x.allFinite() || norms.minCoeff() <= 0.0) {
      throw std::runtime_error("flow: degenerate iterate at iteration " +
                               std::to_string(iter));
    }
    x.array().colwise() /= norms.array();
    step_seconds += elapsed_seconds(t0);
    if (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] == iter) {
      const double w2 = exact_w2(x, target.points, cfg.ground);
      check_metric(w2, iter);
      trace.rows.push_back({iter, std::log10(std::max(w2, kLogFloor)),
                            step_seconds / double(iter - prev_cp_iter)});
      prev_cp_iter = iter;
      step_seconds = 0.0;
      ++next_cp;
    }
  }
  return trace;
}

}  // namespace tsw
