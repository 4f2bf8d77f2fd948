#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tsw/flows.hpp"
#include "tsw/sampling.hpp"

namespace tsw {

namespace {

constexpr double kComponentStd = 0.05;

// Round-robin component assignment keeps the clusters balanced; coordinates
// are divided by the population scale sqrt(var(means) + std^2) so the target
// geometry does not depend on the draw.
Matrix gaussian_mixture(const Matrix& means, double component_std, Index n,
                        Rng& rng) {
  const double scale =
      std::sqrt(means.array().square().sum() / double(means.size()) +
                component_std * component_std);
  Matrix pts(n, means.cols());
  for (Index i = 0; i < n; ++i) {
    const Index c = i % means.rows();
    for (Index j = 0; j < means.cols(); ++j) {
      pts(i, j) = (means(c, j) + component_std * rng.normal()) / scale;
    }
  }
  return pts;
}

Matrix grid_means_5x5() {
  Matrix means(25, 2);
  for (Index a = 0; a < 5; ++a) {
    for (Index b = 0; b < 5; ++b) {
      means(a * 5 + b, 0) = double(a) - 2.0;
      means(a * 5 + b, 1) = double(b) - 2.0;
    }
  }
  return means;
}

Matrix ring_means_8() {
  Matrix means(8, 2);
  for (Index c = 0; c < 8; ++c) {
    const double angle = 2.0 * std::numbers::pi * double(c) / 8.0;
    means(c, 0) = 2.0 * std::cos(angle);
    means(c, 1) = 2.0 * std::sin(angle);
  }
  return means;
}

Matrix swiss_roll(Index n, Rng& rng) {
  Matrix pts(n, 2);
  const double t_max = 4.5 * std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * rng.uniform01());
    pts(i, 0) = t * std::cos(t) / t_max;
    pts(i, 1) = t * std::sin(t) / t_max;
  }
  return pts;
}

Matrix half_moons(Index n, Rng& rng) {
  Matrix pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform01();
    if (i % 2 == 0) {
      pts(i, 0) = std::cos(t);
      pts(i, 1) = std::sin(t);
    } else {
      pts(i, 0) = 1.0 - std::cos(t);
      pts(i, 1) = 0.5 - std::sin(t);
    }
  }
  return pts;
}

Matrix circle(Index n, Rng& rng) {
  Matrix pts(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * rng.uniform01();
    pts(i, 0) = std::cos(t);
    pts(i, 1) = std::sin(t);
  }
  return pts;
}

Matrix vmf_mixture(Index n, double kappa, Rng& rng) {
  const Matrix means = vmf12_means();
  Matrix pts(n, 3);
  Index row = 0;
  for (Index c = 0; c < means.rows(); ++c) {
    const Index count = n / means.rows() + (c < n % means.rows() ? 1 : 0);
    if (count == 0) continue;
    pts.middleRows(row, count) =
        sample_vmf(means.row(c).transpose(), kappa, count, rng);
    row += count;
  }
  return pts;
}

}  // namespace

Matrix vmf12_means() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Matrix means(12, 3);
  means << -1, phi, 0, 1, phi, 0, -1, -phi, 0, 1, -phi, 0,  //
      0, -1, phi, 0, 1, phi, 0, -1, -phi, 0, 1, -phi,       //
      phi, 0, -1, phi, 0, 1, -phi, 0, -1, -phi, 0, 1;
  means.rowwise().normalize();
  return means;
}

const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names = {
      "gaussians25", "gaussians8", "swiss_roll",
      "half_moons",  "circle",     "vmf12"};
  return names;
}

DiscreteMeasure make_dataset(const std::string& name, Index n, Rng& rng,
                             double vmf_kappa) {
  require(n >= 1, "dataset: n must be >= 1");
  if (name == "gaussians25") {
    return DiscreteMeasure::uniform(
        gaussian_mixture(grid_means_5x5(), kComponentStd, n, rng));
  }
  if (name == "gaussians8") {
    return DiscreteMeasure::uniform(
        gaussian_mixture(ring_means_8(), kComponentStd, n, rng));
  }
  if (name == "swiss_roll") {
    return DiscreteMeasure::uniform(swiss_roll(n, rng));
  }
  if (name == "half_moons") {
    return DiscreteMeasure::uniform(half_moons(n, rng));
  }
  if (name == "circle") {
    return DiscreteMeasure::uniform(circle(n, rng));
  }
  if (name == "vmf12") {
    require(vmf_kappa >= 0.0, "dataset: vmf kappa must be >= 0");
    return DiscreteMeasure::uniform(vmf_mixture(n, vmf_kappa, rng), true);
  }
  throw std::invalid_argument("dataset: unknown name '" + name + "'");
}

Matrix gaussian_cloud(Index n, Index dim, Rng& rng) {
  Matrix pts(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) pts(i, j) = rng.normal();
  }
  return pts;
}

Matrix uniform_sphere_cloud(Index n, Index dim, Rng& rng) {
  Matrix pts(n, dim);
  for (Index i = 0; i < n; ++i) {
    pts.row(i) = sample_unit_sphere(dim, rng).transpose();
  }
  return pts;
}

}  // namespace tsw
