#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "tsw/rng.hpp"
#include "tsw/sampling.hpp"
#include "tsw/splitting.hpp"

using namespace tsw;

namespace {

Matrix random_points(Rng& rng, Index n, Index d) {
  Matrix pts(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) pts(i, c) = rng.normal();
  return pts;
}

TreeSystem axes_tree_2d() {
  Matrix dirs(2, 2);
  dirs << 1.0, 0.0, 0.0, 1.0;
  return TreeSystem(Vector::Zero(2), dirs);
}

void check_row_stochastic(const SplitWeights& w) {
  for (Index j = 0; j < w.values.rows(); ++j) {
    CHECK(std::abs(w.values.row(j).sum() - 1.0) <= 1e-10);
    for (Index i = 0; i < w.values.cols(); ++i) {
      CHECK(w.values(j, i) > 0.0);
      CHECK(w.values(j, i) <= 1.0);
    }
  }
}

}  // namespace

TEST_CASE("point-line distance: on-line points, hand value, invariance") {
  Vector theta(3);
  theta << 1.0, 0.0, 0.0;
  Vector root(3);
  root << 0.2, -0.4, 1.0;
  CHECK(point_line_distance(root + 2.0 * theta, root, theta) == 0.0);

  Vector y2(2);
  y2 << 3.0, 4.0;
  Vector e1(2);
  e1 << 1.0, 0.0;
  CHECK(point_line_distance(y2, Vector::Zero(2), e1) == 4.0);

  Rng rng(91);
  for (int rep = 0; rep < 40; ++rep) {
    const Vector y = random_points(rng, 1, 3).row(0).transpose();
    const Vector x = random_points(rng, 1, 3).row(0).transpose();
    const Vector dir = sample_unit_sphere(3, rng);
    const IsometryEd g = random_isometry(3, 2.0, rng);
    const double before = point_line_distance(y, x, dir);
    const double after =
        point_line_distance(g.apply(y), g.apply(x), g.rotation * dir);
    CHECK(std::abs(after - before) <= 1e-10);

    // Points on the line itself map to distance ~0 for any direction.
    const double t = rng.uniform(-3.0, 3.0);
    CHECK(point_line_distance(x + t * dir, x, dir) <= 1e-12);
  }
}

TEST_CASE("euclidean splitting: hand softmax, identical lines, guards") {
  const TreeSystem t = axes_tree_2d();

  // d(y, x-axis) = 0 and d(y, y-axis) = ln 2, so the row is (1/3, 2/3).
  Matrix y(1, 2);
  y << std::log(2.0), 0.0;
  const SplitWeights w =
      splitting_euclidean(y, t, SplittingMode::Linear, 0.0, 1.0, 1.0);
  CHECK(w.values(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(w.values(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  // Negative sign flips the weighting toward the nearer line.
  const SplitWeights flipped =
      splitting_euclidean(y, t, SplittingMode::Linear, 0.0, -1.0, 1.0);
  CHECK(flipped.values(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  // Doubling the temperature halves the score gap: softmax(0, ln2 / 2).
  const SplitWeights cooled =
      splitting_euclidean(y, t, SplittingMode::Linear, 0.0, 1.0, 2.0);
  const double z = std::exp(std::log(2.0) / 2.0);
  CHECK(cooled.values(0, 1) == doctest::Approx(z / (1.0 + z)).epsilon(1e-14));

  Matrix dup_dirs(2, 2);
  dup_dirs << 1.0, 0.0, 1.0, 0.0;
  const TreeSystem dup(Vector::Zero(2), dup_dirs);
  Rng rng(92);
  const Matrix pts = random_points(rng, 8, 2);
  for (const SplittingMode mode :
       {SplittingMode::Linear, SplittingMode::Circular}) {
    const SplitWeights half =
        splitting_euclidean(pts, dup, mode, 0.5, 1.0, 1.0);
    for (Index j = 0; j < 8; ++j) {
      CHECK(half.values(j, 0) == doctest::Approx(0.5).epsilon(1e-14));
      CHECK(half.values(j, 1) == doctest::Approx(0.5).epsilon(1e-14));
    }
  }

  CHECK_THROWS_AS(
      splitting_euclidean(pts, t, SplittingMode::Linear, 0.0, 1.0, 0.0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      splitting_euclidean(pts, t, SplittingMode::Circular, -1.0, 1.0, 1.0),
      std::invalid_argument);
}

TEST_CASE("euclidean splitting is E(d)-invariant and row-stochastic") {
  Rng rng(93);
  for (int rep = 0; rep < 30; ++rep) {
    const Matrix pts = random_points(rng, 6, 3);
    const TreeSystem t =
        sample_tree_system(3, 3, 1.0, DirectionScheme::IidUniform, rng);
    const IsometryEd g = random_isometry(3, 2.0, rng);
    Matrix moved = pts * g.rotation.transpose();
    moved.rowwise() += g.translation.transpose();
    const TreeSystem gt = apply_isometry(g, t);

    for (const SplittingMode mode :
         {SplittingMode::Linear, SplittingMode::Circular}) {
      const SplitWeights base =
          splitting_euclidean(pts, t, mode, 0.7, 1.0, 1.0);
      const SplitWeights after =
          splitting_euclidean(moved, gt, mode, 0.7, 1.0, 1.0);
      check_row_stochastic(base);
      CHECK((after.values - base.values).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("spherical splitting: poles are uniform, hand beta on two rays") {
  Vector root(3);
  root << 0.0, 0.0, 1.0;
  Matrix edges(2, 3);
  edges << 1.0, 0.0, 0.0, -1.0, 0.0, 0.0;
  const SphericalTree t(root, edges);

  const double polar = std::numbers::pi / 3.0;     // angle from the root
  const double azimuth = std::numbers::pi / 4.0;   // angle from edge 1
  Matrix pts(3, 3);
  pts.row(0) = root.transpose();
  pts.row(1) = -root.transpose();
  pts.row(2) << std::sin(polar) * std::cos(azimuth),
      std::sin(polar) * std::sin(azimuth), std::cos(polar);

  const SplitWeights w = splitting_spherical(pts, t);
  check_row_stochastic(w);
  for (Index i = 0; i < 2; ++i) {
    CHECK(w.values(0, i) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w.values(1, i) == doctest::Approx(0.5).epsilon(1e-14));
  }

  // beta_1 = azimuth * sin(polar), beta_2 = (pi - azimuth) * sin(polar).
  const double b1 = azimuth * std::sin(polar);
  const double b2 = (std::numbers::pi - azimuth) * std::sin(polar);
  const double a1 = 1.0 / (1.0 + std::exp(b2 - b1));
  CHECK(w.values(2, 0) == doctest::Approx(a1).epsilon(1e-12));
  CHECK(w.values(2, 1) == doctest::Approx(1.0 - a1).epsilon(1e-12));
}

TEST_CASE("spherical splitting is rotation-invariant and continuous") {
  Rng rng(94);
  for (int rep = 0; rep < 30; ++rep) {
    Matrix pts(6, 4);
    for (Index i = 0; i < 6; ++i)
      pts.row(i) = sample_unit_sphere(4, rng).transpose();
    const SphericalTree t = sample_spherical_tree(3, 3, rng);
    const Matrix q = random_orthogonal(4, rng);

    const SplitWeights base = splitting_spherical(pts, t);
    const SplitWeights rotated =
        splitting_spherical(pts * q.transpose(), rotate_tree(q, t));
    check_row_stochastic(base);
    CHECK((rotated.values - base.values).cwiseAbs().maxCoeff() <= 1e-9);
  }

  // Small perturbations move the weights by a comparable amount (no jumps),
  // provided the point stays away from +-root.
  for (int rep = 0; rep < 20; ++rep) {
    const SphericalTree t = sample_spherical_tree(2, 3, rng);
    Vector y = sample_unit_sphere(3, rng);
    if (std::abs(y.dot(t.root)) > 0.9) continue;
    // acos is steep where the point nearly lies on an edge's half-circle;
    // the probe targets generic points, so skip near-aligned draws.
    const double rho = std::sqrt(1.0 - std::pow(y.dot(t.root), 2));
    bool aligned = false;
    for (Index i = 0; i < t.edges.rows(); ++i)
      aligned = aligned || std::abs(t.edges.row(i).dot(y)) / rho > 0.99;
    if (aligned) continue;
    Vector bumped = y + 1e-7 * sample_unit_sphere(3, rng);
    bumped.normalize();
    const SplitWeights a = splitting_spherical(y.transpose(), t);
    const SplitWeights b = splitting_spherical(bumped.transpose(), t);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-5);
  }
}
