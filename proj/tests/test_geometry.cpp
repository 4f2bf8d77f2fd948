#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>

#include "doctest.h"
#include "tsw/rng.hpp"
#include "tsw/sampling.hpp"

using namespace tsw;

namespace {

Matrix pairwise_distances(const Matrix& pts) {
  const Index n = pts.rows();
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
  return d;
}

}  // namespace

TEST_CASE("unit sphere samples have unit norm; d=1 degenerates to signs") {
  Rng rng(71);
  for (Index d : {1, 2, 3, 7, 20}) {
    for (int rep = 0; rep < 200; ++rep) {
      const Vector v = sample_unit_sphere(d, rng);
      REQUIRE(v.size() == d);
      CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
      if (d == 1) CHECK(std::abs(std::abs(v[0]) - 1.0) == 0.0);
    }
  }
}

TEST_CASE("unit sphere component means pass a CLT bound at d=3") {
  const Index n = 100000;
  Rng rng(72);
  Vector mean = Vector::Zero(3);
  for (Index i = 0; i < n; ++i) mean += sample_unit_sphere(3, rng);
  mean /= static_cast<double>(n);
  // Component variance on S^2 is 1/3; allow four standard errors.
  const double bound = 4.0 / std::sqrt(3.0 * static_cast<double>(n));
  for (Index c = 0; c < 3; ++c) CHECK(std::abs(mean[c]) <= bound);
}

TEST_CASE("random_orthogonal returns orthogonal matrices") {
  Rng rng(73);
  for (Index d : {2, 3, 6}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix q = random_orthogonal(d, rng);
      const Matrix err = q.transpose() * q - Matrix::Identity(d, d);
      CHECK(err.cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(std::abs(std::abs(q.determinant()) - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("tree systems: unit directions, k=1, exact zero root at root_std=0") {
  Rng rng(74);
  const TreeSystem single = sample_tree_system(5, 1, 1.0, // k=1 is allowed
                                               DirectionScheme::IidUniform, rng);
  CHECK(single.directions.rows() == 1);
  CHECK(std::abs(single.directions.row(0).norm() - 1.0) <= 1e-12);

  for (int rep = 0; rep < 50; ++rep) {
    const TreeSystem t =
        sample_tree_system(4, 3, 0.7, DirectionScheme::IidUniform, rng);
    CHECK(t.root.size() == 4);
    for (Index i = 0; i < 3; ++i)
      CHECK(std::abs(t.directions.row(i).norm() - 1.0) <= 1e-12);
  }

  const TreeSystem pinned =
      sample_tree_system(3, 2, 0.0, DirectionScheme::IidUniform, rng);
  CHECK(pinned.root.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonal direction scheme yields an orthonormal frame") {
  Rng rng(75);
  for (int rep = 0; rep < 30; ++rep) {
    const TreeSystem t =
        sample_tree_system(3, 3, 1.0, DirectionScheme::Orthogonal, rng);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) {
        const double dot = t.directions.row(i).dot(t.directions.row(j));
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
      }
  }
}

TEST_CASE("spherical trees: unit root, unit edges tangent at the root") {
  Rng rng(76);
  for (int rep = 0; rep < 50; ++rep) {
    const SphericalTree t = sample_spherical_tree(2, 4, rng);
    CHECK(t.root.size() == 3);
    CHECK(std::abs(t.root.norm() - 1.0) <= 1e-12);
    for (Index i = 0; i < 4; ++i) {
      CHECK(std::abs(t.edges.row(i).norm() - 1.0) <= 1e-12);
      CHECK(std::abs(t.edges.row(i).dot(t.root)) <= 1e-9);
    }
  }
  const SphericalTree circle = sample_spherical_tree(1, 1, rng);
  CHECK(circle.root.size() == 2);
  CHECK(circle.edges.rows() == 1);
}

TEST_CASE("spherical tree construction commutes with ambient rotations") {
  Rng rng(77);
  for (int rep = 0; rep < 30; ++rep) {
    Matrix raw(5, 4);
    for (Index i = 0; i < raw.rows(); ++i)
      for (Index c = 0; c < raw.cols(); ++c) raw(i, c) = rng.normal();
    const Matrix q = random_orthogonal(4, rng);

    const SphericalTree rotated_input =
        spherical_tree_from_gaussians(raw * q.transpose());
    const SphericalTree rotated_output =
        rotate_tree(q, spherical_tree_from_gaussians(raw));

    CHECK((rotated_input.root - rotated_output.root).cwiseAbs().maxCoeff() <=
          1e-10);
    CHECK((rotated_input.edges - rotated_output.edges).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("isometries: identity, translation, distance preservation") {
  Rng rng(78);
  Matrix pts(6, 3);
  for (Index i = 0; i < 6; ++i)
    for (Index c = 0; c < 3; ++c) pts(i, c) = rng.normal();
  const DiscreteMeasure m = DiscreteMeasure::uniform(pts);

  const IsometryEd id(Matrix::Identity(3, 3), Vector::Zero(3));
  CHECK((apply_isometry(id, m).points - pts).cwiseAbs().maxCoeff() == 0.0);

  Vector shift(3);
  shift << 1.0, -2.0, 0.5;
  const IsometryEd trans(Matrix::Identity(3, 3), shift);
  const Matrix shifted = apply_isometry(trans, m).points;
  for (Index i = 0; i < 6; ++i)
    CHECK((shifted.row(i) - pts.row(i) - shift.transpose())
              .cwiseAbs()
              .maxCoeff() <= 1e-15);

  for (int rep = 0; rep < 20; ++rep) {
    const IsometryEd g = random_isometry(3, 2.0, rng);
    const DiscreteMeasure gm = apply_isometry(g, m);
    const Matrix err = pairwise_distances(gm.points) - pairwise_distances(pts);
    CHECK(err.cwiseAbs().maxCoeff() <= 1e-10);
  }

  for (int rep = 0; rep < 20; ++rep) {
    const IsometryEd g = random_isometry(3, 2.0, rng);
    const TreeSystem t =
        sample_tree_system(3, 2, 1.0, DirectionScheme::IidUniform, rng);
    const TreeSystem gt = apply_isometry(g, t);
    CHECK((gt.root - (g.rotation * t.root + g.translation))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    for (Index i = 0; i < 2; ++i)
      CHECK(std::abs(gt.directions.row(i).norm() - 1.0) <= 1e-10);
  }
}

TEST_CASE("von Mises-Fisher: unit norms, uniform at kappa=0, sharp at 1e6") {
  Rng rng(79);
  Vector mean(3);
  mean << 0.0, 0.0, 1.0;

  const Matrix sharp = sample_vmf(mean, 1e6, 2000, rng);
  for (Index i = 0; i < sharp.rows(); ++i) {
    CHECK(std::abs(sharp.row(i).norm() - 1.0) <= 1e-9);
    const double cosang =
        std::clamp(sharp.row(i).dot(mean.transpose()), -1.0, 1.0);
    CHECK(std::acos(cosang) <= 0.01);
  }

  const Index n = 100000;
  const Matrix flat = sample_vmf(mean, 0.0, n, rng);
  Vector resultant = Vector::Zero(3);
  for (Index i = 0; i < n; ++i) {
    CHECK(std::abs(flat.row(i).norm() - 1.0) <= 1e-12);
    resultant += flat.row(i).transpose();
  }
  // Uniform samples: the mean resultant length is O(1/sqrt(n)).
  CHECK((resultant / static_cast<double>(n)).norm() <= 0.02);

  // Off-axis mean exercises the rotation branch of the sampler.
  Vector tilted(3);
  tilted << 1.0, 1.0, 1.0;
  tilted.normalize();
  const Matrix conc = sample_vmf(tilted, 50.0, 4000, rng);
  Vector avg = Vector::Zero(3);
  for (Index i = 0; i < conc.rows(); ++i) avg += conc.row(i).transpose();
  avg.normalize();
  CHECK(std::acos(std::clamp(avg.dot(tilted), -1.0, 1.0)) <= 0.05);
}

TEST_CASE("samplers are bit-identical for equal seeds") {
  const auto draw = [](std::uint64_t seed) {
    Rng rng(seed);
    const Vector v = sample_unit_sphere(4, rng);
    const TreeSystem t =
        sample_tree_system(4, 3, 1.0, DirectionScheme::Orthogonal, rng);
    const SphericalTree s = sample_spherical_tree(3, 2, rng);
    Vector mean(3);
    mean << 1.0, 0.0, 0.0;
    const Matrix vv = sample_vmf(mean, 10.0, 5, rng);
    return std::make_tuple(v, t.root, t.directions, s.root, s.edges, vv);
  };
  const auto a = draw(1234);
  const auto b = draw(1234);
  CHECK((std::get<0>(a) - std::get<0>(b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((std::get<1>(a) - std::get<1>(b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((std::get<2>(a) - std::get<2>(b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((std::get<3>(a) - std::get<3>(b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((std::get<4>(a) - std::get<4>(b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((std::get<5>(a) - std::get<5>(b)).cwiseAbs().maxCoeff() == 0.0);

  const auto c = draw(1235);
  CHECK((std::get<0>(a) - std::get<0>(c)).cwiseAbs().maxCoeff() > 0.0);

  CHECK(substream_seed(7, 1) != substream_seed(7, 2));
  CHECK(substream_seed(7, 1) == substream_seed(7, 1));
}
