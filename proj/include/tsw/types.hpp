#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Weighted point cloud; weights sum to one. `spherical` marks supports on
// the unit sphere of the ambient space.
struct DiscreteMeasure {
  Matrix points;   // n x d, one support point per row
  Vector weights;  // n, positive, sums to 1
  bool spherical = false;

  DiscreteMeasure(Matrix pts, Vector w, bool on_sphere = false)
      : points(std::move(pts)), weights(std::move(w)), spherical(on_sphere) {
    require(points.rows() == weights.size(),
            "measure: points/weights size mismatch");
    require(points.rows() > 0, "measure: empty support");
    require((weights.array() > 0).all(), "measure: weights must be positive");
    require(std::abs(weights.sum() - 1.0) <= 1e-12,
            "measure: weights must sum to 1");
    if (spherical) {
      for (Index i = 0; i < points.rows(); ++i) {
        require(std::abs(points.row(i).norm() - 1.0) <= 1e-9,
                "measure: spherical support must have unit norm");
      }
    }
  }

  static DiscreteMeasure uniform(Matrix pts, bool on_sphere = false) {
    const Index n = pts.rows();
    return DiscreteMeasure(std::move(pts), Vector::Constant(n, 1.0 / double(n)),
                           on_sphere);
  }

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

// k concurrent lines: a shared root and k unit directions.
struct TreeSystem {
  Vector root;        // d
  Matrix directions;  // k x d, unit rows

  TreeSystem(Vector r, Matrix dirs)
      : root(std::move(r)), directions(std::move(dirs)) {
    require(directions.rows() >= 1, "tree: needs at least one line");
    require(directions.cols() == root.size(), "tree: dimension mismatch");
    for (Index i = 0; i < directions.rows(); ++i) {
      require(std::abs(directions.row(i).norm() - 1.0) <= 1e-9,
              "tree: directions must be unit vectors");
    }
  }

  Index dim() const { return root.size(); }
  Index lines() const { return directions.rows(); }
};

// Spherical analogue: a root on S^d and k unit tangent vectors at the root.
struct SphericalTree {
  Vector root;   // d+1, unit
  Matrix edges;  // k x (d+1), unit rows orthogonal to root

  SphericalTree(Vector r, Matrix e) : root(std::move(r)), edges(std::move(e)) {
    require(edges.rows() >= 1, "spherical tree: needs at least one edge");
    require(edges.cols() == root.size(), "spherical tree: dimension mismatch");
    require(std::abs(root.norm() - 1.0) <= 1e-9,
            "spherical tree: root must be unit");
    for (Index i = 0; i < edges.rows(); ++i) {
      require(std::abs(edges.row(i).norm() - 1.0) <= 1e-9,
              "spherical tree: edges must be unit");
      require(std::abs(edges.row(i).dot(root)) <= 1e-9,
              "spherical tree: edges must be tangent at the root");
    }
  }

  Index ambient_dim() const { return root.size(); }
  Index lines() const { return edges.rows(); }
};

// Rigid motion y -> Qy + a with Q orthogonal.
struct IsometryEd {
  Matrix rotation;     // d x d orthogonal
  Vector translation;  // d

  IsometryEd(Matrix q, Vector a)
      : rotation(std::move(q)), translation(std::move(a)) {
    require(rotation.rows() == rotation.cols(), "isometry: Q must be square");
    require(rotation.rows() == translation.size(),
            "isometry: dimension mismatch");
    const Matrix qtq = rotation.transpose() * rotation;
    require((qtq - Matrix::Identity(rotation.rows(), rotation.cols()))
                    .cwiseAbs()
                    .maxCoeff() <= 1e-10,
            "isometry: Q must be orthogonal");
  }

  Vector apply(const Vector& y) const { return rotation * y + translation; }
};

enum class DirectionScheme { IidUniform, Orthogonal };

struct SpatialMapConfig {
  enum class Kind { Identity, OddPoly };
  Kind kind = Kind::Identity;
  int degree = 3;      // odd, >= 3
  double gamma = 1.0;  // > 0

  void validate() const {
    if (kind == Kind::Identity) return;
    require(degree >= 3 && degree % 2 == 1,
            "spatial_map: degree must be odd and >= 3");
    require(gamma > 0.0, "spatial_map: gamma must be positive");
  }
};

enum class TswMode { DbLinear, Spatial, Circular, CircularR0 };
enum class StswMode { Plain, Spatial };

struct DistanceConfig {
  int num_trees = 25;       // L
  int lines_per_tree = 4;   // k
  double radius = 0.0;      // r, circular modes only
  double root_std = 0.1;    // sigma of the root distribution
  DirectionScheme scheme = DirectionScheme::IidUniform;
  double splitting_sign = 1.0;         // +1 or -1
  double splitting_temperature = 1.0;  // tau > 0
  std::uint64_t seed = 0;
  SpatialMapConfig spatial_map;

  void validate(Index dim) const {
    require(num_trees >= 1, "config: num_trees must be >= 1");
    require(lines_per_tree >= 1, "config: lines_per_tree must be >= 1");
    require(radius >= 0.0, "config: radius must be >= 0");
    require(root_std >= 0.0, "config: root_std must be >= 0");
    require(splitting_sign == 1.0 || splitting_sign == -1.0,
            "config: splitting_sign must be +1 or -1");
    require(splitting_temperature > 0.0,
            "config: splitting_temperature must be > 0");
    if (scheme == DirectionScheme::Orthogonal) {
      require(lines_per_tree <= dim,
              "config: orthogonal scheme needs lines_per_tree <= dim");
    }
    spatial_map.validate();
  }
};

// Projected coordinates of one point cloud on one tree, k rows by n points.
struct CoordinateMatrix {
  enum class Range { RealLine, NonnegRay, Arc0Pi };
  Matrix values;  // k x n (1 x n when all lines share coordinates)
  Range range = Range::RealLine;
};

// Row-stochastic splitting weights, n points by k lines.
struct SplitWeights {
  Matrix values;  // n x k, rows sum to 1, entries in (0,1]
};

struct DistanceEstimate {
  double value = 0.0;
  std::vector<double> per_tree;
  DistanceConfig config_echo;
};

// Gradient of an estimate with respect to the first measure's points.
struct GradientField {
  Matrix values;  // n x d
};

}  // namespace tsw
