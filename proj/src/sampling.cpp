#include "tsw/sampling.hpp"

#include <cmath>

namespace tsw {

namespace {

Vector gaussian_vector(Index dim, Rng& rng) {
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

Vector sample_unit_sphere(Index dim, Rng& rng) {
  require(dim >= 1, "sample_unit_sphere: dim must be >= 1");
  for (;;) {
    Vector v = gaussian_vector(dim, rng);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

Matrix random_orthogonal(Index dim, Rng& rng) {
  require(dim >= 1, "random_orthogonal: dim must be >= 1");
  Matrix g(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

IsometryEd random_isometry(Index dim, double translation_scale, Rng& rng) {
  Vector a = gaussian_vector(dim, rng) * translation_scale;
  return IsometryEd(random_orthogonal(dim, rng), std::move(a));
}

TreeSystem sample_tree_system(Index dim, int lines, double root_std,
                              DirectionScheme scheme, Rng& rng) {
  require(lines >= 1, "sample_tree_system: lines must be >= 1");
  Vector root = gaussian_vector(dim, rng) * root_std;
  Matrix dirs(lines, dim);
  if (scheme == DirectionScheme::IidUniform) {
    for (int i = 0; i < lines; ++i)
      dirs.row(i) = sample_unit_sphere(dim, rng).transpose();
  } else {
    require(lines <= dim, "sample_tree_system: orthogonal scheme needs k <= d");
    for (;;) {
      Matrix g(dim, lines);
      for (Index i = 0; i < dim; ++i)
        for (int j = 0; j < lines; ++j) g(i, j) = rng.normal();
      Eigen::HouseholderQR<Matrix> qr(g);
      const Matrix r = qr.matrixQR().topRows(lines).triangularView<Eigen::Upper>();
      bool ok = true;
      for (int j = 0; j < lines; ++j) ok = ok && std::abs(r(j, j)) > 1e-12;
      if (!ok) continue;
      Matrix q = qr.householderQ() * Matrix::Identity(dim, lines);
      for (int j = 0; j < lines; ++j) {
        if (r(j, j) < 0) q.col(j) = -q.col(j);
      }
      dirs = q.transpose();
      break;
    }
  }
  return TreeSystem(std::move(root), std::move(dirs));
}

SphericalTree spherical_tree_from_gaussians(const Matrix& raw) {
  require(raw.rows() >= 2, "spherical tree: needs root row plus edges");
  const Index ambient = raw.cols();
  require(ambient >= 2, "spherical tree: ambient dimension must be >= 2");
  Vector root = raw.row(0).transpose();
  const double rn = root.norm();
  require(rn > 1e-12, "spherical tree: degenerate root draw");
  root /= rn;
  Matrix edges(raw.rows() - 1, ambient);
  for (Index i = 1; i < raw.rows(); ++i) {
    Vector e = raw.row(i).transpose();
    e -= e.dot(root) * root;
    const double en = e.norm();
    require(en > 1e-12, "spherical tree: degenerate edge draw");
    edges.row(i - 1) = (e / en).transpose();
  }
  return SphericalTree(std::move(root), std::move(edges));
}

SphericalTree sample_spherical_tree(Index sphere_dim, int lines, Rng& rng) {
  require(sphere_dim >= 1, "sample_spherical_tree: sphere_dim must be >= 1");
  require(lines >= 1, "sample_spherical_tree: lines must be >= 1");
  const Index ambient = sphere_dim + 1;
  for (;;) {
    Matrix raw(lines + 1, ambient);
    for (Index i = 0; i < raw.rows(); ++i)
      for (Index j = 0; j < ambient; ++j) raw(i, j) = rng.normal();
    if (raw.row(0).norm() <= 1e-12) continue;
    bool ok = true;
    Vector root = raw.row(0).transpose().normalized();
    for (Index i = 1; i < raw.rows() && ok; ++i) {
      Vector e = raw.row(i).transpose();
      e -= e.dot(root) * root;
      ok = e.norm() > 1e-12;
    }
    if (ok) return spherical_tree_from_gaussians(raw);
  }
}

Matrix sample_vmf(const Vector& mean, double kappa, Index n, Rng& rng) {
  const Index p = mean.size();
  require(p >= 2, "sample_vmf: ambient dimension must be >= 2");
  require(std::abs(mean.norm() - 1.0) <= 1e-9, "sample_vmf: mean must be unit");
  require(kappa >= 0.0, "sample_vmf: kappa must be >= 0");

  Matrix out(n, p);
  if (kappa == 0.0) {
    for (Index i = 0; i < n; ++i)
      out.row(i) = sample_unit_sphere(p, rng).transpose();
    return out;
  }

  const double dm1 = static_cast<double>(p - 1);
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  for (Index i = 0; i < n; ++i) {
    double w;
    for (;;) {
      const double z = rng.beta(dm1 / 2.0, dm1 / 2.0);
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = rng.uniform_pos();
      if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    // Tangent direction orthogonal to the mean.
    Vector v;
    for (;;) {
      v = gaussian_vector(p, rng);
      v -= v.dot(mean) * mean;
      const double vn = v.norm();
      if (vn > 1e-12) {
        v /= vn;
        break;
      }
    }
    const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    Vector x = w * mean + s * v;
    out.row(i) = (x / x.norm()).transpose();
  }
  return out;
}

DiscreteMeasure apply_isometry(const IsometryEd& g, const DiscreteMeasure& m) {
  require(g.translation.size() == m.dim(), "apply_isometry: dimension mismatch");
  Matrix pts = m.points * g.rotation.transpose();
  pts.rowwise() += g.translation.transpose();
  return DiscreteMeasure(std::move(pts), m.weights, false);
}

TreeSystem apply_isometry(const IsometryEd& g, const TreeSystem& t) {
  require(g.translation.size() == t.dim(), "apply_isometry: dimension mismatch");
  return TreeSystem(g.apply(t.root), t.directions * g.rotation.transpose());
}

DiscreteMeasure rotate_measure(const Matrix& q, const DiscreteMeasure& m) {
  require(q.rows() == m.dim(), "rotate_measure: dimension mismatch");
  return DiscreteMeasure(m.points * q.transpose(), m.weights, m.spherical);
}

SphericalTree rotate_tree(const Matrix& q, const SphericalTree& t) {
  require(q.rows() == t.ambient_dim(), "rotate_tree: dimension mismatch");
  return SphericalTree(q * t.root, t.edges * q.transpose());
}

}  // namespace tsw
