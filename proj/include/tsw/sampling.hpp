#pragma once

#include "tsw/rng.hpp"
#include "tsw/types.hpp"

namespace tsw {

// Uniform draw from the unit sphere in R^dim (Gaussian normalization).
Vector sample_unit_sphere(Index dim, Rng& rng);

// Haar-distributed orthogonal matrix (QR of a Gaussian, signs fixed).
Matrix random_orthogonal(Index dim, Rng& rng);

IsometryEd random_isometry(Index dim, double translation_scale, Rng& rng);

// Root ~ N(0, root_std^2 I); directions either i.i.d. uniform on the sphere
// or an orthonormal k-frame from QR of k Gaussian columns.
TreeSystem sample_tree_system(Index dim, int lines, double root_std,
                              DirectionScheme scheme, Rng& rng);

// Deterministic construction from raw Gaussian rows ((k+1) x (d+1)): row 0
// becomes the root, the rest are projected to the tangent space at the root
// and normalized. Exposed so equivariance can be tested directly.
SphericalTree spherical_tree_from_gaussians(const Matrix& raw);

// Tree on S^d (ambient dimension d+1): uniform root, i.i.d. tangent edges.
SphericalTree sample_spherical_tree(Index sphere_dim, int lines, Rng& rng);

// Von Mises-Fisher on the unit sphere of R^dim via Wood's rejection scheme;
// kappa = 0 degenerates to the uniform distribution.
Matrix sample_vmf(const Vector& mean, double kappa, Index n, Rng& rng);

DiscreteMeasure apply_isometry(const IsometryEd& g, const DiscreteMeasure& m);
TreeSystem apply_isometry(const IsometryEd& g, const TreeSystem& t);

// Rotations of spherical data (O(d+1) acting on the ambient space).
DiscreteMeasure rotate_measure(const Matrix& q, const DiscreteMeasure& m);
SphericalTree rotate_tree(const Matrix& q, const SphericalTree& t);

}  // namespace tsw
