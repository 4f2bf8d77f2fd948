#pragma once

#include <vector>

#include "tsw/types.hpp"

namespace tsw {

// Mass placed on the lines of one tree after projection and splitting.
struct ProjectedTreeMeasure {
  struct Atom {
    double coord;
    double mass;
  };
  std::vector<std::vector<Atom>> lines;  // k lines

  double total_mass() const;
  Index num_lines() const { return static_cast<Index>(lines.size()); }
};

// Distributes m's weights over the k lines: atom (coords(i,j), w_j *
// split(j,i)) on line i. A single coordinate row is broadcast to all lines.
ProjectedTreeMeasure build_projected_measure(const DiscreteMeasure& m,
                                             const CoordinateMatrix& coords,
                                             const SplitWeights& split);

// W1 between two measures on the real line, sum |F_a - F_b| over gaps.
// Totals must match within 1e-10.
double one_dim_w1(const std::vector<ProjectedTreeMeasure::Atom>& a,
                  const std::vector<ProjectedTreeMeasure::Atom>& b);

// W1 under the tree metric of k concurrent lines (same line |t - s|, across
// lines |t| + |s|). Closed form: per line, a virtual atom at the root absorbs
// the line's surplus, then the 1-D CDF integral is accumulated; the result is
// the sum over lines.
double spider_w1(const ProjectedTreeMeasure& a, const ProjectedTreeMeasure& b);

// Exact min-cost transport on the explicit tree metric; knows nothing about
// the closed form above. Masses are integer unit counts: every unit becomes
// a node of an assignment problem (the transportation polytope is integral),
// solved exactly by shortest augmenting paths. Single-threaded, small
// instances only; returns the cost for unit-count inputs.
double lp_tree_w1_oracle(const std::vector<std::vector<double>>& coords_a,
                         const std::vector<std::vector<std::int64_t>>& units_a,
                         const std::vector<std::vector<double>>& coords_b,
                         const std::vector<std::vector<std::int64_t>>& units_b);

// Same solver on an arbitrary dense cost matrix; exposed for 1-D validation.
double lp_transport(const Matrix& cost, const std::vector<std::int64_t>& supply,
                    const std::vector<std::int64_t>& demand);

}  // namespace tsw
