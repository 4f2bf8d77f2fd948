#include "tsw/tree_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tsw/assignment.hpp"

namespace tsw {

double ProjectedTreeMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& line : lines)
    for (const auto& atom : line) total += atom.mass;
  return total;
}

ProjectedTreeMeasure build_projected_measure(const DiscreteMeasure& m,
                                             const CoordinateMatrix& coords,
                                             const SplitWeights& split) {
  const Index n = m.size();
  const Index k = split.values.cols();
  require(split.values.rows() == n, "build_projected_measure: split size");
  require(coords.values.cols() == n, "build_projected_measure: coord size");
  require(coords.values.rows() == k || coords.values.rows() == 1,
          "build_projected_measure: coordinate rows must be k or 1");
  const bool shared = coords.values.rows() == 1;
  ProjectedTreeMeasure out;
  out.lines.resize(k);
  for (Index i = 0; i < k; ++i) {
    out.lines[i].reserve(n);
    for (Index j = 0; j < n; ++j) {
      const double c = shared ? coords.values(0, j) : coords.values(i, j);
      out.lines[i].push_back({c, m.weights[j] * split.values(j, i)});
    }
  }
  return out;
}

namespace {

struct SignedAtom {
  double coord;
  double mass;
  int seq;
};

double cdf_integral(std::vector<SignedAtom>& atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const SignedAtom& x, const SignedAtom& y) {
    return x.coord < y.coord || (x.coord == y.coord && x.seq < y.seq);
  });
  double cost = 0.0;
  double prefix = 0.0;
  for (std::size_t q = 0; q + 1 < atoms.size(); ++q) {
    prefix += atoms[q].mass;
    cost += std::abs(prefix) * (atoms[q + 1].coord - atoms[q].coord);
  }
  return cost;
}

}  // namespace

double one_dim_w1(const std::vector<ProjectedTreeMeasure::Atom>& a,
                  const std::vector<ProjectedTreeMeasure::Atom>& b) {
  double total_a = 0.0, total_b = 0.0;
  std::vector<SignedAtom> atoms;
  atoms.reserve(a.size() + b.size());
  // Interleaved tie-break ranks (a_i before b_i) so that identical inputs
  // cancel pair by pair and the prefix stays exactly zero.
  for (std::size_t i = 0; i < a.size(); ++i) {
    total_a += a[i].mass;
    atoms.push_back({a[i].coord, a[i].mass, 2 * static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    total_b += b[i].mass;
    atoms.push_back({b[i].coord, -b[i].mass, 2 * static_cast<int>(i) + 1});
  }
  require(std::abs(total_a - total_b) <= 1e-10, "one_dim_w1: totals differ");
  if (atoms.empty()) return 0.0;
  return cdf_integral(atoms);
}

double spider_w1(const ProjectedTreeMeasure& a, const ProjectedTreeMeasure& b) {
  require(a.num_lines() == b.num_lines(), "spider_w1: line count mismatch");
  require(std::abs(a.total_mass() - b.total_mass()) <= 1e-10,
          "spider_w1: totals differ");
  const Index k = a.num_lines();
  double cost = 0.0;
  std::vector<SignedAtom> atoms;
  for (Index i = 0; i < k; ++i) {
    atoms.clear();
    atoms.reserve(a.lines[i].size() + b.lines[i].size() + 1);
    double total_a = 0.0, total_b = 0.0;
    // Interleaved tie-break ranks as in one_dim_w1: identical lines cancel
    // exactly and the virtual root atom sorts after any real atom at 0.
    for (std::size_t t = 0; t < a.lines[i].size(); ++t) {
      atoms.push_back({a.lines[i][t].coord, a.lines[i][t].mass,
                       2 * static_cast<int>(t)});
      total_a += a.lines[i][t].mass;
    }
    for (std::size_t t = 0; t < b.lines[i].size(); ++t) {
      atoms.push_back({b.lines[i][t].coord, -b.lines[i][t].mass,
                       2 * static_cast<int>(t) + 1});
      total_b += b.lines[i][t].mass;
    }
    // The root exchanges this line's surplus with the rest of the tree.
    // Side totals are accumulated separately so the surplus of identical
    // lines is exactly zero.
    atoms.push_back({0.0, -(total_a - total_b),
                     std::numeric_limits<int>::max()});
    cost += cdf_integral(atoms);
  }
  return cost;
}

double lp_transport(const Matrix& cost, const std::vector<std::int64_t>& supply,
                    const std::vector<std::int64_t>& demand) {
  const Index ns = static_cast<Index>(supply.size());
  const Index nd = static_cast<Index>(demand.size());
  require(cost.rows() == ns && cost.cols() == nd, "lp_transport: shape mismatch");
  const std::int64_t total_s = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  const std::int64_t total_d = std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
  require(total_s == total_d, "lp_transport: unbalanced problem");
  require(total_s > 0, "lp_transport: empty problem");
  for (const auto s : supply) require(s >= 0, "lp_transport: negative supply");
  for (const auto d : demand) require(d >= 0, "lp_transport: negative demand");

  // Expand every mass unit into its own node; the transportation polytope is
  // integral, so the optimal assignment over units matches the LP optimum.
  std::vector<Index> unit_src, unit_dst;
  unit_src.reserve(static_cast<std::size_t>(total_s));
  unit_dst.reserve(static_cast<std::size_t>(total_d));
  for (Index i = 0; i < ns; ++i)
    for (std::int64_t r = 0; r < supply[i]; ++r) unit_src.push_back(i);
  for (Index j = 0; j < nd; ++j)
    for (std::int64_t r = 0; r < demand[j]; ++r) unit_dst.push_back(j);

  const Index u = static_cast<Index>(total_s);
  Matrix unit_cost(u, u);
  for (Index a = 0; a < u; ++a)
    for (Index b = 0; b < u; ++b)
      unit_cost(a, b) = cost(unit_src[a], unit_dst[b]);

  std::vector<Index> match;
  return solve_assignment(unit_cost, match);
}

double lp_tree_w1_oracle(const std::vector<std::vector<double>>& coords_a,
                         const std::vector<std::vector<std::int64_t>>& units_a,
                         const std::vector<std::vector<double>>& coords_b,
                         const std::vector<std::vector<std::int64_t>>& units_b) {
  require(coords_a.size() == units_a.size() && coords_b.size() == units_b.size(),
          "lp_tree_w1_oracle: ragged inputs");
  require(coords_a.size() == coords_b.size(), "lp_tree_w1_oracle: line counts differ");
  const std::size_t k = coords_a.size();

  struct Node {
    std::size_t line;
    double coord;
  };
  std::vector<Node> nodes_a, nodes_b;
  std::vector<std::int64_t> supply, demand;
  for (std::size_t i = 0; i < k; ++i) {
    require(coords_a[i].size() == units_a[i].size(), "lp_tree_w1_oracle: ragged line");
    require(coords_b[i].size() == units_b[i].size(), "lp_tree_w1_oracle: ragged line");
    for (std::size_t j = 0; j < coords_a[i].size(); ++j) {
      nodes_a.push_back({i, coords_a[i][j]});
      supply.push_back(units_a[i][j]);
    }
    for (std::size_t j = 0; j < coords_b[i].size(); ++j) {
      nodes_b.push_back({i, coords_b[i][j]});
      demand.push_back(units_b[i][j]);
    }
  }
  require(!nodes_a.empty() && !nodes_b.empty(), "lp_tree_w1_oracle: empty side");

  const auto tree_dist = [](const Node& x, const Node& y) {
    if (x.line == y.line) return std::abs(x.coord - y.coord);
    return std::abs(x.coord) + std::abs(y.coord);
  };
  Matrix cost(nodes_a.size(), nodes_b.size());
  for (std::size_t i = 0; i < nodes_a.size(); ++i)
    for (std::size_t j = 0; j < nodes_b.size(); ++j)
      cost(static_cast<Index>(i), static_cast<Index>(j)) =
          tree_dist(nodes_a[i], nodes_b[j]);
  return lp_transport(cost, supply, demand);
}

}  // namespace tsw
