#include "tree_eval.hpp"

#include <algorithm>
#include <cmath>

namespace tsw::detail {

namespace {

constexpr double kDenomFloor = 1e-150;

inline double sgn0(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

void softmax_rows(const Matrix& scores, Matrix& out) {
  out.resizeLike(scores);
  for (Index j = 0; j < scores.rows(); ++j) {
    const double m = scores.row(j).maxCoeff();
    out.row(j) = (scores.row(j).array() - m).exp();
    out.row(j) /= out.row(j).sum();
  }
}

struct SortKey {
  double coord;
  std::int32_t tag;
  std::int32_t rank;  // tie order: a_j, b_j interleaved, virtual atom last
  bool operator<(const SortKey& o) const {
    return coord < o.coord || (coord == o.coord && rank < o.rank);
  }
};

// Atoms tied on a coordinate are walked as a_0, b_0, a_1, b_1, ... so that
// identical measures cancel pair by pair and the prefix stays exactly zero.
std::int32_t pair_rank(std::int32_t tag, Index n_a, std::int32_t virtual_tag) {
  if (tag == virtual_tag) return std::numeric_limits<std::int32_t>::max();
  if (tag < n_a) return 2 * tag;
  return 2 * (tag - static_cast<std::int32_t>(n_a)) + 1;
}

// Atoms for one line, already sorted by (coordinate, tag). Returns the CDF
// integral; optionally fills coordinate subgradients and mass sensitivities
// for a-side atoms (tags < n_a) into ws.grad_t / ws.dalpha column `line`.
double walk_sorted_line(Workspace& ws, Index n_a, std::int32_t virtual_tag,
                        const Vector& wa, Index line, bool want_grad,
                        TieDiag* diag) {
  const std::size_t m = ws.coord.size();
  ws.prefix.resize(m);
  double cost = 0.0;
  double run = 0.0;
  for (std::size_t q = 0; q < m; ++q) {
    run += ws.mass[q];
    ws.prefix[q] = run;
    if (q + 1 < m) {
      const double gap = ws.coord[q + 1] - ws.coord[q];
      cost += std::abs(run) * gap;
    }
  }

  if (diag) {
    for (std::size_t q = 0; q + 1 < m; ++q) {
      const double gap = ws.coord[q + 1] - ws.coord[q];
      diag->min_gap = std::min(diag->min_gap, gap);
      if (gap > 1e-12) {
        diag->min_abs_prefix =
            std::min(diag->min_abs_prefix, std::abs(ws.prefix[q]));
      }
    }
  }

  if (!want_grad) return cost;

  ws.suffix.resize(m);
  ws.suffix[m - 1] = 0.0;
  for (std::size_t q = m - 1; q-- > 0;) {
    const double gap = ws.coord[q + 1] - ws.coord[q];
    ws.suffix[q] = ws.suffix[q + 1] + sgn0(ws.prefix[q]) * gap;
  }
  double s_virtual = 0.0;
  for (std::size_t q = 0; q < m; ++q) {
    if (ws.tag[q] == virtual_tag) {
      s_virtual = ws.suffix[q];
      break;
    }
  }

  // Tie groups share a coordinate; the subgradient w.r.t. a member's
  // coordinate is the minimum-norm choice in [g_minus, g_plus], which is
  // exactly zero for coincident +m/-m pairs.
  std::size_t q = 0;
  while (q < m) {
    std::size_t r = q;
    while (r + 1 < m && ws.coord[r + 1] == ws.coord[q]) ++r;
    const double pl = (q > 0) ? ws.prefix[q - 1] : 0.0;
    const double pr = ws.prefix[r];
    for (std::size_t p = q; p <= r; ++p) {
      const std::int32_t tag = ws.tag[p];
      if (tag >= n_a && tag < virtual_tag) continue;
      if (tag == virtual_tag) continue;
      const double ms = ws.mass[p];
      const double gplus = std::abs(pr - ms) - std::abs(pr);
      const double gminus = std::abs(pl) - std::abs(pl + ms);
      double g = 0.0;
      if (gminus > 0.0)
        g = gminus;
      else if (gplus < 0.0)
        g = gplus;
      ws.grad_t(tag, line) = g;
      ws.dalpha(tag, line) = wa[tag] * (ws.suffix[p] - s_virtual);
    }
    q = r + 1;
  }
  return cost;
}

}  // namespace

double euclidean_tree_value(const Matrix& pa, const Vector& wa,
                            const Matrix& pb, const Vector& wb,
                            const TreeSystem& tree, const TreeEvalParams& par,
                            Workspace& ws, Matrix* grad_a, TieDiag* diag) {
  const Index n_a = pa.rows();
  const Index n_b = pb.rows();
  const Index k = tree.lines();
  const double r = par.radius;
  const bool shared = par.proj == ProjKind::CircularShared;
  const bool circular =
      par.proj == ProjKind::Circular || par.proj == ProjKind::CircularShared;
  const bool want_grad = grad_a != nullptr;

  ws.va = pa.rowwise() - tree.root.transpose();
  ws.vb = pb.rowwise() - tree.root.transpose();
  ws.sqa = ws.va.rowwise().squaredNorm();
  ws.sqb = ws.vb.rowwise().squaredNorm();
  ws.qa.noalias() = ws.va * tree.directions.transpose();
  ws.qb.noalias() = ws.vb * tree.directions.transpose();

  // Coordinates: <v,theta> (linear) or ||v - r theta|| expanded through the
  // same inner products, ||v||^2 - 2 r <v,theta> + r^2.
  const auto coords = [&](const Matrix& q, const Vector& sq, Matrix& t) {
    const Index n = q.rows();
    if (par.proj == ProjKind::Linear) {
      t = q;
      return;
    }
    if (shared) {
      t.resize(n, 1);
      for (Index j = 0; j < n; ++j) t(j, 0) = std::sqrt(sq[j]);
      return;
    }
    t.resize(n, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < n; ++j)
        t(j, i) = std::sqrt(std::max(0.0, sq[j] - 2.0 * r * q(j, i) + r * r));
  };
  coords(ws.qa, ws.sqa, ws.ta);
  coords(ws.qb, ws.sqb, ws.tb);

  // Splitting distances: orthogonal residual sqrt(||v||^2 - <v,theta>^2) in
  // linear mode, distance to the projected point sqrt(||v||^2 - 2 t <v,theta>
  // + t^2) in circular mode.
  const auto split_dists = [&](const Matrix& q, const Vector& sq,
                               const Matrix& t, Matrix& out) {
    const Index n = q.rows();
    out.resize(n, k);
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < n; ++j) {
        double d2;
        if (!circular) {
          d2 = sq[j] - q(j, i) * q(j, i);
        } else {
          const double tc = shared ? t(j, 0) : t(j, i);
          d2 = sq[j] - 2.0 * tc * q(j, i) + tc * tc;
        }
        out(j, i) = std::sqrt(std::max(0.0, d2));
      }
    }
  };
  split_dists(ws.qa, ws.sqa, ws.ta, ws.alpha_a);
  split_dists(ws.qb, ws.sqb, ws.tb, ws.alpha_b);
  Matrix dist_a, dist_b;
  if (want_grad) {
    dist_a = ws.alpha_a;
    dist_b = ws.alpha_b;
  }
  const double scale = par.sign / par.temperature;
  ws.alpha_a *= scale;
  ws.alpha_b *= scale;
  softmax_rows(ws.alpha_a, ws.alpha_a);
  softmax_rows(ws.alpha_b, ws.alpha_b);

  // Line totals; the virtual root atom absorbs each line's surplus.
  Vector la = Vector::Zero(k), lb = Vector::Zero(k);
  for (Index i = 0; i < k; ++i) {
    double sa = 0.0, sb = 0.0;
    for (Index j = 0; j < n_a; ++j) sa += wa[j] * ws.alpha_a(j, i);
    for (Index j = 0; j < n_b; ++j) sb += wb[j] * ws.alpha_b(j, i);
    la[i] = sa;
    lb[i] = sb;
  }

  if (want_grad) {
    ws.grad_t.setZero(n_a, k);
    ws.dalpha.setZero(n_a, k);
  }

  const std::int32_t virtual_tag = static_cast<std::int32_t>(n_a + n_b);
  const std::size_t m = static_cast<std::size_t>(n_a + n_b + 1);
  std::vector<SortKey> keys(m);
  ws.coord.resize(m);
  ws.mass.resize(m);
  ws.tag.resize(m);

  const auto fill_masses = [&](Index i) {
    for (std::size_t q = 0; q < m; ++q) {
      const std::int32_t tag = ws.tag[q];
      if (tag < n_a)
        ws.mass[q] = wa[tag] * ws.alpha_a(tag, i);
      else if (tag < virtual_tag)
        ws.mass[q] = -wb[tag - n_a] * ws.alpha_b(tag - n_a, i);
      else
        ws.mass[q] = -(la[i] - lb[i]);
    }
  };

  double value = 0.0;
  if (shared) {
    for (Index j = 0; j < n_a; ++j)
      keys[static_cast<std::size_t>(j)] = {
          ws.ta(j, 0), static_cast<std::int32_t>(j),
          pair_rank(static_cast<std::int32_t>(j), n_a, virtual_tag)};
    for (Index j = 0; j < n_b; ++j)
      keys[static_cast<std::size_t>(n_a + j)] = {
          ws.tb(j, 0), static_cast<std::int32_t>(n_a + j),
          pair_rank(static_cast<std::int32_t>(n_a + j), n_a, virtual_tag)};
    keys[m - 1] = {0.0, virtual_tag,
                   pair_rank(virtual_tag, n_a, virtual_tag)};
    std::sort(keys.begin(), keys.end());
    for (std::size_t q = 0; q < m; ++q) {
      ws.coord[q] = keys[q].coord;
      ws.tag[q] = keys[q].tag;
    }
    for (Index i = 0; i < k; ++i) {
      fill_masses(i);
      value += walk_sorted_line(ws, n_a, virtual_tag, wa, i, want_grad, diag);
    }
  } else {
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < n_a; ++j)
        keys[static_cast<std::size_t>(j)] = {
            ws.ta(j, i), static_cast<std::int32_t>(j),
            pair_rank(static_cast<std::int32_t>(j), n_a, virtual_tag)};
      for (Index j = 0; j < n_b; ++j)
        keys[static_cast<std::size_t>(n_a + j)] = {
            ws.tb(j, i), static_cast<std::int32_t>(n_a + j),
            pair_rank(static_cast<std::int32_t>(n_a + j), n_a, virtual_tag)};
      keys[m - 1] = {0.0, virtual_tag,
                     pair_rank(virtual_tag, n_a, virtual_tag)};
      std::sort(keys.begin(), keys.end());
      for (std::size_t q = 0; q < m; ++q) {
        ws.coord[q] = keys[q].coord;
        ws.tag[q] = keys[q].tag;
      }
      fill_masses(i);
      value += walk_sorted_line(ws, n_a, virtual_tag, wa, i, want_grad, diag);
    }
  }

  if (diag && circular) {
    for (Index j = 0; j < n_a; ++j)
      for (Index i = 0; i < (shared ? Index{1} : k); ++i)
        diag->min_denom = std::min(diag->min_denom, ws.ta(j, i));
  }

  if (!want_grad) return value;

  // Chain rule, coordinate part.
  if (par.proj == ProjKind::Linear) {
    grad_a->noalias() += ws.grad_t * tree.directions;
  } else {
    // dt/dy = (v - r theta) / t (r = 0 on the shared path).
    Matrix gt = ws.grad_t;
    for (Index j = 0; j < n_a; ++j) {
      for (Index i = 0; i < k; ++i) {
        const double t = shared ? ws.ta(j, 0) : ws.ta(j, i);
        gt(j, i) = (t > kDenomFloor) ? gt(j, i) / t : 0.0;
      }
    }
    grad_a->noalias() += (gt.rowwise().sum()).asDiagonal() * ws.va;
    if (!shared && r != 0.0) grad_a->noalias() -= r * (gt * tree.directions);
  }

  // Chain rule, splitting part: d(cost)/d(dist) via the softmax Jacobian,
  // then d(dist)/dy.
  Matrix gdist(n_a, k);
  for (Index j = 0; j < n_a; ++j) {
    double mbar = 0.0;
    for (Index i = 0; i < k; ++i) mbar += ws.alpha_a(j, i) * ws.dalpha(j, i);
    for (Index i = 0; i < k; ++i)
      gdist(j, i) = scale * ws.alpha_a(j, i) * (ws.dalpha(j, i) - mbar);
  }

  Vector coef_v = Vector::Zero(n_a);
  Matrix coef_dir = Matrix::Zero(n_a, k);
  for (Index j = 0; j < n_a; ++j) {
    for (Index i = 0; i < k; ++i) {
      const double g = gdist(j, i);
      if (g == 0.0) continue;
      const double nf = dist_a(j, i);
      if (nf <= kDenomFloor) continue;
      const double q = ws.qa(j, i);
      if (!circular) {
        // dist = ||v - <v,theta> theta||: gradient (v - q theta) / dist.
        coef_v[j] += g / nf;
        coef_dir(j, i) -= g * q / nf;
      } else {
        const double t = shared ? ws.ta(j, 0) : ws.ta(j, i);
        // dist = ||v - t theta||, t = ||v - r theta||:
        // grad = (v - t theta)/dist - ((q - t)/dist) * dt/dy.
        coef_v[j] += g / nf;
        coef_dir(j, i) -= g * t / nf;
        if (t > kDenomFloor) {
          const double back = g * (q - t) / (nf * t);
          coef_v[j] -= back;
          coef_dir(j, i) += back * r;
        }
      }
    }
  }
  grad_a->noalias() += coef_v.asDiagonal() * ws.va;
  grad_a->noalias() += coef_dir * tree.directions;
  return value;
}

double spherical_tree_value(const Matrix& pa, const Vector& wa,
                            const Matrix& pb, const Vector& wb,
                            const SphericalTree& tree, Workspace& ws,
                            Matrix* grad_a, TieDiag* diag) {
  const Index n_a = pa.rows();
  const Index n_b = pb.rows();
  const Index k = tree.lines();
  const bool want_grad = grad_a != nullptr;
  constexpr double kPoleFloor = 1e-24;
  constexpr double kArcFloor = 1e-18;

  // Shared coordinates arccos(<root, y>) and tangent-angle splitting scores.
  const auto project = [&](const Matrix& p, Index n, Matrix& t, Matrix& beta,
                           Matrix& u_out, Matrix& rho2_out) {
    t.resize(n, 1);
    beta.resize(n, k);
    u_out.resize(n, 1);
    rho2_out.resize(n, 1);
    for (Index j = 0; j < n; ++j) {
      const double u = std::clamp(p.row(j).dot(tree.root.transpose()), -1.0, 1.0);
      u_out(j, 0) = u;
      const double rho2 = 1.0 - u * u;
      rho2_out(j, 0) = rho2;
      t(j, 0) = std::acos(u);
      if (rho2 < kPoleFloor) {
        beta.row(j).setZero();
        continue;
      }
      const double rho = std::sqrt(rho2);
      for (Index i = 0; i < k; ++i) {
        const double q = p.row(j).dot(tree.edges.row(i));
        const double w = std::clamp(q / rho, -1.0, 1.0);
        beta(j, i) = std::acos(w) * rho;
      }
    }
  };

  Matrix ua, ub, rho2a, rho2b, beta_a, beta_b;
  project(pa, n_a, ws.ta, beta_a, ua, rho2a);
  project(pb, n_b, ws.tb, beta_b, ub, rho2b);
  softmax_rows(beta_a, ws.alpha_a);
  softmax_rows(beta_b, ws.alpha_b);

  Vector la = Vector::Zero(k), lb = Vector::Zero(k);
  for (Index i = 0; i < k; ++i) {
    double sa = 0.0, sb = 0.0;
    for (Index j = 0; j < n_a; ++j) sa += wa[j] * ws.alpha_a(j, i);
    for (Index j = 0; j < n_b; ++j) sb += wb[j] * ws.alpha_b(j, i);
    la[i] = sa;
    lb[i] = sb;
  }

  if (want_grad) {
    ws.grad_t.setZero(n_a, k);
    ws.dalpha.setZero(n_a, k);
  }

  const std::int32_t virtual_tag = static_cast<std::int32_t>(n_a + n_b);
  const std::size_t m = static_cast<std::size_t>(n_a + n_b + 1);
  std::vector<SortKey> keys(m);
  for (Index j = 0; j < n_a; ++j)
    keys[static_cast<std::size_t>(j)] = {
        ws.ta(j, 0), static_cast<std::int32_t>(j),
        pair_rank(static_cast<std::int32_t>(j), n_a, virtual_tag)};
  for (Index j = 0; j < n_b; ++j)
    keys[static_cast<std::size_t>(n_a + j)] = {
        ws.tb(j, 0), static_cast<std::int32_t>(n_a + j),
        pair_rank(static_cast<std::int32_t>(n_a + j), n_a, virtual_tag)};
  keys[m - 1] = {0.0, virtual_tag, pair_rank(virtual_tag, n_a, virtual_tag)};
  std::sort(keys.begin(), keys.end());
  ws.coord.resize(m);
  ws.mass.resize(m);
  ws.tag.resize(m);
  for (std::size_t q = 0; q < m; ++q) {
    ws.coord[q] = keys[q].coord;
    ws.tag[q] = keys[q].tag;
  }

  double value = 0.0;
  for (Index i = 0; i < k; ++i) {
    for (std::size_t q = 0; q < m; ++q) {
      const std::int32_t tag = ws.tag[q];
      if (tag < n_a)
        ws.mass[q] = wa[tag] * ws.alpha_a(tag, i);
      else if (tag < virtual_tag)
        ws.mass[q] = -wb[tag - n_a] * ws.alpha_b(tag - n_a, i);
      else
        ws.mass[q] = -(la[i] - lb[i]);
    }
    value += walk_sorted_line(ws, n_a, virtual_tag, wa, i, want_grad, diag);
  }

  if (diag) {
    for (Index j = 0; j < n_a; ++j) {
      diag->min_denom = std::min(diag->min_denom, rho2a(j, 0));
      if (rho2a(j, 0) >= kPoleFloor) {
        const double rho = std::sqrt(rho2a(j, 0));
        for (Index i = 0; i < k; ++i) {
          const double q = pa.row(j).dot(tree.edges.row(i));
          const double w = std::clamp(q / rho, -1.0, 1.0);
          diag->min_denom = std::min(diag->min_denom, 1.0 - w * w);
        }
      }
    }
  }

  if (!want_grad) return value;

  Vector coef_root = Vector::Zero(n_a);
  Matrix coef_edge = Matrix::Zero(n_a, k);

  for (Index j = 0; j < n_a; ++j) {
    const double u = ua(j, 0);
    const double rho2 = rho2a(j, 0);

    // Coordinate part: d/dy arccos(<root, y>) = -root / sqrt(1 - u^2).
    const double dt = ws.grad_t.row(j).sum();
    if (rho2 >= kArcFloor) coef_root[j] -= dt / std::sqrt(rho2);

    if (rho2 < kPoleFloor) continue;  // degenerate branch: zero derivative
    const double rho = std::sqrt(rho2);

    double mbar = 0.0;
    for (Index i = 0; i < k; ++i) mbar += ws.alpha_a(j, i) * ws.dalpha(j, i);
    for (Index i = 0; i < k; ++i) {
      const double gbeta = ws.alpha_a(j, i) * (ws.dalpha(j, i) - mbar);
      if (gbeta == 0.0) continue;
      const double q = pa.row(j).dot(tree.edges.row(i));
      const double w = std::clamp(q / rho, -1.0, 1.0);
      // beta = arccos(w) rho: d(beta)/dy = -arccos(w) (u/rho) root
      //   - (e_i + q u root / rho^2) / sqrt(1 - w^2).
      coef_root[j] -= gbeta * std::acos(w) * u / rho;
      const double w2 = 1.0 - w * w;
      if (w2 >= kArcFloor) {
        const double s2 = 1.0 / std::sqrt(w2);
        coef_edge(j, i) -= gbeta * s2;
        coef_root[j] -= gbeta * s2 * q * u / rho2;
      }
    }
  }

  grad_a->noalias() += coef_root * tree.root.transpose();
  grad_a->noalias() += coef_edge * tree.edges;
  return value;
}

}  // namespace tsw::detail
