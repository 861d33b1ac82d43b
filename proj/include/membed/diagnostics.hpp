#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace membed {

// Two-way fixed-effects regression of the metric-recovery law:
//   -t_hat log P_ij = beta rho^2_ij + u_i + v_j + eps
// over all pairs with positive conditionals and finite squared distances.
// r_squared is the variance the distance term explains beyond the intercepts
// alone (1 - SSE_full / SSE_intercepts_only), so shuffled distances score
// near zero even though the free intercepts soak up row/column structure.
// The gauge sum_i u_i = 0 pins the constant exchanged between u and v.
struct VaradhanFit {
  double slope = 0;
  double r_squared = 0;
  Eigen::VectorXd row_intercepts;
  Eigen::VectorXd col_intercepts;
  std::int64_t included_pairs = 0;
  std::int64_t excluded_pairs = 0;
  double t_hat = 0;
};

namespace detail {

struct FePair {
  std::uint32_t i, j;
  double x, y;
};

// Project row/column effects out of a value vector over the observed cells:
// alternate exact row-mean and column-mean sweeps until the effects stop
// moving (one sweep suffices for balanced designs). Returns the residuals;
// effects are accumulated into u, v.
inline std::vector<double> project_out_effects(const std::vector<FePair>& pairs,
                                               const std::vector<double>& values,
                                               Eigen::Index n_rows, Eigen::Index n_cols,
                                               Eigen::VectorXd& u, Eigen::VectorXd& v) {
  u = Eigen::VectorXd::Zero(n_rows);
  v = Eigen::VectorXd::Zero(n_cols);
  Eigen::VectorXd row_n = Eigen::VectorXd::Zero(n_rows);
  Eigen::VectorXd col_n = Eigen::VectorXd::Zero(n_cols);
  double scale = 1.0;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    row_n(pairs[t].i) += 1;
    col_n(pairs[t].j) += 1;
    scale = std::max(scale, std::abs(values[t]));
  }
  for (int it = 0; it < 10000; ++it) {
    double moved = 0;
    Eigen::VectorXd us = Eigen::VectorXd::Zero(n_rows);
    for (std::size_t t = 0; t < pairs.size(); ++t)
      us(pairs[t].i) += values[t] - v(pairs[t].j);
    for (Eigen::Index i = 0; i < n_rows; ++i)
      if (row_n(i) > 0) {
        const double next = us(i) / row_n(i);
        moved = std::max(moved, std::abs(next - u(i)));
        u(i) = next;
      }
    Eigen::VectorXd vs = Eigen::VectorXd::Zero(n_cols);
    for (std::size_t t = 0; t < pairs.size(); ++t)
      vs(pairs[t].j) += values[t] - u(pairs[t].i);
    for (Eigen::Index j = 0; j < n_cols; ++j)
      if (col_n(j) > 0) {
        const double next = vs(j) / col_n(j);
        moved = std::max(moved, std::abs(next - v(j)));
        v(j) = next;
      }
    if (moved <= 1e-14 * scale) break;
  }
  std::vector<double> resid(pairs.size());
  for (std::size_t t = 0; t < pairs.size(); ++t)
    resid[t] = values[t] - u(pairs[t].i) - v(pairs[t].j);
  return resid;
}

}  // namespace detail

inline VaradhanFit varadhan_diagnostic(const Eigen::MatrixXd& conditionals,
                                       const Eigen::MatrixXd& sq_dist, double t_hat) {
  const Eigen::Index n = conditionals.rows();
  if (conditionals.cols() != n || sq_dist.rows() != n || sq_dist.cols() != n)
    throw std::invalid_argument("varadhan_diagnostic: shape mismatch");
  std::vector<detail::FePair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n);
  std::int64_t excluded = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = conditionals(i, j);
      const double d2 = sq_dist(i, j);
      if (p > 0 && std::isfinite(d2)) {
        pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                         d2, -t_hat * std::log(p)});
      } else {
        ++excluded;
      }
    }
  // Identifiability: one slope plus a free intercept per participating row
  // and column (minus the gauge).
  if (static_cast<Eigen::Index>(pairs.size()) < 2 * n)
    throw std::runtime_error("varadhan_diagnostic: fewer included pairs (" +
                             std::to_string(pairs.size()) + ") than parameters");

  VaradhanFit fit;
  fit.t_hat = t_hat;
  fit.included_pairs = static_cast<std::int64_t>(pairs.size());
  fit.excluded_pairs = excluded;

  // Frisch-Waugh-Lovell: partial the intercepts out of both sides, then the
  // slope is a one-dimensional regression of residual on residual.
  std::vector<double> xs(pairs.size()), ys(pairs.size());
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    xs[t] = pairs[t].x;
    ys[t] = pairs[t].y;
  }
  Eigen::VectorXd ux, vx, uy, vy;
  const auto rx = detail::project_out_effects(pairs, xs, n, n, ux, vx);
  const auto ry = detail::project_out_effects(pairs, ys, n, n, uy, vy);
  double xx = 0, xy = 0, sse_base = 0;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    xx += rx[t] * rx[t];
    xy += rx[t] * ry[t];
    sse_base += ry[t] * ry[t];
  }
  fit.slope = xx > 0 ? xy / xx : 0.0;
  double sse_full = 0;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const double r = ry[t] - fit.slope * rx[t];
    sse_full += r * r;
  }
  // Intercepts of the full model, with the gauge sum_i u_i = 0.
  std::vector<double> adj(pairs.size());
  for (std::size_t t = 0; t < pairs.size(); ++t) adj[t] = ys[t] - fit.slope * xs[t];
  detail::project_out_effects(pairs, adj, n, n, fit.row_intercepts, fit.col_intercepts);
  const double shift = fit.row_intercepts.mean();
  fit.row_intercepts.array() -= shift;
  fit.col_intercepts.array() += shift;

  fit.r_squared = sse_base > 0 ? std::max(0.0, 1.0 - sse_full / sse_base) : 1.0;
  return fit;
}

// Empirical conditionals P(j | i) from a count matrix; rows with zero mass
// stay zero.
inline Eigen::MatrixXd conditionals_from_counts(const Eigen::MatrixXd& counts) {
  Eigen::MatrixXd p = counts;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double s = p.row(i).sum();
    if (s > 0) p.row(i) /= s;
  }
  return p;
}

}  // namespace membed
