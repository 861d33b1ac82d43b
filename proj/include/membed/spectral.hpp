#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "membed/cooccurrence.hpp"
#include "membed/embedding_model.hpp"
#include "membed/rng.hpp"

namespace membed {

// Pointwise mutual information of the full count matrix. Zero-count cells
// take a large negative floor (default: log of the smallest normal double)
// so a later shift-and-truncate maps them to exactly zero.
struct PmiMatrix {
  Eigen::MatrixXd m;
  double smoothing_eps = 0;
  double floor = 0;
  bool truncated = false;  // set once (m + tau)_+ has been applied
};

inline constexpr double kPmiFloor = -745.0;

inline PmiMatrix pmi_matrix(const CooccurrenceCounts& counts, double smoothing_eps = 0,
                            double floor = kPmiFloor) {
  const Eigen::Index n = counts.vocab_size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, smoothing_eps);
  for (const auto& e : counts.sorted_entries()) {
    c(e.i, e.j) += e.value;
    if (counts.symmetric() && e.i != e.j) c(e.j, e.i) += e.value;
  }
  const Eigen::VectorXd row = c.rowwise().sum();
  const Eigen::VectorXd col = c.colwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(row(i) > 0))
      throw std::runtime_error("pmi_matrix: empty row for id " + std::to_string(i));
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(col(j) > 0))
      throw std::runtime_error("pmi_matrix: empty column for id " + std::to_string(j));
  const double log_total = std::log(c.sum());
  PmiMatrix out;
  out.smoothing_eps = smoothing_eps;
  out.floor = floor;
  out.m.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out.m(i, j) = c(i, j) > 0
                        ? std::log(c(i, j)) - std::log(row(i)) - std::log(col(j)) + log_total
                        : floor;
  return out;
}

namespace detail {

// Deterministic sign convention: make each column's largest-magnitude entry
// positive.
inline void fix_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0) v.col(j) = -v.col(j);
  }
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns aligned with values
};

inline constexpr Eigen::Index kDenseEigenCutoff = 2000;

// Top-d eigenpairs of a symmetric matrix: dense solver up to the cutoff,
// randomized subspace iteration above it.
inline EigenPairs top_eigen_sym(const Eigen::MatrixXd& a, Eigen::Index d,
                                std::uint64_t seed, Eigen::Index oversample = 10,
                                int power_iters = 2) {
  const Eigen::Index n = a.rows();
  d = std::min(d, n);
  EigenPairs out;
  if (n <= kDenseEigenCutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    out.values.resize(d);
    out.vectors.resize(n, d);
    for (Eigen::Index t = 0; t < d; ++t) {
      out.values(t) = es.eigenvalues()(n - 1 - t);
      out.vectors.col(t) = es.eigenvectors().col(n - 1 - t);
    }
    fix_signs(out.vectors);
    return out;
  }
  const Eigen::Index l = std::min(n, d + oversample);
  Rng rng(seed);
  Eigen::MatrixXd y = a * gaussian_matrix(n, l, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, l);
  for (int it = 0; it < power_iters; ++it) {
    y = a * q;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr2(y);
    q = qr2.householderQ() * Eigen::MatrixXd::Identity(n, l);
  }
  Eigen::MatrixXd b = q.transpose() * a * q;
  b = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  out.values.resize(d);
  out.vectors.resize(n, d);
  for (Eigen::Index t = 0; t < d; ++t) {
    out.values(t) = es.eigenvalues()(l - 1 - t);
    out.vectors.col(t) = q * es.eigenvectors().col(l - 1 - t);
  }
  fix_signs(out.vectors);
  return out;
}

}  // namespace detail

// Shifted/truncated PMI factorization: rank-d symmetric factor of
// (M + tau)_+ / 2 with the square-root singular-value split. Directions
// whose eigenvalue falls at or below zero are zero-padded.
struct SvdEmbedResult {
  EmbeddingModel model;
  int rank_deficient_dims = 0;  // dimensions zero-padded past the numerical rank
};

inline SvdEmbedResult svd_embed(const PmiMatrix& pmi, int d, double tau = 0,
                                std::uint64_t seed = 0x5eed) {
  const Eigen::Index n = pmi.m.rows();
  if (d < 1 || d > n) throw std::invalid_argument("svd_embed: need 1 <= d <= n");
  Eigen::MatrixXd shifted = ((pmi.m.array() + tau).max(0.0)) / 2.0;
  shifted = 0.5 * (shifted + shifted.transpose());
  auto top = detail::top_eigen_sym(shifted, d, derive_seed(seed, "svd_embed"));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, d);
  int deficient = 0;
  const double tol = 1e-12 * std::max(1.0, std::abs(top.values(0)));
  for (int t = 0; t < d; ++t) {
    if (top.values(t) > tol)
      x.col(t) = top.vectors.col(t) * std::sqrt(top.values(t));
    else
      ++deficient;
  }
  SvdEmbedResult out;
  out.model = EmbeddingModel::vectors_only(std::move(x));
  out.rank_deficient_dims = deficient;
  return out;
}

// Classical MDS on log-counts (or any -squared-distance-plus-offsets input):
// symmetrize, double-center with V = I - 11^T/n, halve, take the top-d
// eigenpairs and drop negative directions. Additive row/column offsets are
// annihilated by the centering.
inline EmbeddingModel mds_embed(const Eigen::MatrixXd& l, int d,
                                std::uint64_t seed = 0x5eed) {
  const Eigen::Index n = l.rows();
  if (n != l.cols()) throw std::invalid_argument("mds_embed: input not square");
  if (!l.allFinite()) throw std::invalid_argument("mds_embed: non-finite input");
  if (d < 1) throw std::invalid_argument("mds_embed: dimension must be >= 1");
  Eigen::MatrixXd sym = 0.5 * (l + l.transpose());
  Eigen::VectorXd row_mean = sym.rowwise().mean();
  const double grand = row_mean.mean();
  // V sym V / 2 without forming V.
  Eigen::MatrixXd centered = sym;
  centered.colwise() -= row_mean;
  centered.rowwise() -= row_mean.transpose();
  centered.array() += grand;
  centered *= 0.5;
  const Eigen::Index k = std::min<Eigen::Index>(d, n);
  auto top = detail::top_eigen_sym(centered, k, derive_seed(seed, "mds_embed"));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, d);
  for (Eigen::Index t = 0; t < k; ++t)
    if (top.values(t) > 0) x.col(t) = top.vectors.col(t) * std::sqrt(top.values(t));
  return EmbeddingModel::vectors_only(std::move(x));
}

// Centered Gram eigenvalues, exposed for diagnostics and tests.
inline Eigen::VectorXd mds_eigenvalues(const Eigen::MatrixXd& l, int d,
                                       std::uint64_t seed = 0x5eed) {
  const Eigen::Index n = l.rows();
  Eigen::MatrixXd sym = 0.5 * (l + l.transpose());
  Eigen::VectorXd row_mean = sym.rowwise().mean();
  const double grand = row_mean.mean();
  Eigen::MatrixXd centered = sym;
  centered.colwise() -= row_mean;
  centered.rowwise() -= row_mean.transpose();
  centered.array() += grand;
  centered *= 0.5;
  return detail::top_eigen_sym(centered, std::min<Eigen::Index>(d, n),
                               derive_seed(seed, "mds_embed"))
      .values;
}

struct Svd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};

// Randomized-projection SVD (range finder with power iteration, then an
// exact decomposition of the small projected matrix). Deterministic under
// the seed.
inline Svd randomized_svd(const Eigen::MatrixXd& a, int d, int oversample = 10,
                          int power_iters = 2, std::uint64_t seed = 0x5eed) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  if (d < 1 || d > std::min(rows, cols))
    throw std::invalid_argument("randomized_svd: need 1 <= d <= min dimension");
  const Eigen::Index l = std::min<Eigen::Index>(d + oversample, std::min(rows, cols));
  Rng rng(derive_seed(seed, "rsvd"));
  Eigen::MatrixXd y = a * detail::gaussian_matrix(cols, l, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, l);
  for (int it = 0; it < power_iters; ++it) {
    Eigen::MatrixXd z = a.transpose() * q;
    Eigen::HouseholderQR<Eigen::MatrixXd> qrz(z);
    z = qrz.householderQ() * Eigen::MatrixXd::Identity(cols, l);
    y = a * z;
    Eigen::HouseholderQR<Eigen::MatrixXd> qry(y);
    q = qry.householderQ() * Eigen::MatrixXd::Identity(rows, l);
  }
  Eigen::MatrixXd b = q.transpose() * a;  // l x cols
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out;
  out.u = q * svd.matrixU().leftCols(d);
  out.s = svd.singularValues().head(d);
  out.v = svd.matrixV().leftCols(d);
  detail::fix_signs(out.u);
  // Keep U S V^T consistent with the sign convention applied to U.
  for (Eigen::Index j = 0; j < d; ++j) {
    const double dot = (q * svd.matrixU().col(j)).dot(out.u.col(j));
    if (dot < 0) out.v.col(j) = -out.v.col(j);
  }
  return out;
}

struct ProcrustesResult {
  Eigen::MatrixXd rotation;  // orthogonal (reflections allowed)
  double scale = 1.0;
  double residual = 0.0;  // |A Q s - B|_F after alignment
};

// Orthogonal alignment of A onto B, optionally with centering and a uniform
// scale. Used to assert recovery "up to rotation".
inline ProcrustesResult procrustes_align(const Eigen::MatrixXd& a,
                                         const Eigen::MatrixXd& b, bool center = false,
                                         bool allow_scale = false) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("procrustes_align: shape mismatch");
  Eigen::MatrixXd aa = a, bb = b;
  if (center) {
    aa.rowwise() -= a.colwise().mean();
    bb.rowwise() -= b.colwise().mean();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(aa.transpose() * bb,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  if (allow_scale) {
    const double denom = aa.squaredNorm();
    out.scale = denom > 0 ? svd.singularValues().sum() / denom : 1.0;
  }
  out.residual = (aa * out.rotation * out.scale - bb).norm();
  return out;
}

}  // namespace membed
