#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "membed/cooccurrence.hpp"
#include "membed/rng.hpp"
#include "membed/spectral.hpp"

using namespace membed;

namespace {

Eigen::MatrixXd random_gaussian(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_gaussian(n, n, seed));
  return qr.householderQ();
}

CooccurrenceCounts counts_from_dense(const Eigen::MatrixXd& c) {
  CooccurrenceCounts out(static_cast<std::uint32_t>(c.rows()), 1,
                         CountMode::raw_transition);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      if (c(i, j) > 0)
        out.add(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), c(i, j));
  return out;
}

}  // namespace

TEST_CASE("pmi of all-equal counts is the zero matrix") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(5, 5, 3.0);
  auto pmi = pmi_matrix(counts_from_dense(c));
  CHECK(pmi.m.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pmi closed form on a 2x2 example") {
  Eigen::MatrixXd c(2, 2);
  c << 2, 1, 1, 2;
  auto pmi = pmi_matrix(counts_from_dense(c));
  CHECK(pmi.m(0, 0) == doctest::Approx(std::log(4.0 / 3)).epsilon(1e-12));
  CHECK(pmi.m(0, 1) == doctest::Approx(std::log(2.0 / 3)).epsilon(1e-12));
}

TEST_CASE("pmi of symmetric counts is symmetric") {
  Rng rng(4);
  Eigen::MatrixXd c(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) c(i, j) = c(j, i) = std::floor(rng.uniform(1.0, 20.0));
  auto pmi = pmi_matrix(counts_from_dense(c));
  CHECK((pmi.m - pmi.m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pmi is invariant to uniform count scaling") {
  Rng rng(6);
  Eigen::MatrixXd c(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) c(i, j) = std::floor(rng.uniform(1.0, 30.0));
  auto a = pmi_matrix(counts_from_dense(c));
  auto b = pmi_matrix(counts_from_dense(7.5 * c));
  CHECK((a.m - b.m).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pmi names the offending empty row") {
  CooccurrenceCounts c(3, 1, CountMode::raw_transition);
  c.add(0, 1, 2.0);
  c.add(1, 0, 1.0);  // id 2 never appears
  CHECK_THROWS_WITH_AS(pmi_matrix(c), doctest::Contains("2"), std::runtime_error);
}

TEST_CASE("pmi floors zero cells so shift-and-truncate maps them to zero") {
  CooccurrenceCounts c(3, 1, CountMode::raw_transition);
  c.add(0, 1, 2.0);
  c.add(1, 2, 1.0);
  c.add(2, 0, 1.0);
  auto pmi = pmi_matrix(c);
  CHECK(pmi.m(0, 2) == kPmiFloor);
  auto emb = svd_embed(pmi, 2, /*tau=*/5.0);
  CHECK(emb.model.word_vecs.allFinite());
}

TEST_CASE("svd_embed recovers a planted Gram factor") {
  // M_ij = 2 <x_i, x_j> with nonnegative inner products, tau = 0.
  const int n = 30, d = 3;
  Rng rng(11);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(0.1, 1.0);
  PmiMatrix pmi;
  pmi.m = 2.0 * x * x.transpose();
  auto emb = svd_embed(pmi, d, 0.0);
  auto pro = procrustes_align(emb.model.word_vecs, x);
  CHECK(pro.residual <= 1e-8);
  CHECK(emb.rank_deficient_dims == 0);
}

TEST_CASE("svd_embed reconstructs a rank-1 positive matrix exactly") {
  Eigen::VectorXd v(4);
  v << 1, 2, 3, 4;
  PmiMatrix pmi;
  pmi.m = v * v.transpose();
  auto emb = svd_embed(pmi, 1, 0.0);
  const Eigen::MatrixXd back = 2.0 * emb.model.word_vecs * emb.model.word_vecs.transpose();
  CHECK((back - pmi.m).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("svd_embed truncation maps an all-negative shifted matrix to zero") {
  PmiMatrix pmi;
  pmi.m = Eigen::MatrixXd::Constant(5, 5, -3.0);
  auto emb = svd_embed(pmi, 2, 1.0);
  CHECK(emb.model.word_vecs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(emb.rank_deficient_dims == 2);
}

// Shifted-SVD consistency on a construction where the row-sum identity
// sum_j C_ij / sqrt(sum_ij C_ij) = |x_i|^2 holds exactly: x_i = s e_i with s
// solved so that e^{2s^2} + n - 1 = n s^4. The derived shift is
// tau = log(R/n) = log(s^4).
TEST_CASE("svd_embed with the derived shift recovers planted inner products") {
  const int n = 100;
  auto f = [&](double t) { return std::exp(2 * t) + n - 1 - n * t * t; };
  double lo = 1.0, hi = 3.0;
  REQUIRE(f(lo) > 0);
  REQUIRE(f(hi) < 0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  const double s2 = 0.5 * (lo + hi);  // s^2
  Eigen::MatrixXd x = std::sqrt(s2) * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd c = (2.0 * x * x.transpose()).array().exp();

  // Verify the row-sum identity numerically before testing the lemma.
  const double row_sum = c.row(0).sum();
  const double identity = row_sum / std::sqrt(c.sum());
  REQUIRE(identity == doctest::Approx(s2).epsilon(1e-10));

  auto pmi = pmi_matrix(counts_from_dense(c));
  const double tau = std::log(row_sum / n);
  auto emb = svd_embed(pmi, n, tau);
  const Eigen::MatrixXd recovered =
      emb.model.word_vecs * emb.model.word_vecs.transpose();
  const Eigen::MatrixXd target = x * x.transpose();
  CHECK((recovered - target).norm() <= 0.01 * target.norm());
}

TEST_CASE("mds_embed recovers planted coordinates despite additive offsets") {
  const int n = 100, d = 3;
  Rng rng(21);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  x.rowwise() -= x.colwise().mean();  // planted centered configuration
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      l(i, j) = -(x.row(i) - x.row(j)).squaredNorm() + a(i) + a(j);
  auto emb = mds_embed(l, d);
  auto pro = procrustes_align(emb.word_vecs, x);
  CHECK(pro.residual <= 1e-8);
}

TEST_CASE("mds eigenvalues of the unit equilateral triangle") {
  Eigen::MatrixXd d2(3, 3);
  d2 << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  auto vals = mds_eigenvalues(-d2, 3);
  CHECK(vals(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(vals(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(vals(2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mds_embed of a single point is the zero vector") {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(1, 1);
  auto emb = mds_embed(l, 2);
  CHECK(emb.word_vecs.rows() == 1);
  CHECK(emb.word_vecs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("double centering annihilates additive row and column offsets") {
  const int n = 40;
  Rng rng(31);
  Eigen::MatrixXd x = random_gaussian(n, 4, 32);
  Eigen::MatrixXd l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) l(i, j) = -(x.row(i) - x.row(j)).squaredNorm();
  Eigen::VectorXd u(n), v(n);
  for (int i = 0; i < n; ++i) {
    u(i) = rng.uniform(-5.0, 5.0);
    v(i) = rng.uniform(-5.0, 5.0);
  }
  Eigen::MatrixXd shifted =
      l + u * Eigen::RowVectorXd::Ones(n) + Eigen::VectorXd::Ones(n) * v.transpose();
  auto base = mds_embed(l, 4);
  auto moved = mds_embed(shifted, 4);
  CHECK((base.word_vecs - moved.word_vecs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mds_embed drops negative eigendirections") {
  // A non-Euclidean dissimilarity: the centered matrix has a negative
  // eigenvalue whose coordinate must come out as zero.
  Eigen::MatrixXd d2(4, 4);
  d2 << 0, 1, 4, 1, 1, 0, 1, 4, 4, 1, 0, 1, 1, 4, 1, 0;
  auto vals = mds_eigenvalues(-d2, 4);
  REQUIRE(vals(3) < -1e-9);
  auto emb = mds_embed(-d2, 4);
  CHECK(emb.word_vecs.col(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("randomized svd reproduces an exact low-rank matrix") {
  const int n = 60, d = 5;
  Eigen::MatrixXd a = random_gaussian(n, d, 41) * random_gaussian(d, n, 42);
  auto svd = randomized_svd(a, d, 10, 2, 7);
  const Eigen::MatrixXd back = svd.u * svd.s.asDiagonal() * svd.v.transpose();
  CHECK((back - a).norm() <= 1e-9 * a.norm());
}

TEST_CASE("randomized svd of the identity has unit singular values") {
  const int n = 24;
  auto svd = randomized_svd(Eigen::MatrixXd::Identity(n, n), n, 10, 2, 3);
  for (int i = 0; i < n; ++i) CHECK(svd.s(i) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("randomized svd matches the dense oracle through a spectral gap") {
  // Random orthogonal factors; singular values decay gently for the top 10,
  // then drop by 30x (the contract asks for a gap of at least 10x at rank d).
  const int n = 200, d = 10;
  Eigen::VectorXd s(n);
  for (int i = 0; i < d; ++i) s(i) = 2.0 - 0.1 * i;
  for (int i = d; i < n; ++i) s(i) = (2.0 - 0.1 * (d - 1)) / 30.0 * std::exp(-0.05 * (i - d));
  Eigen::MatrixXd a = random_orthogonal(n, 51) * s.asDiagonal() *
                      random_orthogonal(n, 52).transpose();
  auto approx = randomized_svd(a, d, 10, 2, 9);

  Eigen::JacobiSVD<Eigen::MatrixXd> oracle(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  for (int i = 0; i < d; ++i)
    CHECK(approx.s(i) == doctest::Approx(oracle.singularValues()(i)).epsilon(1e-6));

  // Spectral-norm error of the rank-d approximation stays within 1e-6 |A| of
  // the optimum sigma_{d+1}.
  const Eigen::MatrixXd back = approx.u * approx.s.asDiagonal() * approx.v.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> err(a - back);
  const double spectral_err = err.singularValues()(0);
  const double best = oracle.singularValues()(d);
  CHECK(spectral_err <= best + 1e-6 * oracle.singularValues()(0));
}

TEST_CASE("randomized svd is deterministic under the seed") {
  Eigen::MatrixXd a = random_gaussian(50, 50, 61);
  auto s1 = randomized_svd(a, 5, 10, 2, 77);
  auto s2 = randomized_svd(a, 5, 10, 2, 77);
  CHECK(s1.u == s2.u);
  CHECK(s1.s == s2.s);
  CHECK(s1.v == s2.v);
}

TEST_CASE("procrustes undoes a planted rotation") {
  const int n = 25, d = 4;
  Eigen::MatrixXd a = random_gaussian(n, d, 71);
  Eigen::MatrixXd r = random_orthogonal(d, 72);
  auto pro = procrustes_align(a * r.transpose() * r, a * r);  // B = A R
  CHECK(pro.residual <= 1e-10);
}

TEST_CASE("procrustes of identical inputs is the identity") {
  Eigen::MatrixXd a = random_gaussian(10, 3, 81);
  auto pro = procrustes_align(a, a);
  CHECK((pro.rotation - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(pro.residual <= 1e-12);
}

TEST_CASE("procrustes handles reflections: B = -A") {
  Eigen::MatrixXd a = random_gaussian(12, 4, 91);  // even dimension
  auto pro = procrustes_align(a, -a);
  CHECK(pro.residual <= 1e-10);
  // -I is orthogonal with determinant +1 in even dimension; either way the
  // returned map must be orthogonal.
  const Eigen::MatrixXd qtq = pro.rotation.transpose() * pro.rotation;
  CHECK((qtq - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("procrustes optional centering and scale") {
  Eigen::MatrixXd a = random_gaussian(15, 3, 95);
  Eigen::MatrixXd r = random_orthogonal(3, 96);
  Eigen::MatrixXd b = (2.5 * a * r).rowwise() + Eigen::RowVectorXd::Constant(3, 1.0);
  auto pro = procrustes_align(a, b, /*center=*/true, /*allow_scale=*/true);
  CHECK(pro.scale == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(pro.residual <= 1e-9);
}
