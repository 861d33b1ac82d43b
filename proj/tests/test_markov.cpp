#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "membed/cooccurrence.hpp"
#include "membed/markov.hpp"
#include "membed/point_cloud.hpp"
#include "membed/rng.hpp"

using namespace membed;

namespace {

PointCloud random_points(int n, int d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  PointCloud pc;
  pc.coords.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pc.coords(i, j) = scale * rng.uniform();
  return pc;
}

}  // namespace

TEST_CASE("two-point transition matrix matches the closed form") {
  // |x1 - x2|^2 = sigma^2 ln 2 makes the off-diagonal weight exactly 1/2.
  const double sigma = 0.7;
  PointCloud pc;
  pc.coords.resize(2, 1);
  pc.coords << 0.0, sigma * std::sqrt(std::log(2.0));
  auto p = exact_transition_matrix(pc, sigma);
  CHECK(p(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(p(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("identical points give uniform rows") {
  PointCloud pc;
  pc.coords = Eigen::MatrixXd::Zero(4, 2);
  auto p = exact_transition_matrix(pc, 1.0);
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-14);
}

TEST_CASE("rows always sum to one") {
  auto pc = random_points(17, 3, 99);
  auto p = exact_transition_matrix(pc, 0.8);
  for (int i = 0; i < 17; ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transition matrix rejects bad input") {
  PointCloud pc;
  pc.coords.resize(2, 1);
  pc.coords << 0.0, 1.0;
  CHECK_THROWS(exact_transition_matrix(pc, 0.0));
  pc.coords(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(exact_transition_matrix(pc, 1.0));
}

TEST_CASE("stationary distribution of a symmetric two-point chain is uniform") {
  PointCloud pc;
  pc.coords.resize(2, 1);
  pc.coords << 0.0, 1.0;
  auto pi = stationary_distribution(exact_transition_matrix(pc, 1.0));
  CHECK(pi(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(pi(1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("stationary distribution equals normalized local normalizers") {
  auto pc = random_points(12, 2, 4);
  const double sigma = 0.6;
  auto p = exact_transition_matrix(pc, sigma);
  auto pi = stationary_distribution(p);
  Eigen::VectorXd z = local_normalizers(pc, sigma);
  z /= z.sum();
  CHECK((pi - z).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("detailed balance holds against the local normalizers") {
  auto pc = random_points(10, 2, 21);
  const double sigma = 0.9;
  auto p = exact_transition_matrix(pc, sigma);
  Eigen::VectorXd z = local_normalizers(pc, sigma);
  Eigen::VectorXd pi = z / z.sum();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      CHECK(std::abs(pi(i) * p(i, j) - pi(j) * p(j, i)) < 1e-10);
}

TEST_CASE("noiseless log-conditional identity of the exact chain") {
  // -log P_ij - log Z_i = |x_i - x_j|^2 / sigma^2, exactly.
  auto pc = random_points(8, 3, 55);
  const double sigma = 0.75;
  auto p = exact_transition_matrix(pc, sigma);
  auto z = local_normalizers(pc, sigma);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const double lhs = -std::log(p(i, j)) - std::log(z(i));
      const double rhs = squared_distance(pc, i, j) / (sigma * sigma);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("stationary distribution flags reducible chains") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_WITH_AS(stationary_distribution(eye),
                       "stationary_distribution: chain is reducible", std::runtime_error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Constant(3, 3, 0.5);
  CHECK_THROWS_AS(stationary_distribution(bad), std::invalid_argument);
}

TEST_CASE("single-point walk emits a constant stream") {
  PointCloud pc;
  pc.coords = Eigen::MatrixXd::Zero(1, 2);
  GaussianWalkConfig cfg;
  cfg.steps = 25;
  cfg.sentence_length = 10;
  auto sents = gaussian_walk_collect(pc, cfg, 3);
  std::size_t total = 0;
  for (const auto& s : sents) {
    total += s.size();
    for (auto t : s) CHECK(t == 0);
  }
  CHECK(total == 25);
}

TEST_CASE("gaussian walk is deterministic under the seed") {
  auto pc = random_points(6, 2, 8);
  GaussianWalkConfig cfg;
  cfg.sigma = 0.8;
  cfg.steps = 5000;
  cfg.sentence_length = 100;
  auto a = gaussian_walk_collect(pc, cfg, 42);
  auto b = gaussian_walk_collect(pc, cfg, 42);
  CHECK(a == b);
  auto c = gaussian_walk_collect(pc, cfg, 43);
  CHECK(a != c);
}

TEST_CASE("restart-per-sentence policy changes the stream but stays seeded") {
  auto pc = random_points(5, 2, 3);
  GaussianWalkConfig cfg;
  cfg.sigma = 0.7;
  cfg.steps = 400;
  cfg.sentence_length = 20;
  auto carry = gaussian_walk_collect(pc, cfg, 1);
  cfg.restart_per_sentence = true;
  auto restart = gaussian_walk_collect(pc, cfg, 1);
  CHECK(carry != restart);
  CHECK(restart == gaussian_walk_collect(pc, cfg, 1));
  CHECK(carry.size() == restart.size());
}

TEST_CASE("empirical one-step conditionals converge to the exact matrix") {
  const int n = 10;
  auto pc = random_points(n, 2, 17);
  const double sigma = 1.0;
  auto p = exact_transition_matrix(pc, sigma);
  GaussianWalkConfig cfg;
  cfg.sigma = sigma;
  cfg.steps = 1000000;
  cfg.sentence_length = cfg.steps;
  auto sents = gaussian_walk_collect(pc, cfg, 7);
  auto counts = count_cooccurrences_ids(
      [&](auto&& sink) {
        for (const auto& s : sents) sink(s);
      },
      n, 1, CountMode::raw_transition);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : counts.sorted_entries()) c(e.i, e.j) = e.value;
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    const double row = c.row(i).sum();
    REQUIRE(row > 0);
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(c(i, j) / row - p(i, j)));
  }
  CHECK(worst < 0.01);
}

TEST_CASE("topic walk point-mass limit emits one token") {
  PointCloud pc;
  pc.coords.resize(6, 2);
  for (int i = 0; i < 6; ++i) pc.coords.row(i) << i, 0.0;
  TopicModelConfig cfg;
  cfg.sigma = 1e-9;      // latent stays (essentially) put
  cfg.sigma_bar = 1e-4;  // emission sharply peaked
  cfg.alpha.assign(6, 1.0);
  cfg.start = pc.coords.row(5);
  auto res = topic_walk(pc, cfg, 200, 11);
  for (auto t : res.tokens) CHECK(t == 5);
}

TEST_CASE("emission ratios follow alpha at equal distances") {
  PointCloud pc;
  pc.coords.resize(2, 1);
  pc.coords << -1.0, 1.0;  // equidistant from the origin
  TopicModelConfig cfg;
  cfg.sigma = 1e-9;
  cfg.sigma_bar = 1.0;
  cfg.alpha = {1.0, 3.0};
  cfg.start = Eigen::VectorXd::Zero(1);
  auto res = topic_walk(pc, cfg, 200000, 5);
  double ones = 0;
  for (auto t : res.tokens) ones += t == 1;
  CHECK(ones / res.tokens.size() == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("sigma0 records the jump-kernel second moment") {
  TopicModelConfig cfg;
  cfg.sigma = 0.5;
  CHECK(cfg.sigma0(3) == doctest::Approx(3 * 0.25));
}

// The latent update Y' = Y + grad log w sigma^2 + sigma N(0, I) is a
// discretized Langevin chain whose invariant density is proportional to
// w(x)^2, not w(x): the drift is twice the (sigma^2/2) grad log pi rate that
// would leave w itself invariant. The oracle therefore rejection-samples
// w^2 and the histograms are compared on coarse bins.
TEST_CASE("latent histogram matches the squared-density oracle") {
  PointCloud pc;
  pc.coords.resize(1, 1);
  pc.coords << 0.0;
  TopicModelConfig cfg;
  cfg.sigma = 0.05;
  cfg.sigma_bar = 10.0;
  cfg.alpha = {1.0};
  GaussianMixture::Component comp{1.0, Eigen::VectorXd::Zero(1), 1.0};
  cfg.log_density.components.push_back(comp);
  cfg.start = Eigen::VectorXd::Zero(1);
  const std::uint64_t steps = 400000;
  auto res = topic_walk(pc, cfg, steps, 99);

  // Rejection sampler for the squared density (here N(0,1)^2, i.e. sd
  // 1/sqrt(2)) from a uniform proposal on [-4, 4].
  Rng rng(123);
  std::vector<double> oracle;
  oracle.reserve(steps);
  while (oracle.size() < steps) {
    const double x = rng.uniform(-4.0, 4.0);
    const double w2 = std::exp(-x * x);  // w(x)^2 up to scale
    if (rng.uniform() < w2) oracle.push_back(x);
  }

  const int bins = 8;
  const double lo = -2.0, hi = 2.0;
  std::vector<double> h_chain(bins, 0), h_oracle(bins, 0);
  double n_chain = 0, n_oracle = 0;
  auto bin_of = [&](double x) { return static_cast<int>((x - lo) / (hi - lo) * bins); };
  for (Eigen::Index t = 0; t < res.latent.rows(); ++t) {
    const double x = res.latent(t, 0);
    if (x >= lo && x < hi) {
      ++h_chain[bin_of(x)];
      ++n_chain;
    }
  }
  for (double x : oracle)
    if (x >= lo && x < hi) {
      ++h_oracle[bin_of(x)];
      ++n_oracle;
    }
  for (int b = 0; b < bins; ++b)
    CHECK(h_chain[b] / n_chain == doctest::Approx(h_oracle[b] / n_oracle).epsilon(0.15));
}

TEST_CASE("topic walk is deterministic and validates config") {
  PointCloud pc;
  pc.coords.resize(3, 2);
  pc.coords << 0, 0, 1, 0, 0, 1;
  TopicModelConfig cfg;
  cfg.sigma = 0.3;
  cfg.sigma_bar = 0.8;
  cfg.alpha = {1.0, 2.0, 0.5};
  auto a = topic_walk(pc, cfg, 500, 13);
  auto b = topic_walk(pc, cfg, 500, 13);
  CHECK(a.tokens == b.tokens);
  cfg.alpha = {1.0, -1.0, 0.5};
  CHECK_THROWS_AS(topic_walk(pc, cfg, 10, 13), std::invalid_argument);
}

TEST_CASE("survey weights map to squared distances") {
  // max-weight edge -> 0; weight max/e -> 1.
  std::vector<WeightedEdge> edges = {{0, 1, std::exp(1.0)}, {1, 2, 1.0}};
  auto d2 = survey_graph_to_squared_distances(edges, 3);
  CHECK(d2(0, 1) == doctest::Approx(0.0));
  CHECK(d2(1, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d2(0, 0) == 0.0);
  CHECK(std::isinf(d2(0, 2)));
}

TEST_CASE("survey weights symmetrize by averaging directed observations") {
  std::vector<WeightedEdge> edges = {{0, 1, 2.0}, {1, 0, 4.0}, {1, 2, 3.0}};
  auto d2 = survey_graph_to_squared_distances(edges, 3);
  CHECK(d2(0, 1) == d2(1, 0));
  CHECK(d2(0, 1) == doctest::Approx(0.0));  // avg 3 = max
  CHECK(d2(1, 2) == doctest::Approx(-std::log(3.0 / 3.0)));
  CHECK(d2(2, 1) == d2(1, 2));
}

TEST_CASE("survey weights reject non-positive values") {
  std::vector<WeightedEdge> edges = {{0, 1, 0.0}};
  CHECK_THROWS_AS(survey_graph_to_squared_distances(edges, 2), std::invalid_argument);
}
