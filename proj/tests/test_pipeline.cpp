#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <string>

#include "membed/pipeline.hpp"

using namespace membed;

namespace {
const std::string kData = MEMBED_TEST_DATA;
}

TEST_CASE("idx ingestion flattens images into unit-scaled vectors") {
  auto pc = load_idx_point_cloud(kData + "/digits_images.idx3",
                                 kData + "/digits_labels.idx1");
  CHECK(pc.size() == 1797);
  CHECK(pc.dim() == 64);
  CHECK(pc.coords.minCoeff() >= 0.0);
  CHECK(pc.coords.maxCoeff() <= 1.0);
  CHECK(pc.coords.maxCoeff() > 0.5);
  REQUIRE(pc.has_labels());
  CHECK(*std::min_element(pc.labels.begin(), pc.labels.end()) == 0);
  CHECK(*std::max_element(pc.labels.begin(), pc.labels.end()) == 9);
  auto sub = load_idx_point_cloud(kData + "/digits_images.idx3",
                                  kData + "/digits_labels.idx1", 100);
  CHECK(sub.size() == 100);
  for (int i = 0; i < 100; ++i) CHECK(sub.labels[i] == pc.labels[i]);
}

TEST_CASE("idx loaders reject wrong magic numbers") {
  std::ifstream wrong(kData + "/digits_labels.idx1", std::ios::binary);
  CHECK_THROWS_AS(load_idx_images(wrong), std::runtime_error);
}

TEST_CASE("demo-varadhan equals the manually chained modules") {
  VaradhanDemoConfig cfg;
  cfg.n = 200;
  cfg.k = 6;
  cfg.walks_per_node = 10;
  cfg.walk_length = 30;
  cfg.window = 5;
  cfg.seed = 99;
  const auto report = demo_varadhan(cfg);

  // Manual chain with the same derived seeds.
  const auto points = sample_unit_square(cfg.n, derive_seed(cfg.seed, "points"));
  const auto graph = build_knn_graph(points, cfg.k);
  auto counts = count_cooccurrences_ids(
      [&](auto&& sink) {
        simple_random_walks(graph, cfg.walks_per_node, cfg.walk_length,
                            derive_seed(cfg.seed, "walks"), sink);
      },
      static_cast<std::uint32_t>(cfg.n), cfg.window, CountMode::harmonic);
  const auto fit = varadhan_diagnostic(conditionals_from_counts(dense_counts(counts)),
                                       squared_distance_matrix(points), cfg.t_hat);
  CHECK(report.at("slope").get<double>() == fit.slope);
  CHECK(report.at("r_squared").get<double>() == fit.r_squared);
  CHECK(report.at("included_pairs").get<std::int64_t>() == fit.included_pairs);
}

TEST_CASE("demo-varadhan is reproducible and seed-sensitive") {
  VaradhanDemoConfig cfg;
  cfg.n = 150;
  cfg.k = 6;
  cfg.walks_per_node = 8;
  cfg.walk_length = 25;
  cfg.seed = 3;
  auto a = demo_varadhan(cfg);
  auto b = demo_varadhan(cfg);
  CHECK(a.dump() == b.dump());
  cfg.seed = 4;
  auto c = demo_varadhan(cfg);
  CHECK(a.dump() != c.dump());
}

// The manifold experiment on a real handwritten-digit set (1797 points of
// 8x8 images): walk counts embedded at d = 2 must separate the digit
// clusters. Thresholds were frozen from a calibration run (regression 0.87,
// spectral 0.68) with margin for walk sampling variance.
TEST_CASE("digit manifold pipeline reaches strong 5-nn purity") {
  MnistDemoConfig cfg;
  cfg.images_path = kData + "/digits_images.idx3";
  cfg.labels_path = kData + "/digits_labels.idx1";
  cfg.subset = 1797;
  cfg.k = 20;
  cfg.walks_per_node = 10;
  cfg.walk_length = 200;
  cfg.window = 5;
  cfg.dim = 2;
  cfg.epochs = 100;
  cfg.seed = 1;
  const auto res = demo_mnist(cfg);
  CHECK(res.report.at("regression_purity").get<double>() >= 0.75);
  CHECK(res.report.at("svd_purity").get<double>() >= 0.55);
  CHECK(res.regression_vectors.rows() == 1797);
  CHECK(res.svd_vectors.cols() == 2);
}
