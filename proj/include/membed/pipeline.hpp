#pragma once

#include <json.hpp>

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "membed/cooccurrence.hpp"
#include "membed/diagnostics.hpp"
#include "membed/evaluate.hpp"
#include "membed/markov.hpp"
#include "membed/optimizer.hpp"
#include "membed/point_cloud.hpp"
#include "membed/rng.hpp"
#include "membed/spatial_graph.hpp"
#include "membed/spectral.hpp"

namespace membed {

// End-to-end demo chains. Shared by the CLI and the tests so that chained
// output provably equals manually chained module calls.

struct VaradhanDemoConfig {
  int n = 500;
  int k = 8;
  int walks_per_node = 20;
  int walk_length = 40;
  int window = 8;
  double t_hat = 1.0;
  std::uint64_t seed = 1;
};

inline PointCloud sample_unit_square(int n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud pc;
  pc.coords.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    pc.coords(i, 0) = rng.uniform();
    pc.coords(i, 1) = rng.uniform();
  }
  return pc;
}

inline Eigen::MatrixXd squared_distance_matrix(const PointCloud& pc) {
  const Eigen::Index n = pc.size();
  Eigen::MatrixXd d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i, i) = 0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      d2(i, j) = d2(j, i) = squared_distance(pc, i, j);
  }
  return d2;
}

inline Eigen::MatrixXd dense_counts(const CooccurrenceCounts& counts) {
  const Eigen::Index n = counts.vocab_size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : counts.sorted_entries()) {
    c(e.i, e.j) += e.value;
    if (counts.symmetric() && e.i != e.j) c(e.j, e.i) += e.value;
  }
  return c;
}

// Sample points on the unit square, walk a kNN graph, count windowed
// co-occurrences, and regress log conditionals against the true squared
// Euclidean distances.
inline nlohmann::json demo_varadhan(const VaradhanDemoConfig& cfg) {
  const auto points = sample_unit_square(cfg.n, derive_seed(cfg.seed, "points"));
  const auto graph = build_knn_graph(points, cfg.k);
  auto counts = count_cooccurrences_ids(
      [&](auto&& sink) {
        simple_random_walks(graph, cfg.walks_per_node, cfg.walk_length,
                            derive_seed(cfg.seed, "walks"), sink);
      },
      static_cast<std::uint32_t>(cfg.n), cfg.window, CountMode::harmonic);
  const auto conditionals = conditionals_from_counts(dense_counts(counts));
  const auto fit = varadhan_diagnostic(conditionals, squared_distance_matrix(points),
                                       cfg.t_hat);
  nlohmann::json report;
  report["config"] = {{"n", cfg.n},
                      {"k", cfg.k},
                      {"walks_per_node", cfg.walks_per_node},
                      {"walk_length", cfg.walk_length},
                      {"window", cfg.window},
                      {"t_hat", cfg.t_hat},
                      {"seed", cfg.seed}};
  report["slope"] = fit.slope;
  report["r_squared"] = fit.r_squared;
  report["included_pairs"] = fit.included_pairs;
  report["excluded_pairs"] = fit.excluded_pairs;
  report["nonzero_counts"] = counts.nonzeros();
  return report;
}

struct MnistDemoConfig {
  std::string images_path;
  std::string labels_path;
  int subset = 4000;
  int k = 20;
  int walks_per_node = 10;
  int walk_length = 200;
  int window = 5;
  int dim = 2;
  double theta = 50.0;
  int epochs = 100;
  int purity_k = 5;
  std::uint64_t seed = 1;
};

struct MnistDemoResult {
  nlohmann::json report;
  Eigen::MatrixXd regression_vectors;
  Eigen::MatrixXd svd_vectors;
  std::vector<int> labels;
};

// The manifold experiment: kNN graph over image vectors, simple random
// walks, then both the metric-regression and spectral embeddings scored by
// k-nearest-neighbor label purity.
inline MnistDemoResult demo_mnist(const MnistDemoConfig& cfg) {
  auto points = load_idx_point_cloud(cfg.images_path, cfg.labels_path, cfg.subset);
  const auto n = static_cast<std::uint32_t>(points.size());
  const auto graph = build_knn_graph(points, cfg.k);
  auto counts = count_cooccurrences_ids(
      [&](auto&& sink) {
        simple_random_walks(graph, cfg.walks_per_node, cfg.walk_length,
                            derive_seed(cfg.seed, "walks"), sink);
      },
      n, cfg.window, CountMode::harmonic);

  TrainConfig train;
  train.epochs = cfg.epochs;
  train.theta = cfg.theta;
  train.seed = derive_seed(cfg.seed, "fit");
  FitStats stats;
  const auto model = fit(counts, cfg.dim, train, &stats);
  const Eigen::MatrixXd reg_vecs = model.output_vectors();
  const double reg_purity = knn_purity(reg_vecs, points.labels, cfg.purity_k);

  const auto pmi = pmi_matrix(counts);
  const auto svd = svd_embed(pmi, cfg.dim, 0.0, derive_seed(cfg.seed, "svd"));
  const double svd_purity = knn_purity(svd.model.word_vecs, points.labels, cfg.purity_k);

  MnistDemoResult out;
  out.regression_vectors = reg_vecs;
  out.svd_vectors = svd.model.word_vecs;
  out.labels = points.labels;
  out.report["config"] = {{"subset", cfg.subset},
                          {"k", cfg.k},
                          {"walks_per_node", cfg.walks_per_node},
                          {"walk_length", cfg.walk_length},
                          {"window", cfg.window},
                          {"dim", cfg.dim},
                          {"theta", cfg.theta},
                          {"epochs", cfg.epochs},
                          {"purity_k", cfg.purity_k},
                          {"seed", cfg.seed}};
  out.report["regression_purity"] = reg_purity;
  out.report["svd_purity"] = svd_purity;
  out.report["nonzero_counts"] = counts.nonzeros();
  out.report["eta0"] = stats.eta0;
  return out;
}

inline nlohmann::json eval_report_to_json(const EvalReport& rep) {
  nlohmann::json j;
  j["accuracy"] = rep.accuracy;
  j["covered"] = rep.covered;
  j["total"] = rep.total;
  j["undefined_accuracy"] = rep.undefined;
  switch (rep.metric) {
    case Metric::cosine: j["metric"] = "cosine"; break;
    case Metric::l2: j["metric"] = "l2"; break;
    case Metric::diff_cosine: j["metric"] = "diff-cosine"; break;
  }
  if (rep.top_k > 0) {
    j["top_k"] = rep.top_k;
    j["top_k_accuracy"] = rep.top_k_accuracy.value_or(0.0);
  }
  nlohmann::json sections = nlohmann::json::object();
  for (const auto& [name, s] : rep.sections) {
    sections[name] = {{"covered", s.covered},
                      {"total", s.total},
                      {"accuracy", s.covered ? double(s.correct) / s.covered : 0.0}};
  }
  j["sections"] = sections;
  return j;
}

inline nlohmann::json varadhan_fit_to_json(const VaradhanFit& fit,
                                           bool include_intercepts = true) {
  nlohmann::json j;
  j["slope"] = fit.slope;
  j["r_squared"] = fit.r_squared;
  j["t_hat"] = fit.t_hat;
  j["included_pairs"] = fit.included_pairs;
  j["excluded_pairs"] = fit.excluded_pairs;
  if (include_intercepts) {
    j["row_intercepts"] = std::vector<double>(
        fit.row_intercepts.data(), fit.row_intercepts.data() + fit.row_intercepts.size());
    j["col_intercepts"] = std::vector<double>(
        fit.col_intercepts.data(), fit.col_intercepts.data() + fit.col_intercepts.size());
  }
  return j;
}

}  // namespace membed
