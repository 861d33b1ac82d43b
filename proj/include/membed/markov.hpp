#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "membed/point_cloud.hpp"
#include "membed/rng.hpp"

namespace membed {

// P_ij = exp(-|x_i - x_j|^2 / sigma^2) / Z_i, self-transitions included.
inline Eigen::MatrixXd exact_transition_matrix(const PointCloud& points, double sigma) {
  points.validate();
  const Eigen::Index n = points.size();
  if (n < 2) throw std::invalid_argument("exact_transition_matrix: need n >= 2");
  if (!(sigma > 0)) throw std::invalid_argument("exact_transition_matrix: sigma <= 0");
  Eigen::MatrixXd p(n, n);
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      p(i, j) = std::exp(-squared_distance(points, i, j) * inv_s2);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Local normalizers Z_i = sum_k exp(-|x_i - x_k|^2 / sigma^2); the stationary
// distribution of the exact chain is Z_i / sum_k Z_k by detailed balance.
inline Eigen::VectorXd local_normalizers(const PointCloud& points, double sigma) {
  const Eigen::Index n = points.size();
  Eigen::VectorXd z(n);
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < n; ++k)
      s += std::exp(-squared_distance(points, i, k) * inv_s2);
    z(i) = s;
  }
  return z;
}

namespace detail {
// Strong connectivity of the positive-entry pattern (forward plus reverse
// reachability from vertex 0).
inline bool strongly_connected(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        double w = transpose ? p(v, u) : p(u, v);
        if (w > 0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach(false) && reach(true);
}
}  // namespace detail

// Power iteration on the half-lazy chain (I + P)/2, which shares the fixed
// point of P but cannot oscillate on periodic chains. Residual is measured
// against P itself.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p,
                                               double tol = 1e-10,
                                               int max_iters = 200000) {
  const Eigen::Index n = p.rows();
  if (n != p.cols()) throw std::invalid_argument("stationary_distribution: not square");
  if ((p.array() < 0).any())
    throw std::invalid_argument("stationary_distribution: negative entry");
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(p.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("stationary_distribution: row " + std::to_string(i) +
                                  " does not sum to 1");
  if (!detail::strongly_connected(p))
    throw std::runtime_error("stationary_distribution: chain is reducible");
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = 0.5 * (pi + p.transpose() * pi);
    next /= next.sum();
    pi = next;
    if ((p.transpose() * pi - pi).lpNorm<Eigen::Infinity>() <= tol) return pi;
  }
  throw std::runtime_error("stationary_distribution: power iteration did not converge");
}

struct GaussianWalkConfig {
  double sigma = 1.0;
  std::uint64_t steps = 1;        // total tokens emitted
  std::size_t sentence_length = 1000;
  bool restart_per_sentence = false;
};

namespace detail {
// Per-row cumulative distributions for O(log n) categorical sampling.
inline std::vector<std::vector<double>> row_cdfs(const Eigen::MatrixXd& p) {
  std::vector<std::vector<double>> cdf(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    cdf[i].resize(p.cols());
    double acc = 0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      acc += p(i, j);
      cdf[i][j] = acc;
    }
    cdf[i].back() = 1.0;
  }
  return cdf;
}

inline std::uint32_t sample_cdf(const std::vector<double>& cdf, double u) {
  return static_cast<std::uint32_t>(
      std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}
}  // namespace detail

// Samples the exact chain and cuts it into fixed-length sentences. State
// carries across sentence boundaries unless restart_per_sentence is set, in
// which case each sentence restarts from a fresh uniform draw.
template <typename SentenceSink>
void gaussian_walk(const PointCloud& points, const GaussianWalkConfig& cfg,
                   std::uint64_t seed, SentenceSink&& sink) {
  if (!(cfg.sigma > 0) || cfg.steps < 1 || cfg.sentence_length < 1)
    throw std::invalid_argument("gaussian_walk: bad config");
  const Eigen::Index n = points.size();
  if (n == 1) {
    Rng rng(derive_seed(seed, "gaussian_walk"));
    std::uint64_t left = cfg.steps;
    while (left > 0) {
      std::size_t len = std::min<std::uint64_t>(left, cfg.sentence_length);
      sink(std::vector<std::uint32_t>(len, 0));
      left -= len;
    }
    return;
  }
  const Eigen::MatrixXd p = exact_transition_matrix(points, cfg.sigma);
  const auto cdf = detail::row_cdfs(p);
  Rng rng(derive_seed(seed, "gaussian_walk"));
  std::uint32_t state = static_cast<std::uint32_t>(rng.uniform_index(n));
  std::uint64_t emitted = 0;
  std::vector<std::uint32_t> sentence;
  sentence.reserve(cfg.sentence_length);
  while (emitted < cfg.steps) {
    if (cfg.restart_per_sentence)
      state = static_cast<std::uint32_t>(rng.uniform_index(n));
    sentence.clear();
    while (sentence.size() < cfg.sentence_length && emitted < cfg.steps) {
      sentence.push_back(state);
      ++emitted;
      state = detail::sample_cdf(cdf[state], rng.uniform());
    }
    sink(sentence);
  }
}

inline std::vector<std::vector<std::uint32_t>> gaussian_walk_collect(
    const PointCloud& points, const GaussianWalkConfig& cfg, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> out;
  gaussian_walk(points, cfg, seed,
                [&](const std::vector<std::uint32_t>& s) { out.push_back(s); });
  return out;
}

// Smooth topic density: mixture of isotropic Gaussians with closed-form
// log-density gradient. An empty mixture means the flat density (zero drift).
struct GaussianMixture {
  struct Component {
    double weight;
    Eigen::VectorXd mean;
    double stddev;
  };
  std::vector<Component> components;

  bool flat() const { return components.empty(); }

  double log_density(const Eigen::VectorXd& x) const {
    if (flat()) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> exponents(components.size());
    for (std::size_t k = 0; k < components.size(); ++k) {
      const auto& c = components[k];
      const double d = static_cast<double>(x.size());
      exponents[k] = std::log(c.weight) -
                     (x - c.mean).squaredNorm() / (2 * c.stddev * c.stddev) -
                     d * std::log(c.stddev * std::sqrt(2 * M_PI));
      best = std::max(best, exponents[k]);
    }
    double s = 0;
    for (double e : exponents) s += std::exp(e - best);
    return best + std::log(s);
  }

  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const {
    if (flat()) return Eigen::VectorXd::Zero(x.size());
    std::vector<double> exponents(components.size());
    double best = -std::numeric_limits<double>::infinity();
    const double d = static_cast<double>(x.size());
    for (std::size_t k = 0; k < components.size(); ++k) {
      const auto& c = components[k];
      exponents[k] = std::log(c.weight) -
                     (x - c.mean).squaredNorm() / (2 * c.stddev * c.stddev) -
                     d * std::log(c.stddev * std::sqrt(2 * M_PI));
      best = std::max(best, exponents[k]);
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    double total = 0;
    for (std::size_t k = 0; k < components.size(); ++k) {
      const auto& c = components[k];
      const double r = std::exp(exponents[k] - best);
      total += r;
      g += r * (c.mean - x) / (c.stddev * c.stddev);
    }
    return g / total;
  }
};

struct TopicModelConfig {
  double sigma = 0.1;               // latent step scale
  double sigma_bar = 0.1;           // emission scale
  std::vector<double> alpha;        // non-metric word frequencies (size n)
  GaussianMixture log_density;      // topic distribution w(x)
  Eigen::VectorXd start;            // initial latent position (empty = origin)

  // Second moment of the isotropic Gaussian jump kernel.
  double sigma0(int dim) const { return dim * sigma * sigma; }

  void validate(Eigen::Index n) const {
    if (!(sigma > 0) || !(sigma_bar > 0))
      throw std::invalid_argument("topic_walk: scales must be positive");
    if (static_cast<Eigen::Index>(alpha.size()) != n)
      throw std::invalid_argument("topic_walk: alpha size must match vocabulary");
    for (double a : alpha)
      if (!(a > 0)) throw std::invalid_argument("topic_walk: alpha entries must be > 0");
  }
};

struct TopicWalkResult {
  std::vector<std::uint32_t> tokens;
  Eigen::MatrixXd latent;  // steps x d trajectory of Y_t
};

// Latent drift-diffusion Y_{t+1} ~ N(Y_t + grad log w(Y_t) sigma^2, sigma^2 I)
// with emission P(X_t = i | Y_t) proportional to alpha_i exp(-|x_i-Y_t|^2 / sigma_bar^2).
inline TopicWalkResult topic_walk(const PointCloud& points, const TopicModelConfig& cfg,
                                  std::uint64_t steps, std::uint64_t seed) {
  points.validate();
  const Eigen::Index n = points.size();
  const Eigen::Index d = points.dim();
  cfg.validate(n);
  Rng rng(derive_seed(seed, "topic_walk"));
  Eigen::VectorXd y = cfg.start.size() ? cfg.start : Eigen::VectorXd::Zero(d);
  if (y.size() != d) throw std::invalid_argument("topic_walk: start dimension mismatch");

  TopicWalkResult out;
  out.tokens.reserve(steps);
  out.latent.resize(steps, d);
  std::vector<double> w(n);
  const double inv_sb2 = 1.0 / (cfg.sigma_bar * cfg.sigma_bar);
  for (std::uint64_t t = 0; t < steps; ++t) {
    out.latent.row(t) = y;
    // Emission weights, stabilized by the max exponent.
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = std::log(cfg.alpha[i]) -
                       (points.coords.row(i).transpose() - y).squaredNorm() * inv_sb2;
      w[i] = e;
      best = std::max(best, e);
    }
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = std::exp(w[i] - best);
      total += w[i];
    }
    if (!(total > 0) || !std::isfinite(total)) {
      std::string pos = "(";
      for (Eigen::Index k = 0; k < d; ++k)
        pos += (k ? ", " : "") + std::to_string(y(k));
      throw std::runtime_error("topic_walk: emission weights vanished at Y_t = " + pos + ")");
    }
    out.tokens.push_back(static_cast<std::uint32_t>(rng.categorical(w, total)));
    // Latent update.
    Eigen::VectorXd drift = cfg.log_density.grad_log_density(y) * (cfg.sigma * cfg.sigma);
    for (Eigen::Index k = 0; k < d; ++k) y(k) += drift(k) + cfg.sigma * rng.normal();
  }
  return out;
}

// Survey-weight conversion: squared distances d^2_ij = -log(w_ij / max w)
// after averaging directed weights. Absent pairs are +infinity, diagonal 0.
struct WeightedEdge {
  std::uint32_t i, j;
  double weight;
};

inline Eigen::MatrixXd survey_graph_to_squared_distances(
    const std::vector<WeightedEdge>& edges, std::uint32_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd cnt = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    if (!(e.weight > 0))
      throw std::invalid_argument("survey_graph: non-positive weight on edge " +
                                  std::to_string(e.i) + "," + std::to_string(e.j));
    if (e.i >= n || e.j >= n) throw std::out_of_range("survey_graph: vertex out of range");
    w(e.i, e.j) += e.weight;
    cnt(e.i, e.j) += 1;
  }
  // Symmetrize by averaging whatever directed observations exist.
  Eigen::MatrixXd sym = Eigen::MatrixXd::Constant(n, n, 0.0);
  double wmax = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) {
      double c = cnt(i, j) + cnt(j, i);
      if (c > 0) {
        sym(i, j) = sym(j, i) = (w(i, j) + w(j, i)) / c;
        wmax = std::max(wmax, sym(i, j));
      }
    }
  if (!(wmax > 0)) throw std::invalid_argument("survey_graph: no edges");
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Constant(n, n, inf);
  for (std::uint32_t i = 0; i < n; ++i) {
    d2(i, i) = 0;
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (sym(i, j) > 0) d2(i, j) = d2(j, i) = -std::log(sym(i, j) / wmax);
  }
  return d2;
}

}  // namespace membed
