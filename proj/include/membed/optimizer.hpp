#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "membed/cooccurrence.hpp"
#include "membed/embedding_model.hpp"
#include "membed/rng.hpp"

namespace membed {

// A training pair: (i, j, count). Zero-count pairs appear only through
// explicit sampling; stored co-occurrence entries are always positive.
struct CountPair {
  std::uint32_t i, j;
  double count;
};

// Symmetric cap on the log-rate before exponentiation. The upper clamp keeps
// a wild mid-training configuration from overflowing exp(); the lower clamp
// keeps far-flung positive pairs from underflowing lambda to exactly zero,
// where the C log(1 - theta/(lambda+theta)) term would evaluate to -inf.
// Neither moves converged solutions.
inline constexpr double kLogRateClamp = 30.0;

inline double clamped_rate(const EmbeddingModel& m, Eigen::Index i, Eigen::Index j,
                           std::uint64_t* clamp_count = nullptr) {
  double e = m.log_rate(i, j);
  if (e > kLogRateClamp || e < -kLogRateClamp) {
    e = std::clamp(e, -kLogRateClamp, kLogRateClamp);
    if (clamp_count) ++*clamp_count;
  }
  return std::exp(e);
}

// Negative binomial log-likelihood of one pair with rate lambda:
//   theta log theta - theta log(lambda+theta) + C log(1 - theta/(lambda+theta))
//   + log Gamma(C+theta) - log Gamma(theta) - log Gamma(C+1)
// The C log(...) term vanishes at C = 0.
inline double nb_pair_loglik(double count, double lambda, double theta) {
  double v = theta * std::log(theta) - theta * std::log(lambda + theta);
  if (count > 0)
    v += count * std::log1p(-theta / (lambda + theta)) + std::lgamma(count + theta) -
         std::lgamma(theta) - std::lgamma(count + 1);
  return v;
}

// NB error term driving the gradient updates.
inline double nb_delta(double count, double lambda, double theta) {
  return (count - lambda) * theta / (lambda + theta);
}

// Log-likelihood over the stored (positive) pairs plus an explicit list of
// zero pairs. Deterministic: callers control the zero sample.
inline double nb_loglik(const CooccurrenceCounts& counts, const EmbeddingModel& model,
                        const std::vector<std::pair<std::uint32_t, std::uint32_t>>&
                            zero_pairs = {},
                        std::uint64_t* clamp_count = nullptr) {
  if (!model.all_finite()) throw std::invalid_argument("nb_loglik: non-finite model");
  double total = 0;
  for (const auto& e : counts.sorted_entries()) {
    total += nb_pair_loglik(e.value, clamped_rate(model, e.i, e.j, clamp_count),
                            model.theta);
    if (counts.symmetric() && e.i != e.j)
      total += nb_pair_loglik(e.value, clamped_rate(model, e.j, e.i, clamp_count),
                              model.theta);
  }
  for (auto [i, j] : zero_pairs)
    total += nb_pair_loglik(0.0, clamped_rate(model, i, j, clamp_count), model.theta);
  return total;
}

struct Gradients {
  Eigen::MatrixXd d_word, d_ctx;
  Eigen::VectorXd d_row_bias, d_col_bias;

  static Gradients zero(Eigen::Index n, Eigen::Index d) {
    return {Eigen::MatrixXd::Zero(n, d), Eigen::MatrixXd::Zero(n, d),
            Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
};

// Ascent gradient of the NB log-likelihood over a batch of pairs:
//   delta_ij = (C - lambda) theta / (lambda + theta)
//   d x_i = delta_ij (c_j - x_i),  d c_j = delta_ij (x_i - c_j)
//   d a_i = delta_ij,              d b_j = delta_ij
inline Gradients nb_gradients(const std::vector<CountPair>& batch,
                              const EmbeddingModel& model) {
  Gradients g = Gradients::zero(model.vocab_size(), model.dim);
  for (const auto& p : batch) {
    const double lambda = clamped_rate(model, p.i, p.j);
    const double delta = nb_delta(p.count, lambda, model.theta);
    const Eigen::RowVectorXd diff = model.ctx_vecs.row(p.j) - model.word_vecs.row(p.i);
    g.d_word.row(p.i) += delta * diff;
    g.d_ctx.row(p.j) -= delta * diff;
    g.d_row_bias(p.i) += delta;
    g.d_col_bias(p.j) += delta;
  }
  return g;
}

inline double nb_batch_loglik(const std::vector<CountPair>& batch,
                              const EmbeddingModel& model) {
  double total = 0;
  for (const auto& p : batch)
    total += nb_pair_loglik(p.count, clamped_rate(model, p.i, p.j), model.theta);
  return total;
}

// Reparametrized GloVe objective over a batch of positive pairs:
//   sum f(C) (-log C - |x_i - c_j|^2 + a_i + b_j)^2,  f(C) = min(C, x_max)^exponent
// Returns the loss; gradients (of the loss, for descent) are accumulated when
// requested.
inline double glove_loss_grad(const std::vector<CountPair>& batch,
                              const EmbeddingModel& model, double x_max,
                              double exponent, Gradients* grad = nullptr) {
  double loss = 0;
  for (const auto& p : batch) {
    if (!(p.count > 0))
      throw std::invalid_argument("glove_loss_grad: zero-count pair in batch");
    const double f = std::pow(std::min(p.count, x_max), exponent);
    const Eigen::RowVectorXd diff = model.word_vecs.row(p.i) - model.ctx_vecs.row(p.j);
    const double resid = -std::log(p.count) - diff.squaredNorm() + model.row_bias(p.i) +
                         model.col_bias(p.j);
    loss += f * resid * resid;
    if (grad) {
      const double s = 2 * f * resid;
      grad->d_word.row(p.i) += -2 * s * diff;
      grad->d_ctx.row(p.j) += 2 * s * diff;
      grad->d_row_bias(p.i) += s;
      grad->d_col_bias(p.j) += s;
    }
  }
  return loss;
}

// Distance-parametrized softmax objective (negated log-likelihood, so lower
// is better and the entropy bound -sum C_ij log(C_ij / sum_k C_ik) is a true
// lower bound):
//   loss = -sum_ij C_ij log [ exp(-|x_i - c_j|^2 + b_j) / sum_k exp(-|x_i - c_k|^2 + b_k) ]
// Exact normalization over all n contexts; every source row costs a dense
// n x d pass, so this is capped at desk scale.
inline constexpr Eigen::Index kSoftmaxCap = 5000;

inline double softmax_loss_grad(const CooccurrenceCounts& counts,
                                const EmbeddingModel& model, Gradients* grad = nullptr) {
  const Eigen::Index n = model.vocab_size();
  if (n > kSoftmaxCap)
    throw std::invalid_argument(
        "softmax_loss_grad: vocabulary above the dense softmax cap (" +
        std::to_string(kSoftmaxCap) + "); use the negative-binomial regression loss");
  // Row-major accumulation of counts.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : counts.sorted_entries()) {
    c(e.i, e.j) += e.value;
    if (counts.symmetric() && e.i != e.j) c(e.j, e.i) += e.value;
  }
  double loss = 0;
  Eigen::VectorXd score(n), prob(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_total = c.row(i).sum();
    if (row_total == 0 && !grad) continue;
    for (Eigen::Index k = 0; k < n; ++k)
      score(k) = -(model.word_vecs.row(i) - model.ctx_vecs.row(k)).squaredNorm() +
                 model.col_bias(k);
    const double mx = score.maxCoeff();
    double z = 0;
    for (Eigen::Index k = 0; k < n; ++k) z += std::exp(score(k) - mx);
    const double log_z = mx + std::log(z);
    for (Eigen::Index k = 0; k < n; ++k) prob(k) = std::exp(score(k) - log_z);
    for (Eigen::Index j = 0; j < n; ++j)
      if (c(i, j) > 0) loss -= c(i, j) * (score(j) - log_z);
    if (grad) {
      // d loss / d score_k = -C_ik + row_total * prob_k
      for (Eigen::Index k = 0; k < n; ++k) {
        const double ds = -c(i, k) + row_total * prob(k);
        const Eigen::RowVectorXd diff = model.word_vecs.row(i) - model.ctx_vecs.row(k);
        grad->d_word.row(i) += ds * (-2 * diff);
        grad->d_ctx.row(k) += ds * (2 * diff);
        grad->d_col_bias(k) += ds;
      }
    }
  }
  return loss;
}

// Per-row conditional entropy bound: -sum_ij C_ij log(C_ij / sum_k C_ik).
// The softmax loss can never go below it.
inline double softmax_entropy_bound(const CooccurrenceCounts& counts) {
  const Eigen::Index n = counts.vocab_size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : counts.sorted_entries()) {
    c(e.i, e.j) += e.value;
    if (counts.symmetric() && e.i != e.j) c(e.j, e.i) += e.value;
  }
  double bound = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double total = c.row(i).sum();
    if (total <= 0) continue;
    for (Eigen::Index j = 0; j < n; ++j)
      if (c(i, j) > 0) bound -= c(i, j) * std::log(c(i, j) / total);
  }
  return bound;
}

enum class LossKind { neg_binomial, glove, softmax };

struct TrainConfig {
  int epochs = 10;
  double eta_search_start = 10.0;  // line-search bracket upper bound
  double skip_threshold = 10.0;    // pairs below are skipped w.p. 1 - C/threshold
  std::uint64_t seed = 1;
  LossKind loss = LossKind::neg_binomial;
  double theta = 50.0;
  double x_max = 10.0;
  double exponent = 0.75;
  double zero_ratio = 1.0;  // sampled zero pairs per stored pair (NB loss only)
  // Training-time cap on |delta| at delta_cap * theta. The raw NB error grows
  // like C on badly underfit large-count pairs, letting one outlier pair set
  // the stability ceiling for every step size; the cap bounds any single
  // pair's influence (much as the GloVe weight cap does) and is inactive
  // near stationary points where delta -> 0.
  double delta_cap = 4.0;
  int workers = 1;          // > 1 enables lock-free shared updates (nondeterministic)
  std::optional<EmbeddingModel> init;  // warm start; default is uniform GloVe init
};

struct FitStats {
  double eta0 = 0;
  std::uint64_t clamp_count = 0;
  int backoff_halvings = 0;        // step-size halvings after divergent attempts
  double initial_loss = 0;         // reference objective before any update
  std::vector<double> epoch_loss;  // reference objective after each epoch (lower = better)
};

namespace detail {

inline EmbeddingModel init_model(Eigen::Index n, int d, double theta, Rng& rng) {
  EmbeddingModel m;
  m.dim = d;
  m.theta = theta;
  const double half = 0.5 / d;
  auto fill = [&](Eigen::MatrixXd& mat) {
    mat.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) mat(i, j) = rng.uniform(-half, half);
  };
  fill(m.word_vecs);
  fill(m.ctx_vecs);
  m.row_bias.resize(n);
  m.col_bias.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.row_bias(i) = rng.uniform(-half, half);
  for (Eigen::Index i = 0; i < n; ++i) m.col_bias(i) = rng.uniform(-half, half);
  return m;
}

// One SGD update on one pair; returns the pair objective before the update
// (negated log-likelihood for NB so that lower is always better).
inline double sgd_update(EmbeddingModel& m, const CountPair& p, double eta,
                         const TrainConfig& cfg, std::uint64_t* clamp_count) {
  if (cfg.loss == LossKind::neg_binomial) {
    const double lambda = clamped_rate(m, p.i, p.j, clamp_count);
    const double cap = cfg.delta_cap * m.theta;
    const double delta = std::clamp(nb_delta(p.count, lambda, m.theta), -cap, cap);
    const Eigen::RowVectorXd diff = m.ctx_vecs.row(p.j) - m.word_vecs.row(p.i);
    m.word_vecs.row(p.i) += eta * delta * diff;
    m.ctx_vecs.row(p.j) -= eta * delta * diff;
    m.row_bias(p.i) += eta * delta;
    m.col_bias(p.j) += eta * delta;
    return -nb_pair_loglik(p.count, lambda, m.theta);
  }
  // GloVe
  const double f = std::pow(std::min(p.count, cfg.x_max), cfg.exponent);
  const Eigen::RowVectorXd diff = m.word_vecs.row(p.i) - m.ctx_vecs.row(p.j);
  const double resid =
      -std::log(p.count) - diff.squaredNorm() + m.row_bias(p.i) + m.col_bias(p.j);
  const double s = 2 * f * resid;
  m.word_vecs.row(p.i) += eta * 2 * s * diff;
  m.ctx_vecs.row(p.j) -= eta * 2 * s * diff;
  m.row_bias(p.i) -= eta * s;
  m.col_bias(p.j) -= eta * s;
  return f * resid * resid;
}

// Softmax row update: SGD over source rows with the exact normalizer.
inline double softmax_row_update(EmbeddingModel& m, Eigen::Index i,
                                 const std::vector<CountPair>& row_pairs,
                                 double row_total, double eta) {
  const Eigen::Index n = m.vocab_size();
  Eigen::VectorXd score(n);
  for (Eigen::Index k = 0; k < n; ++k)
    score(k) = -(m.word_vecs.row(i) - m.ctx_vecs.row(k)).squaredNorm() + m.col_bias(k);
  const double mx = score.maxCoeff();
  double z = 0;
  for (Eigen::Index k = 0; k < n; ++k) z += std::exp(score(k) - mx);
  const double log_z = mx + std::log(z);
  double loss = 0;
  for (const auto& p : row_pairs) loss -= p.count * (score(p.j) - log_z);
  Eigen::RowVectorXd d_word = Eigen::RowVectorXd::Zero(m.dim);
  for (Eigen::Index k = 0; k < n; ++k) {
    double ds = row_total * std::exp(score(k) - log_z);
    const Eigen::RowVectorXd diff = m.word_vecs.row(i) - m.ctx_vecs.row(k);
    d_word += ds * (-2 * diff);
    m.ctx_vecs.row(k) -= eta * ds * 2 * diff;
    m.col_bias(k) -= eta * ds;
  }
  for (const auto& p : row_pairs) {
    const double ds = -p.count;
    const Eigen::RowVectorXd diff = m.word_vecs.row(i) - m.ctx_vecs.row(p.j);
    d_word += ds * (-2 * diff);
    m.ctx_vecs.row(p.j) -= eta * ds * 2 * diff;
    m.col_bias(p.j) -= eta * ds;
  }
  m.word_vecs.row(i) -= eta * d_word;
  return loss;
}

}  // namespace detail

// Stochastic gradient fit. Pairs are shuffled per epoch; pairs with
// C < skip_threshold are kept with probability C / skip_threshold; the NB
// loss additionally samples zero pairs at zero_ratio per stored pair. The
// initial step is located by golden-section search over the first
// mini-epoch's objective and decays linearly to zero across epochs.
// Deterministic for workers == 1 under a fixed seed.
inline EmbeddingModel fit(const CooccurrenceCounts& counts, int d, const TrainConfig& cfg,
                          FitStats* stats = nullptr);

namespace detail {

struct EpochPlan {
  std::vector<CountPair> pairs;  // post skip-rule, shuffled, zeros included
};

inline EpochPlan plan_epoch(const CooccurrenceCounts& counts,
                            const std::vector<CountPair>& stored, const TrainConfig& cfg,
                            int epoch) {
  Rng rng(derive_seed(cfg.seed, "epoch", epoch));
  EpochPlan plan;
  plan.pairs.reserve(stored.size() * 2);
  for (const auto& p : stored) {
    if (p.count < cfg.skip_threshold &&
        rng.uniform() >= p.count / cfg.skip_threshold)
      continue;
    plan.pairs.push_back(p);
  }
  const std::uint32_t nv = counts.vocab_size();
  const std::size_t full = counts.symmetric()
                               ? std::size_t(nv) * (nv + 1) / 2
                               : std::size_t(nv) * nv;
  if (cfg.loss == LossKind::neg_binomial && cfg.zero_ratio > 0 &&
      counts.nonzeros() < full) {
    const auto target =
        static_cast<std::size_t>(cfg.zero_ratio * static_cast<double>(plan.pairs.size()));
    const std::uint32_t n = counts.vocab_size();
    std::size_t produced = 0, attempts = 0;
    while (produced < target && attempts < 20 * target + 100) {
      ++attempts;
      auto i = static_cast<std::uint32_t>(rng.uniform_index(n));
      auto j = static_cast<std::uint32_t>(rng.uniform_index(n));
      if (counts.get(i, j) > 0) continue;
      plan.pairs.push_back({i, j, 0.0});
      ++produced;
    }
  }
  rng.shuffle(plan.pairs);
  return plan;
}

// Objective value used by the line search and epoch reporting (negated NB
// log-likelihood; GloVe loss; either evaluated over the epoch's pair set).
inline double plan_objective(const std::vector<CountPair>& pairs, const EmbeddingModel& m,
                             const TrainConfig& cfg) {
  double total = 0;
  std::uint64_t clamps = 0;
  if (cfg.loss == LossKind::neg_binomial) {
    for (const auto& p : pairs)
      total -= nb_pair_loglik(p.count, clamped_rate(m, p.i, p.j, &clamps), m.theta);
  } else {
    for (const auto& p : pairs) {
      const double f = std::pow(std::min(p.count, cfg.x_max), cfg.exponent);
      const double resid = -std::log(p.count) -
                           (m.word_vecs.row(p.i) - m.ctx_vecs.row(p.j)).squaredNorm() +
                           m.row_bias(p.i) + m.col_bias(p.j);
      total += f * resid * resid;
    }
  }
  return total;
}

}  // namespace detail

inline EmbeddingModel fit(const CooccurrenceCounts& counts, int d, const TrainConfig& cfg,
                          FitStats* stats) {
  if (counts.nonzeros() == 0) throw std::invalid_argument("fit: empty counts");
  if (d < 1) throw std::invalid_argument("fit: dimension must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("fit: epochs must be >= 1");
  const Eigen::Index n = counts.vocab_size();

  // Stored pair list; symmetric modes train both orientations, matching the
  // full symmetric matrix.
  std::vector<CountPair> stored;
  stored.reserve(counts.nonzeros() * 2);
  for (const auto& e : counts.sorted_entries()) {
    stored.push_back({e.i, e.j, e.value});
    if (counts.symmetric() && e.i != e.j) stored.push_back({e.j, e.i, e.value});
  }

  Rng init_rng(derive_seed(cfg.seed, "init"));
  EmbeddingModel model = cfg.init ? *cfg.init : detail::init_model(n, d, cfg.theta, init_rng);
  if (cfg.init) {
    if (model.vocab_size() != n || model.dim != d)
      throw std::invalid_argument("fit: init model shape mismatch");
    model.theta = cfg.theta;
  }

  std::uint64_t clamp_count = 0;
  FitStats local_stats;
  FitStats& st = stats ? *stats : local_stats;

  const bool softmax = cfg.loss == LossKind::softmax;
  // Softmax trains over source rows; precompute per-row positives.
  std::vector<std::vector<CountPair>> rows;
  std::vector<double> row_totals;
  if (softmax) {
    if (n > kSoftmaxCap)
      throw std::invalid_argument("fit: vocabulary above dense softmax cap; use NB loss");
    rows.assign(n, {});
    row_totals.assign(n, 0.0);
    for (const auto& p : stored) {
      rows[p.i].push_back(p);
      row_totals[p.i] += p.count;
    }
  }

  // Line search for the initial step: run a mini-epoch from the initial model
  // with candidate eta, score the epoch objective, minimize by golden section
  // over (0, eta_search_start].
  const auto first_plan = detail::plan_epoch(counts, stored, cfg, 0);
  // The line search must experience a representative epoch: a short probe
  // under-represents how per-parameter updates compound, and the chosen step
  // then diverges at full length. Probe the whole first epoch when feasible,
  // always including the largest counts (they set the stability ceiling), and
  // cycle tiny plans so every candidate sees enough consecutive updates.
  std::vector<CountPair> probe_pairs(
      first_plan.pairs.begin(),
      first_plan.pairs.begin() + std::min<std::size_t>(first_plan.pairs.size(), 200000));
  if (!softmax && stored.size() > probe_pairs.size()) {
    std::vector<CountPair> by_count = stored;
    const std::size_t hubs = std::min<std::size_t>(by_count.size(), 64);
    std::partial_sort(by_count.begin(), by_count.begin() + hubs, by_count.end(),
                      [](const CountPair& a, const CountPair& b) {
                        return a.count > b.count;
                      });
    probe_pairs.insert(probe_pairs.end(), by_count.begin(), by_count.begin() + hubs);
  }
  const std::size_t mini = softmax ? std::min<std::size_t>(n, 64) : probe_pairs.size();
  const std::size_t probe_updates = 256;
  auto probe = [&](double eta) {
    EmbeddingModel trial = model;
    std::uint64_t scratch = 0;
    if (softmax) {
      const std::size_t reps = std::max<std::size_t>(1, (probe_updates + mini - 1) / mini / 4);
      for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t i = 0; i < mini; ++i)
          detail::softmax_row_update(trial, static_cast<Eigen::Index>(i), rows[i],
                                     row_totals[i], eta);
      if (!trial.all_finite()) return std::numeric_limits<double>::infinity();
      return softmax_loss_grad(counts, trial);
    }
    const std::size_t reps = std::max<std::size_t>(1, (probe_updates + mini - 1) / mini);
    for (std::size_t r = 0; r < reps; ++r)
      for (std::size_t t = 0; t < mini; ++t)
        detail::sgd_update(trial, probe_pairs[t], eta, cfg, &scratch);
    if (!trial.all_finite()) return std::numeric_limits<double>::infinity();
    return detail::plan_objective(probe_pairs, trial, cfg);
  };
  double lo = 0.0, hi = cfg.eta_search_start;
  const double golden = (std::sqrt(5.0) - 1) / 2;
  double best_eta = 0;
  double best_f = std::numeric_limits<double>::infinity();
  auto tracked_probe = [&](double eta) {
    const double f = probe(eta);
    if (f < best_f) {
      best_f = f;
      best_eta = eta;
    }
    return f;
  };
  double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
  double f1 = tracked_probe(x1), f2 = tracked_probe(x2);
  for (int it = 0; it < 24; ++it) {
    // Ties (both probes divergent) shrink toward small steps.
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = tracked_probe(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = tracked_probe(x2);
    }
  }
  // Only probed steps are trusted; an unprobed bracket midpoint can sit just
  // past the stability cliff.
  double eta0 = best_eta;
  if (!(eta0 > 0) || !std::isfinite(best_f)) eta0 = 1e-3;
  st.eta0 = eta0;

  // Fixed reference objective for monitoring: the first epoch's pair set
  // (full dense loss for softmax).
  auto reference_loss = [&](const EmbeddingModel& m) {
    return softmax ? softmax_loss_grad(counts, m)
                   : detail::plan_objective(first_plan.pairs, m, cfg);
  };
  st.initial_loss = reference_loss(model);

  // The probe window cannot always see every unstable pair; if a full epoch
  // still diverges, halve the step and restart deterministically from the
  // same initial model before giving up.
  const EmbeddingModel init_copy = model;
  const int max_attempts = 10;
  int diverged_epoch = -1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    model = init_copy;
    st.epoch_loss.clear();
    st.backoff_halvings = attempt;
    st.eta0 = eta0;
    diverged_epoch = -1;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double eta = eta0 * (1.0 - static_cast<double>(epoch) / cfg.epochs);
      if (softmax) {
        std::vector<Eigen::Index> order(n);
        for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
        Rng rng(derive_seed(cfg.seed, "softmax_epoch", epoch));
        rng.shuffle(order);
        for (Eigen::Index i : order)
          detail::softmax_row_update(model, i, rows[i], row_totals[i], eta);
      } else {
        const auto plan =
            epoch == 0 ? first_plan : detail::plan_epoch(counts, stored, cfg, epoch);
        if (cfg.workers > 1) {
          // Lock-free shared updates; races lose the occasional update,
          // which the SGD tolerates. Explicitly nondeterministic.
          const std::size_t chunk = (plan.pairs.size() + cfg.workers - 1) / cfg.workers;
          std::vector<std::thread> pool;
          for (int w = 0; w < cfg.workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(plan.pairs.size(), b + chunk);
            if (b >= e) break;
            pool.emplace_back([&, b, e] {
              std::uint64_t local_clamps = 0;
              for (std::size_t t = b; t < e; ++t)
                detail::sgd_update(model, plan.pairs[t], eta, cfg, &local_clamps);
            });
          }
          for (auto& th : pool) th.join();
        } else {
          for (std::size_t t = 0; t < plan.pairs.size(); ++t)
            detail::sgd_update(model, plan.pairs[t], eta, cfg, &clamp_count);
        }
      }
      const double epoch_obj = model.all_finite()
                                   ? reference_loss(model)
                                   : std::numeric_limits<double>::quiet_NaN();
      // Exploding runs do not always reach inf (the softmax loss stays
      // finite at absurd parameters); landing far above the starting
      // objective is treated the same way.
      const double blowup = st.initial_loss + 10.0 * (std::abs(st.initial_loss) + 1.0);
      if (!std::isfinite(epoch_obj) || epoch_obj > blowup) {
        diverged_epoch = epoch;
        break;
      }
      st.epoch_loss.push_back(epoch_obj);
    }
    if (diverged_epoch < 0) break;
    eta0 *= 0.5;
  }
  if (diverged_epoch >= 0)
    throw std::runtime_error("fit: diverged at epoch " + std::to_string(diverged_epoch) +
                             " (objective non-finite after " +
                             std::to_string(max_attempts) +
                             " step-size halvings); reduce the step size");
  st.clamp_count = clamp_count;
  model.theta = cfg.theta;
  return model;
}

}  // namespace membed
