// membed: metric-recovery embedding toolkit.
//
// Pipelines: vocab -> count -> embed -> eval / diagnose, plus walk
// generators and two end-to-end demos. Every run writes its resolved
// configuration alongside its outputs and is a pure function of
// (inputs, config, seed) in single-worker mode.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "membed/cooccurrence.hpp"
#include "membed/diagnostics.hpp"
#include "membed/embedding_model.hpp"
#include "membed/evaluate.hpp"
#include "membed/io.hpp"
#include "membed/markov.hpp"
#include "membed/optimizer.hpp"
#include "membed/pipeline.hpp"
#include "membed/point_cloud.hpp"
#include "membed/rng.hpp"
#include "membed/spatial_graph.hpp"
#include "membed/spectral.hpp"
#include "membed/vocabulary.hpp"

namespace {

using membed::AtomicFile;
using membed::write_file_atomic;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

void write_config_echo(const std::string& path,
                       const std::map<std::string, std::string>& kv) {
  write_file_atomic(path, [&](std::ostream& out) {
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  });
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct TokFlags {
  bool lowercase = false;
  bool strip_punct = false;
  bool strip_numbers = false;

  void attach(CLI::App* cmd) {
    cmd->add_flag("--lowercase", lowercase, "Lowercase tokens");
    cmd->add_flag("--strip-punct", strip_punct, "Strip punctuation characters");
    cmd->add_flag("--strip-numbers", strip_numbers, "Drop numeric tokens");
  }

  membed::TokenizerOptions options() const { return {lowercase, strip_punct, strip_numbers}; }

  void echo(std::map<std::string, std::string>& kv) const {
    kv["lowercase"] = lowercase ? "true" : "false";
    kv["strip_punct"] = strip_punct ? "true" : "false";
    kv["strip_numbers"] = strip_numbers ? "true" : "false";
  }
};

membed::GaussianMixture load_mixture(const std::string& path) {
  auto in = open_input(path);
  nlohmann::json j;
  in >> j;
  membed::GaussianMixture mix;
  for (const auto& c : j.at("components")) {
    membed::GaussianMixture::Component comp;
    comp.weight = c.at("weight").get<double>();
    const auto mean = c.at("mean").get<std::vector<double>>();
    comp.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    comp.stddev = c.at("stddev").get<double>();
    if (!(comp.weight > 0) || !(comp.stddev > 0))
      throw std::runtime_error("density file: weights and stddevs must be positive");
    mix.components.push_back(std::move(comp));
  }
  return mix;
}

void save_sentences_stream(const std::string& path,
                           const std::function<void(const std::function<void(
                               const std::vector<std::uint32_t>&)>&)>& source) {
  AtomicFile f(path);
  source([&](const std::vector<std::uint32_t>& sent) {
    auto& out = f.stream();
    for (std::size_t t = 0; t < sent.size(); ++t) out << (t ? " " : "") << sent[t];
    out << '\n';
  });
  f.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"membed: metric-recovery embeddings from Markov co-occurrences"};
  app.require_subcommand(1);
  app.fallthrough();  // global --seed/--workers may follow the subcommand
  app.set_config("--config", "", "Config file (key = value; flags override)");

  std::uint64_t seed = 1;
  int workers = 1;
  app.add_option("--seed", seed, "Root seed for all derived random streams");
  app.add_option("--workers", workers, "SGD workers (>1 is lossy and nondeterministic)")
      ->check(CLI::PositiveNumber);

  // ---- vocab ----
  auto* vocab_cmd = app.add_subcommand("vocab", "Build a vocabulary from a corpus");
  struct {
    std::string corpus, out;
    std::size_t max = 100000;
    std::uint64_t min_count = 0;
    TokFlags tok;
  } vo;
  vocab_cmd->add_option("--corpus", vo.corpus, "Corpus: one sentence per line")
      ->required()
      ->check(CLI::ExistingFile);
  vocab_cmd->add_option("--out", vo.out, "Output vocabulary file")->required();
  vocab_cmd->add_option("--max", vo.max, "Maximum vocabulary size");
  vocab_cmd->add_option("--min-count", vo.min_count, "Minimum frequency");
  vo.tok.attach(vocab_cmd);
  vocab_cmd->callback([&] {
    auto in = open_input(vo.corpus);
    const auto vocab =
        membed::build_vocabulary_from_stream(in, vo.max, vo.min_count, vo.tok.options());
    write_file_atomic(vo.out, [&](std::ostream& o) { membed::save_vocabulary(vocab, o); });
    std::map<std::string, std::string> kv = {{"command", "vocab"},
                                             {"corpus", vo.corpus},
                                             {"max", std::to_string(vo.max)},
                                             {"min_count", std::to_string(vo.min_count)}};
    vo.tok.echo(kv);
    write_config_echo(vo.out + ".config", kv);
  });

  // ---- count ----
  auto* count_cmd = app.add_subcommand("count", "Accumulate windowed co-occurrence counts");
  struct {
    std::string corpus, vocab, out, mode = "harmonic";
    int window = 5;
    TokFlags tok;
  } co;
  count_cmd->add_option("--corpus", co.corpus, "Corpus file")->required()->check(
      CLI::ExistingFile);
  count_cmd->add_option("--vocab", co.vocab, "Vocabulary file")->required()->check(
      CLI::ExistingFile);
  count_cmd->add_option("--out", co.out, "Output counts file")->required();
  count_cmd->add_option("--window", co.window, "Window size W")->check(CLI::PositiveNumber);
  count_cmd->add_option("--mode", co.mode, "harmonic | uniform | raw")
      ->check(CLI::IsMember({"harmonic", "uniform", "raw"}));
  co.tok.attach(count_cmd);
  count_cmd->callback([&] {
    auto vin = open_input(co.vocab);
    const auto vocab = membed::load_vocabulary(vin);
    auto cin_ = open_input(co.corpus);
    const auto counts = membed::count_corpus_stream(
        cin_, vocab, co.window, membed::count_mode_from_string(co.mode), co.tok.options());
    write_file_atomic(co.out, [&](std::ostream& o) { membed::save_counts(counts, o); });
    std::map<std::string, std::string> kv = {{"command", "count"},
                                             {"corpus", co.corpus},
                                             {"vocab", co.vocab},
                                             {"window", std::to_string(co.window)},
                                             {"mode", co.mode}};
    co.tok.echo(kv);
    write_config_echo(co.out + ".config", kv);
  });

  // ---- walk ----
  auto* walk_cmd = app.add_subcommand("walk", "Generate token streams from Markov processes");
  walk_cmd->require_subcommand(1);

  auto* wg = walk_cmd->add_subcommand("gaussian", "Gaussian latent-space walk");
  struct {
    std::string points, out;
    double sigma = 1.0;
    std::uint64_t steps = 100000;
    std::size_t sentence_length = 1000;
    bool restart = false;
  } gw;
  wg->add_option("--points", gw.points, "Point cloud file")->required()->check(
      CLI::ExistingFile);
  wg->add_option("--out", gw.out, "Output corpus")->required();
  wg->add_option("--sigma", gw.sigma, "Transition scale sigma");
  wg->add_option("--steps", gw.steps, "Total tokens to sample");
  wg->add_option("--sentence-length", gw.sentence_length, "Tokens per sentence");
  wg->add_flag("--restart-per-sentence", gw.restart,
               "Restart the chain at each sentence boundary");
  wg->callback([&] {
    auto pin = open_input(gw.points);
    const auto points = membed::load_point_cloud(pin);
    membed::GaussianWalkConfig cfg;
    cfg.sigma = gw.sigma;
    cfg.steps = gw.steps;
    cfg.sentence_length = gw.sentence_length;
    cfg.restart_per_sentence = gw.restart;
    save_sentences_stream(gw.out, [&](auto&& sink) {
      membed::gaussian_walk(points, cfg, seed, sink);
    });
    write_config_echo(gw.out + ".config",
                      {{"command", "walk gaussian"},
                       {"points", gw.points},
                       {"sigma", fmt(gw.sigma)},
                       {"steps", std::to_string(gw.steps)},
                       {"sentence_length", std::to_string(gw.sentence_length)},
                       {"restart_per_sentence", gw.restart ? "true" : "false"},
                       {"seed", std::to_string(seed)}});
  });

  auto* wt = walk_cmd->add_subcommand("topic", "Latent topic process with word emissions");
  struct {
    std::string points, out, alpha_file, density_file;
    double sigma = 0.1, sigma_bar = 0.5;
    std::uint64_t steps = 100000;
    std::size_t sentence_length = 1000;
  } tw;
  wt->add_option("--points", tw.points, "Point cloud file")->required()->check(
      CLI::ExistingFile);
  wt->add_option("--out", tw.out, "Output corpus")->required();
  wt->add_option("--sigma", tw.sigma, "Latent step scale");
  wt->add_option("--sigma-bar", tw.sigma_bar, "Emission scale");
  wt->add_option("--alpha-file", tw.alpha_file,
                 "Per-word frequency multipliers, one per line (default all 1)")
      ->check(CLI::ExistingFile);
  wt->add_option("--density-file", tw.density_file,
                 "Gaussian-mixture topic density JSON (default flat)")
      ->check(CLI::ExistingFile);
  wt->add_option("--steps", tw.steps, "Tokens to sample");
  wt->add_option("--sentence-length", tw.sentence_length, "Tokens per output sentence");
  wt->callback([&] {
    auto pin = open_input(tw.points);
    const auto points = membed::load_point_cloud(pin);
    membed::TopicModelConfig cfg;
    cfg.sigma = tw.sigma;
    cfg.sigma_bar = tw.sigma_bar;
    if (tw.alpha_file.empty()) {
      cfg.alpha.assign(points.size(), 1.0);
    } else {
      auto ain = open_input(tw.alpha_file);
      double a;
      while (ain >> a) cfg.alpha.push_back(a);
    }
    if (!tw.density_file.empty()) cfg.log_density = load_mixture(tw.density_file);
    const auto res = membed::topic_walk(points, cfg, tw.steps, seed);
    save_sentences_stream(tw.out, [&](auto&& sink) {
      std::vector<std::uint32_t> sent;
      for (auto tok : res.tokens) {
        sent.push_back(tok);
        if (sent.size() == tw.sentence_length) {
          sink(sent);
          sent.clear();
        }
      }
      if (!sent.empty()) sink(sent);
    });
    write_config_echo(tw.out + ".config",
                      {{"command", "walk topic"},
                       {"points", tw.points},
                       {"sigma", fmt(tw.sigma)},
                       {"sigma_bar", fmt(tw.sigma_bar)},
                       {"alpha_file", tw.alpha_file},
                       {"density_file", tw.density_file},
                       {"steps", std::to_string(tw.steps)},
                       {"sentence_length", std::to_string(tw.sentence_length)},
                       {"seed", std::to_string(seed)}});
  });

  auto* wk = walk_cmd->add_subcommand("graph", "Simple random walks on a spatial graph");
  struct {
    std::string points, out;
    int knn = 0;
    double eps = 0;
    int walks_per_node = 10;
    int length = 200;
  } kw;
  wk->add_option("--points", kw.points, "Point cloud file")->required()->check(
      CLI::ExistingFile);
  wk->add_option("--out", kw.out, "Output corpus")->required();
  auto* knn_opt = wk->add_option("--knn", kw.knn, "Build a k-nearest-neighbor graph");
  auto* eps_opt = wk->add_option("--eps", kw.eps, "Build an epsilon-ball graph");
  knn_opt->excludes(eps_opt);
  wk->add_option("--walks-per-node", kw.walks_per_node, "Walks started from each vertex");
  wk->add_option("--length", kw.length, "Tokens per walk");
  wk->callback([&] {
    if (kw.knn <= 0 && !(kw.eps > 0))
      throw std::runtime_error("walk graph: pass --knn K or --eps E");
    auto pin = open_input(kw.points);
    const auto points = membed::load_point_cloud(pin);
    const auto graph = kw.knn > 0 ? membed::build_knn_graph(points, kw.knn)
                                  : membed::build_eps_graph(points, kw.eps);
    save_sentences_stream(kw.out, [&](auto&& sink) {
      membed::simple_random_walks(graph, kw.walks_per_node, kw.length, seed, sink);
    });
    write_config_echo(kw.out + ".config",
                      {{"command", "walk graph"},
                       {"points", kw.points},
                       {"knn", std::to_string(kw.knn)},
                       {"eps", fmt(kw.eps)},
                       {"walks_per_node", std::to_string(kw.walks_per_node)},
                       {"length", std::to_string(kw.length)},
                       {"seed", std::to_string(seed)}});
  });

  // ---- embed ----
  auto* embed_cmd = app.add_subcommand("embed", "Fit embeddings from a counts file");
  struct {
    std::string counts, out, vocab, save_context, save_bias, loss = "nb";
    int dim = 300;
    double theta = 50.0;
    int epochs = 10;
    double eta_start = 10.0;
    double x_max = 10.0;
    double exponent = 0.75;
    double zero_ratio = 1.0;
    double tau = 0.0;
    double smoothing = 0.0;
  } em;
  embed_cmd->add_option("--counts", em.counts, "Counts file")->required()->check(
      CLI::ExistingFile);
  embed_cmd->add_option("--out", em.out, "Output vectors (word2vec text format)")
      ->required();
  embed_cmd->add_option("--loss", em.loss, "nb | glove | softmax | svd | mds")
      ->check(CLI::IsMember({"nb", "glove", "softmax", "svd", "mds"}));
  embed_cmd->add_option("--dim", em.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  embed_cmd->add_option("--theta", em.theta, "Negative-binomial dispersion");
  embed_cmd->add_option("--epochs", em.epochs, "Training epochs");
  embed_cmd->add_option("--eta-start", em.eta_start, "Line-search bracket start");
  embed_cmd->add_option("--x-max", em.x_max, "GloVe weight cap");
  embed_cmd->add_option("--exponent", em.exponent, "GloVe weight exponent");
  embed_cmd->add_option("--zero-ratio", em.zero_ratio,
                        "Sampled zero pairs per stored pair (NB loss)");
  embed_cmd->add_option("--tau", em.tau, "PMI shift before truncation (svd loss)");
  embed_cmd->add_option("--smoothing", em.smoothing, "Additive count smoothing (svd/mds)");
  embed_cmd->add_option("--vocab", em.vocab, "Vocabulary file for token names")
      ->check(CLI::ExistingFile);
  embed_cmd->add_option("--save-context", em.save_context, "Also write context vectors");
  embed_cmd->add_option("--save-bias", em.save_bias, "Also write biases (token a b)");
  embed_cmd->callback([&] {
    auto cin_ = open_input(em.counts);
    const auto counts = membed::load_counts(cin_);
    std::vector<std::string> names(counts.vocab_size());
    if (!em.vocab.empty()) {
      auto vin = open_input(em.vocab);
      const auto vocab = membed::load_vocabulary(vin);
      if (vocab.size() != counts.vocab_size())
        throw std::runtime_error("embed: vocabulary size does not match counts header");
      for (std::uint32_t i = 0; i < vocab.size(); ++i) names[i] = vocab.word(i);
    } else {
      for (std::uint32_t i = 0; i < counts.vocab_size(); ++i) names[i] = std::to_string(i);
    }

    membed::EmbeddingModel model;
    if (em.loss == "svd") {
      const auto pmi = membed::pmi_matrix(counts, em.smoothing);
      model = membed::svd_embed(pmi, em.dim, em.tau, membed::derive_seed(seed, "svd"))
                  .model;
    } else if (em.loss == "mds") {
      // Log-counts with zero cells floored far below the observed range.
      const auto dense = membed::dense_counts(counts);
      Eigen::MatrixXd logc(dense.rows(), dense.cols());
      for (Eigen::Index i = 0; i < dense.rows(); ++i)
        for (Eigen::Index j = 0; j < dense.cols(); ++j)
          logc(i, j) = (dense(i, j) + em.smoothing) > 0
                           ? std::log(dense(i, j) + em.smoothing)
                           : membed::kPmiFloor;
      model = membed::mds_embed(logc, em.dim, membed::derive_seed(seed, "mds"));
    } else {
      membed::TrainConfig cfg;
      cfg.epochs = em.epochs;
      cfg.eta_search_start = em.eta_start;
      cfg.seed = membed::derive_seed(seed, "fit");
      cfg.loss = em.loss == "nb" ? membed::LossKind::neg_binomial
                 : em.loss == "glove" ? membed::LossKind::glove
                                      : membed::LossKind::softmax;
      cfg.theta = em.theta;
      cfg.x_max = em.x_max;
      cfg.exponent = em.exponent;
      cfg.zero_ratio = em.zero_ratio;
      cfg.workers = workers;
      model = membed::fit(counts, em.dim, cfg);
    }

    write_file_atomic(em.out, [&](std::ostream& o) {
      membed::save_embedding_text(model.output_vectors(), names, o);
    });
    if (!em.save_context.empty())
      write_file_atomic(em.save_context, [&](std::ostream& o) {
        membed::save_embedding_text(model.ctx_vecs, names, o);
      });
    if (!em.save_bias.empty())
      write_file_atomic(em.save_bias, [&](std::ostream& o) {
        for (Eigen::Index i = 0; i < model.vocab_size(); ++i)
          o << names[i] << ' ' << fmt(model.row_bias(i)) << ' ' << fmt(model.col_bias(i))
            << '\n';
      });
    write_config_echo(em.out + ".config",
                      {{"command", "embed"},
                       {"counts", em.counts},
                       {"loss", em.loss},
                       {"dim", std::to_string(em.dim)},
                       {"theta", fmt(em.theta)},
                       {"epochs", std::to_string(em.epochs)},
                       {"eta_start", fmt(em.eta_start)},
                       {"x_max", fmt(em.x_max)},
                       {"exponent", fmt(em.exponent)},
                       {"zero_ratio", fmt(em.zero_ratio)},
                       {"tau", fmt(em.tau)},
                       {"smoothing", fmt(em.smoothing)},
                       {"workers", std::to_string(workers)},
                       {"seed", std::to_string(seed)}});
  });

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Score induction tasks against an embedding");
  struct {
    std::string vectors, data, out, format = "analogy", metric = "cosine";
    int answer_vocab = 30000;
    int top_k = 0;
    bool include_query = false;
  } ev;
  eval_cmd->add_option("--vectors", ev.vectors, "Embedding file (word2vec text)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", ev.data, "Task file")->required()->check(
      CLI::ExistingFile);
  eval_cmd->add_option("--out", ev.out, "Output JSON report")->required();
  eval_cmd->add_option("--format", ev.format, "analogy | sat | tasks")
      ->check(CLI::IsMember({"analogy", "sat", "tasks"}));
  eval_cmd->add_option("--metric", ev.metric, "cosine | l2 | diff-cosine")
      ->check(CLI::IsMember({"cosine", "l2", "diff-cosine"}));
  eval_cmd->add_option("--answer-vocab", ev.answer_vocab,
                       "Open-vocabulary answer candidates (top-N words)");
  eval_cmd->add_option("--top-k", ev.top_k, "Also report top-k accuracy");
  eval_cmd->add_flag("--include-query", ev.include_query,
                     "Keep a/b/c among the open-vocabulary candidates");
  eval_cmd->callback([&] {
    auto vin = open_input(ev.vectors);
    const auto emb = membed::load_embedding_text(vin);
    membed::EmbeddingIndex idx(emb);
    auto din = open_input(ev.data);
    std::vector<membed::EvalItem> items;
    if (ev.format == "analogy")
      items = membed::parse_google_analogies(din);
    else if (ev.format == "sat")
      items = membed::parse_sat(din);
    else
      items = membed::parse_tsv_tasks(din);
    const auto rep =
        membed::evaluate_task(items, idx, membed::metric_from_string(ev.metric),
                              ev.answer_vocab, ev.top_k, !ev.include_query);
    auto j = membed::eval_report_to_json(rep);
    j["data"] = ev.data;
    j["vectors"] = ev.vectors;
    write_file_atomic(ev.out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    write_config_echo(ev.out + ".config",
                      {{"command", "eval"},
                       {"vectors", ev.vectors},
                       {"data", ev.data},
                       {"format", ev.format},
                       {"metric", ev.metric},
                       {"answer_vocab", std::to_string(ev.answer_vocab)},
                       {"top_k", std::to_string(ev.top_k)},
                       {"include_query", ev.include_query ? "true" : "false"}});
  });

  // ---- diagnose ----
  auto* diag_cmd =
      app.add_subcommand("diagnose", "Regress log conditionals against squared distances");
  struct {
    std::string conditionals, counts, sqdist, points, out;
    double t_hat = 1.0;
    bool omit_intercepts = false;
  } dg;
  auto* cond_opt = diag_cmd->add_option("--conditionals", dg.conditionals,
                                        "Conditional matrix file");
  auto* counts_opt =
      diag_cmd->add_option("--counts", dg.counts, "Counts file (rows normalized)");
  cond_opt->excludes(counts_opt);
  auto* sq_opt = diag_cmd->add_option("--sqdist", dg.sqdist, "Squared distance matrix");
  auto* pts_opt = diag_cmd->add_option("--points", dg.points,
                                       "Point cloud (squared Euclidean distances)");
  sq_opt->excludes(pts_opt);
  diag_cmd->add_option("--t-hat", dg.t_hat, "Diffusion time scale");
  diag_cmd->add_option("--out", dg.out, "Output JSON report")->required();
  diag_cmd->add_flag("--omit-intercepts", dg.omit_intercepts,
                     "Drop intercept vectors from the report");
  diag_cmd->callback([&] {
    Eigen::MatrixXd conditionals;
    if (!dg.conditionals.empty()) {
      auto in = open_input(dg.conditionals);
      conditionals = membed::load_matrix(in);
    } else if (!dg.counts.empty()) {
      auto in = open_input(dg.counts);
      conditionals =
          membed::conditionals_from_counts(membed::dense_counts(membed::load_counts(in)));
    } else {
      throw std::runtime_error("diagnose: pass --conditionals or --counts");
    }
    Eigen::MatrixXd sqdist;
    if (!dg.sqdist.empty()) {
      auto in = open_input(dg.sqdist);
      sqdist = membed::load_matrix(in);
    } else if (!dg.points.empty()) {
      auto in = open_input(dg.points);
      sqdist = membed::squared_distance_matrix(membed::load_point_cloud(in));
    } else {
      throw std::runtime_error("diagnose: pass --sqdist or --points");
    }
    const auto fit = membed::varadhan_diagnostic(conditionals, sqdist, dg.t_hat);
    const auto j = membed::varadhan_fit_to_json(fit, !dg.omit_intercepts);
    write_file_atomic(dg.out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    write_config_echo(dg.out + ".config",
                      {{"command", "diagnose"},
                       {"conditionals", dg.conditionals},
                       {"counts", dg.counts},
                       {"sqdist", dg.sqdist},
                       {"points", dg.points},
                       {"t_hat", fmt(dg.t_hat)}});
  });

  // ---- demo-varadhan ----
  auto* dv_cmd = app.add_subcommand(
      "demo-varadhan", "Sample points, walk a kNN graph, verify the distance law");
  struct {
    std::string out;
    membed::VaradhanDemoConfig cfg;
  } dv;
  dv_cmd->add_option("--out", dv.out, "Output directory")->required();
  dv_cmd->add_option("--n", dv.cfg.n, "Points sampled on the unit square");
  dv_cmd->add_option("--k", dv.cfg.k, "kNN graph degree");
  dv_cmd->add_option("--walks", dv.cfg.walks_per_node, "Walks per node");
  dv_cmd->add_option("--length", dv.cfg.walk_length, "Walk length");
  dv_cmd->add_option("--window", dv.cfg.window, "Counting window");
  dv_cmd->add_option("--t-hat", dv.cfg.t_hat, "Diffusion time scale");
  dv_cmd->callback([&] {
    dv.cfg.seed = seed;
    std::filesystem::create_directories(dv.out);
    const auto report = membed::demo_varadhan(dv.cfg);
    write_file_atomic(dv.out + "/report.json",
                      [&](std::ostream& o) { o << report.dump(2) << '\n'; });
    write_file_atomic(dv.out + "/config.json", [&](std::ostream& o) {
      o << report.at("config").dump(2) << '\n';
    });
  });

  // ---- demo-mnist ----
  auto* dm_cmd = app.add_subcommand(
      "demo-mnist", "Embed an IDX image set via random walks and score 5-NN purity");
  struct {
    std::string out;
    membed::MnistDemoConfig cfg;
  } dm;
  dm_cmd->add_option("--images", dm.cfg.images_path, "IDX3 image file")
      ->required()
      ->check(CLI::ExistingFile);
  dm_cmd->add_option("--labels", dm.cfg.labels_path, "IDX1 label file")
      ->required()
      ->check(CLI::ExistingFile);
  dm_cmd->add_option("--out", dm.out, "Output directory")->required();
  dm_cmd->add_option("--subset", dm.cfg.subset, "Points to keep");
  dm_cmd->add_option("--k", dm.cfg.k, "kNN graph degree");
  dm_cmd->add_option("--walks", dm.cfg.walks_per_node, "Walks per node");
  dm_cmd->add_option("--length", dm.cfg.walk_length, "Walk length");
  dm_cmd->add_option("--window", dm.cfg.window, "Counting window");
  dm_cmd->add_option("--dim", dm.cfg.dim, "Embedding dimension");
  dm_cmd->add_option("--theta", dm.cfg.theta, "NB dispersion");
  dm_cmd->add_option("--epochs", dm.cfg.epochs, "Regression epochs");
  dm_cmd->add_option("--purity-k", dm.cfg.purity_k, "Neighbors for the purity score");
  dm_cmd->callback([&] {
    dm.cfg.seed = seed;
    std::filesystem::create_directories(dm.out);
    const auto res = membed::demo_mnist(dm.cfg);
    std::vector<std::string> names(res.labels.size());
    for (std::size_t i = 0; i < names.size(); ++i) names[i] = std::to_string(i);
    write_file_atomic(dm.out + "/report.json",
                      [&](std::ostream& o) { o << res.report.dump(2) << '\n'; });
    write_file_atomic(dm.out + "/config.json", [&](std::ostream& o) {
      o << res.report.at("config").dump(2) << '\n';
    });
    write_file_atomic(dm.out + "/regression_vectors.txt", [&](std::ostream& o) {
      membed::save_embedding_text(res.regression_vectors, names, o);
    });
    write_file_atomic(dm.out + "/svd_vectors.txt", [&](std::ostream& o) {
      membed::save_embedding_text(res.svd_vectors, names, o);
    });
  });

  // Subcommand callbacks run during parse; domain errors surface here.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "membed: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
