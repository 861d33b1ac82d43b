#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace membed {

// Word vectors, context vectors and the row/column biases of the
// log-bilinear rate lambda_ij = exp(-|x_i - c_j|^2 / 2 + a_i + b_j).
struct EmbeddingModel {
  Eigen::MatrixXd word_vecs;  // n x d
  Eigen::MatrixXd ctx_vecs;   // n x d
  Eigen::VectorXd row_bias;   // n
  Eigen::VectorXd col_bias;   // n
  int dim = 0;
  double theta = 50.0;

  Eigen::Index vocab_size() const { return word_vecs.rows(); }

  // Conventional output representation: the word/context average.
  Eigen::MatrixXd output_vectors() const { return 0.5 * (word_vecs + ctx_vecs); }

  double log_rate(Eigen::Index i, Eigen::Index j) const {
    return -0.5 * (word_vecs.row(i) - ctx_vecs.row(j)).squaredNorm() + row_bias(i) +
           col_bias(j);
  }

  bool all_finite() const {
    return word_vecs.allFinite() && ctx_vecs.allFinite() && row_bias.allFinite() &&
           col_bias.allFinite();
  }

  static EmbeddingModel vectors_only(Eigen::MatrixXd vecs) {
    EmbeddingModel m;
    m.dim = static_cast<int>(vecs.cols());
    m.ctx_vecs = vecs;
    m.word_vecs = std::move(vecs);
    m.row_bias = Eigen::VectorXd::Zero(m.word_vecs.rows());
    m.col_bias = Eigen::VectorXd::Zero(m.word_vecs.rows());
    return m;
  }
};

// word2vec text convention: header "n d", then one "token v1 ... vd" line
// per word.
inline void save_embedding_text(const Eigen::MatrixXd& vecs,
                                const std::vector<std::string>& names,
                                std::ostream& out) {
  if (static_cast<Eigen::Index>(names.size()) != vecs.rows())
    throw std::invalid_argument("save_embedding_text: name/vector count mismatch");
  out << vecs.rows() << ' ' << vecs.cols() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
    out << names[i];
    for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.10g", vecs(i, j));
      out << ' ' << buf;
    }
    out << '\n';
  }
}

struct NamedEmbedding {
  std::vector<std::string> names;
  Eigen::MatrixXd vectors;
};

inline NamedEmbedding load_embedding_text(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("embedding file: empty");
  std::istringstream hs(header);
  Eigen::Index n, d;
  if (!(hs >> n >> d) || n < 1 || d < 1)
    throw std::runtime_error("embedding file: bad header: " + header);
  NamedEmbedding e;
  e.names.resize(n);
  e.vectors.resize(n, d);
  std::string line;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("embedding file: truncated at row " + std::to_string(i));
    std::istringstream ls(line);
    if (!(ls >> e.names[i]))
      throw std::runtime_error("embedding file: missing token at row " + std::to_string(i));
    for (Eigen::Index j = 0; j < d; ++j)
      if (!(ls >> e.vectors(i, j)))
        throw std::runtime_error("embedding file: bad vector at row " + std::to_string(i));
  }
  return e;
}

}  // namespace membed
