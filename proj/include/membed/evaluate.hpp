#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "membed/embedding_model.hpp"

namespace membed {

enum class ItemKind { analogy, sat, sequence, classification };
enum class Metric { cosine, l2, diff_cosine };

inline Metric metric_from_string(const std::string& s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "l2") return Metric::l2;
  if (s == "diff-cosine" || s == "diff_cosine") return Metric::diff_cosine;
  throw std::invalid_argument("unknown metric: " + s);
}

// One induction question. Analogy and open-vocabulary sequence items rank
// the whole answer vocabulary; SAT and multiple-choice items rank their own
// choice lists.
struct EvalItem {
  ItemKind kind = ItemKind::analogy;
  std::vector<std::string> words;    // analogy: a b c; sat: A B; seq/cls: given words
  std::vector<std::string> choices;  // sat: C1 D1 C2 D2 ...; seq/cls: choice words
  std::string answer;                // answer word (sat: "1".."5" index form kept too)
  int answer_index = -1;             // index into choices for multiple-choice kinds
  std::string section;               // group label for per-section reporting

  bool multiple_choice() const { return !choices.empty(); }

  std::vector<std::string> all_words() const {
    std::vector<std::string> out = words;
    out.insert(out.end(), choices.begin(), choices.end());
    if (!multiple_choice()) out.push_back(answer);
    return out;
  }
};

struct SectionStats {
  int covered = 0;
  int total = 0;
  int correct = 0;
  int top_k_correct = 0;
};

struct EvalReport {
  double accuracy = 0;
  int covered = 0;
  int total = 0;
  std::optional<double> top_k_accuracy;
  std::map<std::string, SectionStats> sections;
  bool undefined = false;  // no covered items; accuracy reported as 0
  Metric metric = Metric::cosine;
  int top_k = 0;
};

// Word lookup over a loaded embedding.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(const NamedEmbedding& e) : emb_(e) {
    for (std::size_t i = 0; i < e.names.size(); ++i)
      ids_.emplace(e.names[i], static_cast<Eigen::Index>(i));
  }

  std::int64_t id_of(const std::string& w) const {
    auto it = ids_.find(w);
    return it == ids_.end() ? -1 : it->second;
  }
  Eigen::RowVectorXd vec(const std::string& w) const {
    auto id = id_of(w);
    if (id < 0) throw std::out_of_range("embedding index: unknown word " + w);
    return emb_.vectors.row(id);
  }
  const NamedEmbedding& embedding() const { return emb_; }
  Eigen::Index size() const { return emb_.vectors.rows(); }

 private:
  const NamedEmbedding& emb_;
  std::unordered_map<std::string, Eigen::Index> ids_;
};

// Ideal points: parallelogram for analogies, B - A for SAT, centroid for
// classification, linear extrapolation w_n + (w_n - w_1)/n for sequences.
inline Eigen::RowVectorXd ideal_point(const EvalItem& item, const EmbeddingIndex& idx) {
  switch (item.kind) {
    case ItemKind::analogy: {
      if (item.words.size() != 3)
        throw std::invalid_argument("ideal_point: analogy needs words a b c");
      return idx.vec(item.words[1]) - idx.vec(item.words[0]) + idx.vec(item.words[2]);
    }
    case ItemKind::sat: {
      if (item.words.size() != 2)
        throw std::invalid_argument("ideal_point: sat needs exemplar pair A B");
      return idx.vec(item.words[1]) - idx.vec(item.words[0]);
    }
    case ItemKind::classification: {
      if (item.words.empty())
        throw std::invalid_argument("ideal_point: classification needs words");
      Eigen::RowVectorXd c = idx.vec(item.words[0]);
      for (std::size_t i = 1; i < item.words.size(); ++i) c += idx.vec(item.words[i]);
      return c / static_cast<double>(item.words.size());
    }
    case ItemKind::sequence: {
      if (item.words.empty())
        throw std::invalid_argument("ideal_point: sequence needs words");
      const double n = static_cast<double>(item.words.size());
      Eigen::RowVectorXd last = idx.vec(item.words.back());
      return last + (last - idx.vec(item.words.front())) / n;
    }
  }
  throw std::logic_error("ideal_point: unreachable");
}

// Rank candidate rows against an ideal point. Exhausted-norm candidates are
// skipped under cosine; ties break by ascending candidate index.
inline std::vector<int> rank_candidates(const Eigen::RowVectorXd& ideal,
                                        const Eigen::MatrixXd& candidates, Metric metric,
                                        const std::vector<int>& exclusions = {},
                                        int* skipped_zero_norm = nullptr) {
  const Eigen::Index n = candidates.rows();
  std::vector<char> excluded(n, 0);
  for (int e : exclusions)
    if (e >= 0 && e < n) excluded[e] = 1;
  std::vector<std::pair<double, int>> scored;  // (-score, index) for stable sort
  scored.reserve(n);
  const double ideal_norm = ideal.norm();
  Eigen::RowVectorXd unit_ideal =
      ideal_norm > 0 ? Eigen::RowVectorXd(ideal / ideal_norm) : ideal;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (excluded[i]) continue;
    double score;
    if (metric == Metric::l2) {
      score = -(candidates.row(i) - ideal).norm();
    } else {
      const double cn = candidates.row(i).norm();
      if (cn == 0) {
        if (skipped_zero_norm) ++*skipped_zero_norm;
        continue;
      }
      score = candidates.row(i).dot(unit_ideal) / cn;
    }
    scored.emplace_back(-score, static_cast<int>(i));
  }
  if (scored.empty())
    throw std::runtime_error("rank_candidates: no candidates after exclusions");
  std::sort(scored.begin(), scored.end());
  std::vector<int> order;
  order.reserve(scored.size());
  for (auto& [s, i] : scored) order.push_back(i);
  return order;
}

namespace detail {

// Candidate matrix for one multiple-choice item; SAT items rank normalized
// pair differences D_k - C_k.
inline Eigen::MatrixXd choice_matrix(const EvalItem& item, const EmbeddingIndex& idx) {
  if (item.kind == ItemKind::sat) {
    const auto pairs = item.choices.size() / 2;
    Eigen::MatrixXd m(pairs, idx.embedding().vectors.cols());
    for (std::size_t k = 0; k < pairs; ++k)
      m.row(k) = idx.vec(item.choices[2 * k + 1]) - idx.vec(item.choices[2 * k]);
    return m;
  }
  Eigen::MatrixXd m(item.choices.size(), idx.embedding().vectors.cols());
  for (std::size_t k = 0; k < item.choices.size(); ++k) m.row(k) = idx.vec(item.choices[k]);
  return m;
}

}  // namespace detail

// Accuracy over covered items. Open-vocabulary kinds rank the top
// answer_vocab_limit words (query words excluded for analogies unless
// exclude_query is cleared); multiple-choice kinds rank their choices.
// Uncovered items (any OOV word) are counted but not scored.
inline EvalReport evaluate_task(const std::vector<EvalItem>& items,
                                const EmbeddingIndex& idx, Metric metric,
                                int answer_vocab_limit = 30000, int top_k = 0,
                                bool exclude_query = true) {
  EvalReport rep;
  rep.metric = metric;
  rep.top_k = top_k;
  const Eigen::Index limit =
      std::min<Eigen::Index>(idx.size(), answer_vocab_limit > 0 ? answer_vocab_limit
                                                                : idx.size());
  const Eigen::MatrixXd open_candidates = idx.embedding().vectors.topRows(limit);
  int correct = 0, top_k_correct = 0;
  for (const auto& item : items) {
    auto& sec = rep.sections[item.section];
    ++rep.total;
    ++sec.total;
    bool covered = true;
    for (const auto& w : item.all_words())
      if (idx.id_of(w) < 0) {
        covered = false;
        break;
      }
    if (!covered) continue;
    ++rep.covered;
    ++sec.covered;

    const Eigen::RowVectorXd ideal = ideal_point(item, idx);
    if (metric == Metric::diff_cosine && item.kind != ItemKind::sat)
      throw std::invalid_argument("evaluate_task: diff-cosine applies to SAT items only");
    // SAT candidates are already pair differences, so diff-cosine (both
    // sides normalized) reduces to the cosine path.
    const Metric use_metric = metric == Metric::diff_cosine ? Metric::cosine : metric;
    int predicted_first = -1;
    bool in_top_k = false;
    if (item.multiple_choice()) {
      const Eigen::MatrixXd cand = detail::choice_matrix(item, idx);
      // diff-cosine: both the ideal and the candidate differences are unit
      // normalized; plain cosine of the raw difference is identical for the
      // argmax, so reuse the cosine path.
      const auto order = rank_candidates(ideal, cand, use_metric);
      predicted_first = order.front();
      const int want = item.answer_index;
      const int kk = top_k > 0 ? top_k : 1;
      for (int t = 0; t < kk && t < static_cast<int>(order.size()); ++t)
        if (order[t] == want) in_top_k = true;
      if (predicted_first == want) {
        ++correct;
        ++sec.correct;
      }
    } else {
      std::vector<int> exclusions;
      if (exclude_query)
        for (const auto& w : item.words) {
          const auto id = idx.id_of(w);
          if (id >= 0 && id < limit) exclusions.push_back(static_cast<int>(id));
        }
      const auto order = rank_candidates(ideal, open_candidates, use_metric, exclusions);
      predicted_first = order.front();
      const auto want = idx.id_of(item.answer);
      const int kk = top_k > 0 ? top_k : 1;
      for (int t = 0; t < kk && t < static_cast<int>(order.size()); ++t)
        if (order[t] == want) in_top_k = true;
      if (predicted_first == want) {
        ++correct;
        ++sec.correct;
      }
    }
    if (in_top_k) {
      ++top_k_correct;
      ++sec.top_k_correct;
    }
  }
  rep.undefined = rep.covered == 0;
  rep.accuracy = rep.undefined ? 0.0 : static_cast<double>(correct) / rep.covered;
  if (top_k > 0)
    rep.top_k_accuracy =
        rep.undefined ? 0.0 : static_cast<double>(top_k_correct) / rep.covered;
  return rep;
}

// Mean fraction of each point's k nearest neighbors (self excluded, ties by
// index) that share the point's label.
inline double knn_purity(const Eigen::MatrixXd& vectors, const std::vector<int>& labels,
                         int k) {
  const Eigen::Index n = vectors.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("knn_purity: label count mismatch");
  if (k < 1 || k >= n) throw std::invalid_argument("knn_purity: need 1 <= k < n");
  double total = 0;
  std::vector<std::pair<double, int>> cand(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i)
        cand[m++] = {(vectors.row(i) - vectors.row(j)).squaredNorm(),
                     static_cast<int>(j)};
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    int same = 0;
    for (int t = 0; t < k; ++t)
      if (labels[cand[t].second] == labels[i]) ++same;
    total += static_cast<double>(same) / k;
  }
  return total / n;
}

// ---- Task file parsers ----

// Google analogy format: ": section" headers, then "A B C D" lines.
inline std::vector<EvalItem> parse_google_analogies(std::istream& in) {
  std::vector<EvalItem> items;
  std::string line, section = "default";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == ':') {
      std::istringstream ls(line.substr(1));
      ls >> section;
      continue;
    }
    std::istringstream ls(line);
    EvalItem item;
    item.kind = ItemKind::analogy;
    item.section = section;
    item.words.resize(3);
    if (!(ls >> item.words[0] >> item.words[1] >> item.words[2] >> item.answer))
      throw std::runtime_error("analogy file: bad line: " + line);
    items.push_back(std::move(item));
  }
  return items;
}

// SAT blocks: exemplar "A B", five candidate "C D" lines, "ans <1-5>",
// separated by blank lines.
inline std::vector<EvalItem> parse_sat(std::istream& in) {
  std::vector<EvalItem> items;
  std::vector<std::string> block;
  std::string line;
  auto flush = [&] {
    if (block.empty()) return;
    if (block.size() != 7)
      throw std::runtime_error("sat file: block must have 7 lines, got " +
                               std::to_string(block.size()));
    EvalItem item;
    item.kind = ItemKind::sat;
    item.section = "sat";
    std::istringstream ex(block[0]);
    std::string a, b;
    if (!(ex >> a >> b)) throw std::runtime_error("sat file: bad exemplar: " + block[0]);
    item.words = {a, b};
    for (int k = 1; k <= 5; ++k) {
      std::istringstream cs(block[k]);
      std::string c, d;
      if (!(cs >> c >> d)) throw std::runtime_error("sat file: bad candidate: " + block[k]);
      item.choices.push_back(c);
      item.choices.push_back(d);
    }
    std::istringstream as(block[6]);
    std::string tag;
    int ans;
    if (!(as >> tag >> ans) || tag != "ans" || ans < 1 || ans > 5)
      throw std::runtime_error("sat file: bad answer line: " + block[6]);
    item.answer_index = ans - 1;
    item.answer = std::to_string(ans);
    items.push_back(std::move(item));
    block.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty())
      flush();
    else
      block.push_back(line);
  }
  flush();
  return items;
}

namespace detail {
inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace detail

// TSV tasks: "seq\tw1,...,wn\tchoices c1|...|cm\tanswer" (multiple choice) or
// "seq\tw1,...,wn\tanswer" (open vocabulary); likewise for "cls".
inline std::vector<EvalItem> parse_tsv_tasks(std::istream& in) {
  std::vector<EvalItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = detail::split(line, '\t');
    if (cols.size() != 3 && cols.size() != 4)
      throw std::runtime_error("task file: need 3 or 4 tab-separated columns: " + line);
    EvalItem item;
    if (cols[0] == "seq")
      item.kind = ItemKind::sequence;
    else if (cols[0] == "cls")
      item.kind = ItemKind::classification;
    else
      throw std::runtime_error("task file: unknown kind: " + cols[0]);
    item.section = cols[0];
    item.words = detail::split(cols[1], ',');
    if (cols.size() == 4) {
      const std::string prefix = "choices ";
      std::string c = cols[2];
      if (c.rfind(prefix, 0) == 0) c = c.substr(prefix.size());
      item.choices = detail::split(c, '|');
      item.answer = cols[3];
      auto it = std::find(item.choices.begin(), item.choices.end(), item.answer);
      if (it == item.choices.end())
        throw std::runtime_error("task file: answer not among choices: " + line);
      item.answer_index = static_cast<int>(it - item.choices.begin());
    } else {
      if (item.kind == ItemKind::classification)
        throw std::runtime_error("task file: classification requires choices: " + line);
      item.answer = cols[2];
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace membed
