#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "membed/vocabulary.hpp"

namespace membed {

enum class CountMode { harmonic, uniform, raw_transition };

inline const char* to_string(CountMode m) {
  switch (m) {
    case CountMode::harmonic: return "harmonic";
    case CountMode::uniform: return "uniform";
    case CountMode::raw_transition: return "raw";
  }
  return "?";
}

inline CountMode count_mode_from_string(const std::string& s) {
  if (s == "harmonic") return CountMode::harmonic;
  if (s == "uniform") return CountMode::uniform;
  if (s == "raw") return CountMode::raw_transition;
  throw std::invalid_argument("unknown count mode: " + s);
}

// Weighted windowed counts. Symmetric modes store one entry per unordered
// pair; get(i,j) == get(j,i) is structural, not re-counted. Raw-transition
// mode stores directed one-step counts.
class CooccurrenceCounts {
 public:
  struct Entry {
    std::uint32_t i, j;
    double value;
  };

  CooccurrenceCounts(std::uint32_t vocab_size, int window, CountMode mode)
      : vocab_size_(vocab_size), window_(window), mode_(mode) {
    if (window < 1) throw std::invalid_argument("counts: window must be >= 1");
  }

  std::uint32_t vocab_size() const { return vocab_size_; }
  int window() const { return window_; }
  CountMode mode() const { return mode_; }
  std::uint64_t total_tokens() const { return total_tokens_; }
  std::size_t nonzeros() const { return map_.size(); }
  bool symmetric() const { return mode_ != CountMode::raw_transition; }

  void add(std::uint32_t i, std::uint32_t j, double w) {
    if (i >= vocab_size_ || j >= vocab_size_)
      throw std::out_of_range("counts: token id out of range");
    if (symmetric()) {
      // Hat-C_ij sums forward and backward occurrences, so a same-word pair
      // contributes twice to its single diagonal cell.
      if (i == j) {
        map_[key(i, j)] += 2 * w;
        return;
      }
      if (i > j) std::swap(i, j);
    }
    map_[key(i, j)] += w;
  }

  void add_tokens(std::uint64_t n) { total_tokens_ += n; }

  double get(std::uint32_t i, std::uint32_t j) const {
    if (symmetric() && i > j) std::swap(i, j);
    auto it = map_.find(key(i, j));
    return it == map_.end() ? 0.0 : it->second;
  }

  // Row sums over the full (virtual) matrix: symmetric modes expand the
  // canonical storage, raw mode sums outgoing transitions.
  std::vector<double> row_sums() const {
    std::vector<double> s(vocab_size_, 0.0);
    for (const auto& [k, v] : map_) {
      auto [i, j] = unkey(k);
      if (symmetric() && i != j) {
        s[i] += v;
        s[j] += v;
      } else {
        s[i] += v;
      }
    }
    return s;
  }

  double total_mass() const {
    // Sum of the full matrix (both orientations for symmetric modes).
    double t = 0;
    for (const auto& [k, v] : map_) {
      auto [i, j] = unkey(k);
      t += (symmetric() && i != j) ? 2 * v : v;
    }
    return t;
  }

  // Deterministic iteration order for file output and tests.
  std::vector<Entry> sorted_entries() const {
    std::vector<Entry> out;
    out.reserve(map_.size());
    for (const auto& [k, v] : map_) {
      auto [i, j] = unkey(k);
      out.push_back({i, j, v});
    }
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return out;
  }

  const std::unordered_map<std::uint64_t, double>& raw_map() const { return map_; }

  // For merge/load paths where keys are already canonical and values are
  // full hat-C entries (no diagonal re-doubling).
  void add_canonical(std::uint64_t k, double v) { map_[k] += v; }

  static std::uint64_t key(std::uint32_t i, std::uint32_t j) {
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }
  static std::pair<std::uint32_t, std::uint32_t> unkey(std::uint64_t k) {
    return {static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k)};
  }

 private:
  std::unordered_map<std::uint64_t, double> map_;
  std::uint32_t vocab_size_;
  int window_;
  CountMode mode_;
  std::uint64_t total_tokens_ = 0;
};

// Normalized offset weights: harmonic w(t) = (1/t)/H_W, uniform w(t) = 1/W.
inline std::vector<double> offset_weights(int window, CountMode mode) {
  std::vector<double> w(window);
  if (mode == CountMode::uniform) {
    for (int t = 0; t < window; ++t) w[t] = 1.0 / window;
  } else {
    double hw = 0;
    for (int t = 1; t <= window; ++t) hw += 1.0 / t;
    for (int t = 1; t <= window; ++t) w[t - 1] = (1.0 / t) / hw;
  }
  return w;
}

// Core counter over id sentences. Windows never cross sentence boundaries;
// callers drop out-of-vocabulary tokens before this point so window offsets
// run over kept tokens.
template <typename IdSentenceSource>
CooccurrenceCounts count_cooccurrences_ids(IdSentenceSource&& sentences,
                                           std::uint32_t vocab_size, int window,
                                           CountMode mode) {
  CooccurrenceCounts counts(vocab_size, window, mode);
  if (mode == CountMode::raw_transition) {
    sentences([&](const std::vector<std::uint32_t>& s) {
      counts.add_tokens(s.size());
      for (std::size_t p = 0; p + 1 < s.size(); ++p) counts.add(s[p], s[p + 1], 1.0);
    });
    return counts;
  }
  const std::vector<double> w = offset_weights(window, mode);
  sentences([&](const std::vector<std::uint32_t>& s) {
    counts.add_tokens(s.size());
    const std::size_t n = s.size();
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t tmax = std::min<std::size_t>(window, n - 1 - p);
      for (std::size_t t = 1; t <= tmax; ++t) counts.add(s[p], s[p + t], w[t - 1]);
    }
  });
  return counts;
}

// String-token adapter: maps through the vocabulary, closing up positions
// around dropped OOV tokens.
template <typename SentenceSource>
CooccurrenceCounts count_cooccurrences(SentenceSource&& sentences,
                                       const Vocabulary& vocab, int window,
                                       CountMode mode) {
  return count_cooccurrences_ids(
      [&](auto&& sink) {
        sentences([&](const std::vector<std::string>& toks) {
          std::vector<std::uint32_t> ids;
          ids.reserve(toks.size());
          for (const auto& t : toks) {
            std::int64_t id = vocab.id_of(t);
            if (id >= 0) ids.push_back(static_cast<std::uint32_t>(id));
          }
          sink(ids);
        });
      },
      vocab.size(), window, mode);
}

inline CooccurrenceCounts count_corpus_stream(std::istream& in, const Vocabulary& vocab,
                                              int window, CountMode mode,
                                              const TokenizerOptions& opt = {}) {
  return count_cooccurrences(
      [&](auto&& sink) {
        std::string line;
        while (std::getline(in, line)) sink(tokenize(line, opt));
      },
      vocab, window, mode);
}

inline CooccurrenceCounts merge_counts(const CooccurrenceCounts& a,
                                       const CooccurrenceCounts& b) {
  if (a.vocab_size() != b.vocab_size() || a.window() != b.window() ||
      a.mode() != b.mode())
    throw std::invalid_argument("merge_counts: metadata mismatch");
  CooccurrenceCounts out(a.vocab_size(), a.window(), a.mode());
  out.add_tokens(a.total_tokens() + b.total_tokens());
  for (const auto& [k, v] : a.raw_map()) out.add_canonical(k, v);
  for (const auto& [k, v] : b.raw_map()) out.add_canonical(k, v);
  return out;
}

// Text format: header "n W mode m", then "i j value" with i <= j for
// symmetric modes, in ascending (i, j) order.
inline void save_counts(const CooccurrenceCounts& c, std::ostream& out) {
  out << c.vocab_size() << ' ' << c.window() << ' ' << to_string(c.mode()) << ' '
      << c.total_tokens() << '\n';
  char buf[64];
  for (const auto& e : c.sorted_entries()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.value);
    out << e.i << ' ' << e.j << ' ' << buf << '\n';
  }
}

inline CooccurrenceCounts load_counts(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("counts file: empty");
  std::istringstream hs(header);
  std::uint32_t n;
  int window;
  std::string mode_s;
  std::uint64_t m;
  if (!(hs >> n >> window >> mode_s >> m))
    throw std::runtime_error("counts file: bad header: " + header);
  CooccurrenceCounts c(n, window, count_mode_from_string(mode_s));
  c.add_tokens(m);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::uint32_t i, j;
    double v;
    if (!(ls >> i >> j >> v)) throw std::runtime_error("counts file: bad line: " + line);
    c.add_canonical(CooccurrenceCounts::key(i, j), v);
  }
  return c;
}

}  // namespace membed
