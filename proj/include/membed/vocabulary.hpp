#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace membed {

// Whitespace tokenization with the optional corpus-normalization flags
// (lowercasing, punctuation stripping, dropping numeric tokens).
struct TokenizerOptions {
  bool lowercase = false;
  bool strip_punct = false;
  bool strip_numbers = false;
};

inline std::vector<std::string> tokenize(std::string_view line,
                                         const TokenizerOptions& opt = {}) {
  std::vector<std::string> out;
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    if (opt.strip_numbers) {
      bool numeric = std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
        return std::isdigit(c) || c == '.' || c == ',' || c == '-' || c == '+';
      });
      bool has_digit = std::any_of(tok.begin(), tok.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
      });
      if (numeric && has_digit) {
        tok.clear();
        return;
      }
    }
    out.push_back(tok);
    tok.clear();
  };
  for (char ch : line) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
      continue;
    }
    if (opt.strip_punct && std::ispunct(c)) continue;
    tok.push_back(opt.lowercase ? static_cast<char>(std::tolower(c)) : ch);
  }
  flush();
  return out;
}

// Word <-> id map ordered by descending frequency (ties lexicographic),
// so id 0 is always the most frequent word.
class Vocabulary {
 public:
  Vocabulary() = default;

  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> freqs)
      : words_(std::move(words)), freqs_(std::move(freqs)) {
    if (words_.size() != freqs_.size())
      throw std::invalid_argument("vocabulary: words/freqs size mismatch");
    for (std::uint32_t i = 0; i < words_.size(); ++i) {
      if (i > 0 && (freqs_[i] > freqs_[i - 1] ||
                    (freqs_[i] == freqs_[i - 1] && words_[i] < words_[i - 1])))
        throw std::invalid_argument(
            "vocabulary: words not in (descending count, lexicographic) order");
      if (!id_of_.emplace(words_[i], i).second)
        throw std::invalid_argument("vocabulary: duplicate word " + words_[i]);
    }
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(words_.size()); }
  const std::string& word(std::uint32_t id) const { return words_.at(id); }
  std::uint64_t freq(std::uint32_t id) const { return freqs_.at(id); }
  const std::vector<std::string>& words() const { return words_; }

  // -1 when out of vocabulary.
  std::int64_t id_of(std::string_view w) const {
    auto it = id_of_.find(std::string(w));
    return it == id_of_.end() ? -1 : static_cast<std::int64_t>(it->second);
  }

  bool contains(std::string_view w) const { return id_of(w) >= 0; }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, std::uint32_t> id_of_;
};

// Single pass over a finite token stream; keeps at most max_size words with
// frequency >= min_count, ordered by descending count then lexicographically.
template <typename SentenceSource>
Vocabulary build_vocabulary(SentenceSource&& sentences, std::size_t max_size,
                            std::uint64_t min_count = 0) {
  if (max_size < 1) throw std::invalid_argument("build_vocabulary: max_size < 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  sentences([&](const std::vector<std::string>& toks) {
    for (const auto& t : toks) ++counts[t];
  });
  std::vector<std::pair<std::string, std::uint64_t>> items;
  items.reserve(counts.size());
  for (auto& kv : counts)
    if (kv.second >= min_count && kv.second > 0) items.emplace_back(kv.first, kv.second);
  if (items.empty())
    throw std::runtime_error("build_vocabulary: no tokens survive min_count filter");
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > max_size) items.resize(max_size);
  std::vector<std::string> words;
  std::vector<std::uint64_t> freqs;
  words.reserve(items.size());
  freqs.reserve(items.size());
  for (auto& [w, c] : items) {
    words.push_back(std::move(w));
    freqs.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(freqs));
}

// Convenience overload: corpus is one sentence per line.
inline Vocabulary build_vocabulary_from_stream(std::istream& in, std::size_t max_size,
                                               std::uint64_t min_count = 0,
                                               const TokenizerOptions& opt = {}) {
  return build_vocabulary(
      [&](auto&& sink) {
        std::string line;
        while (std::getline(in, line)) sink(tokenize(line, opt));
      },
      max_size, min_count);
}

inline void save_vocabulary(const Vocabulary& v, std::ostream& out) {
  for (std::uint32_t i = 0; i < v.size(); ++i)
    out << v.word(i) << '\t' << v.freq(i) << '\n';
}

inline Vocabulary load_vocabulary(std::istream& in) {
  std::vector<std::string> words;
  std::vector<std::uint64_t> freqs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vocabulary file: missing tab in line: " + line);
    words.push_back(line.substr(0, tab));
    freqs.push_back(std::stoull(line.substr(tab + 1)));
  }
  return Vocabulary(std::move(words), std::move(freqs));
}

}  // namespace membed
