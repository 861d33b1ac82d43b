#pragma once

#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace membed {

// Dense matrix text format: header "rows cols", then one row per line.
inline void save_matrix(const Eigen::MatrixXd& m, std::ostream& out) {
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd load_matrix(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("matrix file: empty");
  std::istringstream hs(header);
  Eigen::Index rows, cols;
  if (!(hs >> rows >> cols) || rows < 1 || cols < 1)
    throw std::runtime_error("matrix file: bad header: " + header);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw std::runtime_error("matrix file: truncated at row " + std::to_string(i));
  return m;
}

// Writes through a temp file and renames on commit, so failed runs never
// leave partial outputs behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {
    out_.open(tmp_, std::ios::binary);
    if (!out_) throw std::runtime_error("cannot open " + tmp_ + " for writing");
  }

  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + tmp_);
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

template <typename Fn>
void write_file_atomic(const std::string& path, Fn&& fn) {
  AtomicFile f(path);
  fn(f.stream());
  f.commit();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace membed
