#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace membed {

// Latent coordinates, one point per row, with optional integer labels
// (ground truth for generators and purity metrics).
struct PointCloud {
  Eigen::MatrixXd coords;   // n x d
  std::vector<int> labels;  // empty or size n

  Eigen::Index size() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
  bool has_labels() const { return !labels.empty(); }

  void validate() const {
    if (coords.rows() < 1) throw std::invalid_argument("point cloud: empty");
    if (!coords.allFinite())
      throw std::invalid_argument("point cloud: non-finite coordinate");
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != coords.rows())
      throw std::invalid_argument("point cloud: label count mismatch");
  }
};

inline double squared_distance(const PointCloud& pc, Eigen::Index i, Eigen::Index j) {
  return (pc.coords.row(i) - pc.coords.row(j)).squaredNorm();
}

// Text format: header "n d", one point per line (d floats, optional trailing
// integer label).
inline void save_point_cloud(const PointCloud& pc, std::ostream& out) {
  out << pc.size() << ' ' << pc.dim() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < pc.size(); ++i) {
    for (Eigen::Index j = 0; j < pc.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", pc.coords(i, j));
      out << (j ? " " : "") << buf;
    }
    if (pc.has_labels()) out << ' ' << pc.labels[i];
    out << '\n';
  }
}

inline PointCloud load_point_cloud(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("point cloud file: empty");
  std::istringstream hs(header);
  Eigen::Index n, d;
  if (!(hs >> n >> d) || n < 1 || d < 1)
    throw std::runtime_error("point cloud file: bad header: " + header);
  PointCloud pc;
  pc.coords.resize(n, d);
  std::string line;
  bool labeled = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("point cloud file: truncated at row " + std::to_string(i));
    std::istringstream ls(line);
    for (Eigen::Index j = 0; j < d; ++j)
      if (!(ls >> pc.coords(i, j)))
        throw std::runtime_error("point cloud file: bad row " + std::to_string(i));
    long label;
    if (ls >> label) {
      if (i == 0) labeled = true;
      if (!labeled)
        throw std::runtime_error("point cloud file: inconsistent label column");
      pc.labels.push_back(static_cast<int>(label));
    } else if (labeled) {
      throw std::runtime_error("point cloud file: inconsistent label column");
    }
  }
  pc.validate();
  return pc;
}

namespace detail {
inline std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(std::string("idx file: truncated ") + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}
}  // namespace detail

// IDX3 image file (big-endian dims, unsigned byte pixels). Images are
// flattened to rows x cols dimensional float vectors scaled into [0, 1].
inline Eigen::MatrixXd load_idx_images(std::istream& in, std::size_t max_items = 0) {
  const std::uint32_t magic = detail::read_be32(in, "magic");
  if (magic != 0x00000803)
    throw std::runtime_error("idx image file: bad magic " + std::to_string(magic));
  std::uint32_t n = detail::read_be32(in, "count");
  const std::uint32_t rows = detail::read_be32(in, "rows");
  const std::uint32_t cols = detail::read_be32(in, "cols");
  if (max_items && max_items < n) n = static_cast<std::uint32_t>(max_items);
  const std::size_t pix = std::size_t(rows) * cols;
  Eigen::MatrixXd out(n, pix);
  std::vector<unsigned char> buf(pix);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), pix))
      throw std::runtime_error("idx image file: truncated at item " + std::to_string(i));
    for (std::size_t p = 0; p < pix; ++p) out(i, p) = buf[p] / 255.0;
  }
  return out;
}

// IDX1 label file.
inline std::vector<int> load_idx_labels(std::istream& in, std::size_t max_items = 0) {
  const std::uint32_t magic = detail::read_be32(in, "magic");
  if (magic != 0x00000801)
    throw std::runtime_error("idx label file: bad magic " + std::to_string(magic));
  std::uint32_t n = detail::read_be32(in, "count");
  if (max_items && max_items < n) n = static_cast<std::uint32_t>(max_items);
  std::vector<unsigned char> buf(n);
  if (!in.read(reinterpret_cast<char*>(buf.data()), n))
    throw std::runtime_error("idx label file: truncated");
  return std::vector<int>(buf.begin(), buf.end());
}

inline PointCloud load_idx_point_cloud(const std::string& images_path,
                                       const std::string& labels_path,
                                       std::size_t max_items = 0) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open " + labels_path);
  PointCloud pc;
  pc.coords = load_idx_images(img, max_items);
  pc.labels = load_idx_labels(lab, max_items);
  if (static_cast<Eigen::Index>(pc.labels.size()) != pc.coords.rows())
    throw std::runtime_error("idx files: image/label count mismatch");
  pc.validate();
  return pc;
}

}  // namespace membed
