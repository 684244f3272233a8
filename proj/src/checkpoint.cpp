#include "canto/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace canto {

namespace {

constexpr char kMagic[4] = {'C', 'U', 'M', 'T'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  std::uint32_t len = read_u32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace

const Eigen::MatrixXd* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return &m;
  return nullptr;
}

const std::string& Checkpoint::manifest_at(const std::string& key) const {
  auto it = manifest.find(key);
  if (it == manifest.end())
    throw std::runtime_error("checkpoint: missing manifest key " + key);
  return it->second;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path.string());
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(manifest.size()));
  for (const auto& [k, v] : manifest) {
    write_string(os, k);
    write_string(os, v);
  }
  write_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    write_string(os, name);
    write_u32(os, static_cast<std::uint32_t>(m.rows()));
    write_u32(os, static_cast<std::uint32_t>(m.cols()));
    // Row-major on disk, fixed layout regardless of Eigen's default.
    for (long i = 0; i < m.rows(); ++i)
      for (long j = 0; j < m.cols(); ++j) {
        double v = m(i, j);
        os.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  Checkpoint ck;
  std::uint32_t n_manifest = read_u32(is);
  for (std::uint32_t i = 0; i < n_manifest; ++i) {
    std::string k = read_string(is);
    ck.manifest[k] = read_string(is);
  }
  std::uint32_t n_tensors = read_u32(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = read_string(is);
    std::uint32_t rows = read_u32(is);
    std::uint32_t cols = read_u32(is);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) {
        double v;
        is.read(reinterpret_cast<char*>(&v), sizeof(double));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor " + name);
        m(r, c) = v;
      }
    ck.tensors.push_back({std::move(name), std::move(m)});
  }
  return ck;
}

}  // namespace canto
