#pragma once

#include <unistd.h>

#include <Eigen/Dense>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "fdtk/embedding.hpp"
#include "fdtk/image.hpp"
#include "fdtk/rng.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fdtk-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     fdtk::SplitMix64& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * (2.0 * rng.unit() - 1.0);
  return m;
}

// Symmetric positive definite by construction: A A^T + d I, exactly symmetrized.
inline Eigen::MatrixXd random_spd(Eigen::Index d, fdtk::SplitMix64& rng, double ridge = 0.1) {
  Eigen::MatrixXd a = random_matrix(d, d, rng);
  Eigen::MatrixXd s = a * a.transpose() + ridge * Eigen::MatrixXd::Identity(d, d);
  return ((s + s.transpose()) * 0.5).eval();
}

inline fdtk::EmbeddingSet random_embeddings(Eigen::Index n, Eigen::Index d,
                                            fdtk::SplitMix64& rng, double scale = 1.0) {
  fdtk::EmbeddingSet set;
  set.data = random_matrix(n, d, rng, scale);
  set.source_id = "synthetic";
  set.extractor_id = "test";
  return set;
}

inline fdtk::RasterImage random_image(int width, int height, int channels,
                                      fdtk::SplitMix64& rng) {
  fdtk::RasterImage img = fdtk::RasterImage::filled(width, height, channels, 0);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.bounded(256));
  return img;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace testutil
