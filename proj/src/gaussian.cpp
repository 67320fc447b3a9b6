#include "fdtk/gaussian.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fdtk {

GaussianStats fit_gaussian(const EmbeddingSet& set) {
  if (set.data.rows() < 2)
    throw RangeError("fit_gaussian needs at least 2 samples, got " +
                     std::to_string(set.data.rows()));
  validate(set);

  GaussianStats stats;
  stats.count = set.data.rows();
  stats.mean = column_mean(set.data);
  stats.cov = sample_covariance(set.data);
  return stats;
}

Eigen::MatrixXd sym_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& m, int* clamped) {
  detail::require_symmetric(m, "matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw DataError("eigendecomposition failed");

  int clamps = 0;
  Eigen::VectorXd roots = es.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    if (roots[i] < 0.0) {
      roots[i] = 0.0;
      ++clamps;
    } else {
      roots[i] = std::sqrt(roots[i]);
    }
  }
  if (clamped) *clamped = clamps;

  Eigen::MatrixXd half = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
  // The triple product is symmetric only up to rounding; restore it exactly.
  return ((half + half.transpose()) * 0.5).eval();
}

SqrtTraceResult sym_sqrt_trace(const Eigen::Ref<const Eigen::MatrixXd>& s1,
                               const Eigen::Ref<const Eigen::MatrixXd>& s2) {
  detail::require_symmetric(s1, "covariance 1");
  detail::require_symmetric(s2, "covariance 2");
  if (s1.rows() != s2.rows())
    throw ShapeError("covariance dimensions differ: " + std::to_string(s1.rows()) + " vs " +
                     std::to_string(s2.rows()));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s1);
  if (es.info() != Eigen::Success) throw DataError("eigendecomposition of covariance 1 failed");

  SqrtTraceResult result;
  Eigen::VectorXd roots = es.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    if (roots[i] < 0.0) {
      roots[i] = 0.0;
      ++result.clamped;
    } else {
      roots[i] = std::sqrt(roots[i]);
    }
  }

  // B = L^{1/2} V^T S2 V L^{1/2}, congruent to S1^{1/2} S2 S1^{1/2}.
  Eigen::MatrixXd t = s2 * es.eigenvectors();
  Eigen::MatrixXd b = es.eigenvectors().transpose() * t;
  b = roots.asDiagonal() * b * roots.asDiagonal();
  b = ((b + b.transpose()) * 0.5).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(b, Eigen::EigenvaluesOnly);
  if (ev.info() != Eigen::Success) throw DataError("eigendecomposition of product failed");

  double trace = 0.0;
  for (Eigen::Index i = 0; i < ev.eigenvalues().size(); ++i) {
    const double lambda = ev.eigenvalues()[i];
    if (lambda < 0.0) {
      ++result.clamped;
    } else {
      trace += std::sqrt(lambda);
    }
  }
  result.trace = trace;
  return result;
}

FrechetResult frechet_distance(const GaussianStats& g1, const GaussianStats& g2) {
  if (g1.dim() != g2.dim())
    throw ShapeError("dimension mismatch: " + std::to_string(g1.dim()) + " vs " +
                     std::to_string(g2.dim()));
  if (g1.cov.rows() != g1.dim() || g2.cov.rows() != g2.dim())
    throw ShapeError("mean/covariance dimensions disagree");

  FrechetResult result;
  result.mean_term = (g1.mean - g2.mean).squaredNorm();

  const SqrtTraceResult st = sym_sqrt_trace(g1.cov, g2.cov);
  result.clamped_eigs = st.clamped;
  result.trace_term = g1.cov.trace() + g2.cov.trace() - 2.0 * st.trace;

  result.value = result.mean_term + result.trace_term;
  if (result.value < 0.0) {
    if (result.value <= -1e-6)
      throw DataError("Frechet distance " + std::to_string(result.value) +
                      " is negative beyond tolerance; inputs are not valid covariances");
    result.value = 0.0;
    result.value_clamped = true;
  }
  return result;
}

namespace {

constexpr char kStatsMagic[8] = {'F', 'D', 'T', 'K', 'G', 'S', '0', '1'};

template <typename T>
void write_le(std::ofstream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in, const std::string& path) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw FormatError(path + ": truncated stats container");
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return v;
}

}  // namespace

void save_stats(const GaussianStats& stats, const std::filesystem::path& path) {
  if (stats.cov.rows() != stats.dim() || stats.cov.cols() != stats.dim())
    throw ShapeError("mean/covariance dimensions disagree");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  out.write(kStatsMagic, sizeof(kStatsMagic));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(stats.dim()));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(stats.count));
  for (Eigen::Index i = 0; i < stats.dim(); ++i) write_le<double>(out, stats.mean[i]);
  for (Eigen::Index r = 0; r < stats.dim(); ++r)
    for (Eigen::Index c = 0; c < stats.dim(); ++c) write_le<double>(out, stats.cov(r, c));
  if (!out) throw IoError("write failed for " + path.string());
}

GaussianStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kStatsMagic, sizeof(magic)) != 0)
    throw FormatError(path.string() + ": not a stats container");

  const auto d = read_le<std::uint64_t>(in, path.string());
  const auto n = read_le<std::uint64_t>(in, path.string());
  if (d < 1 || d > (1ULL << 20))
    throw ShapeError(path.string() + ": implausible dimension " + std::to_string(d));
  if (n < 2)
    throw DataError(path.string() + ": sample count " + std::to_string(n) +
                    " below the covariance minimum of 2");

  GaussianStats stats;
  stats.count = static_cast<std::int64_t>(n);
  stats.mean.resize(static_cast<Eigen::Index>(d));
  stats.cov.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i)
    stats.mean[i] = read_le<double>(in, path.string());
  for (Eigen::Index r = 0; r < stats.cov.rows(); ++r)
    for (Eigen::Index c = 0; c < stats.cov.cols(); ++c)
      stats.cov(r, c) = read_le<double>(in, path.string());

  if (!stats.mean.allFinite() || !stats.cov.allFinite())
    throw DataError(path.string() + ": non-finite statistics");
  detail::require_symmetric(stats.cov, "stored covariance");
  return stats;
}

bool is_stats_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  if (!in.read(magic, sizeof(magic))) return false;
  return std::memcmp(magic, kStatsMagic, sizeof(magic)) == 0;
}

}  // namespace fdtk
