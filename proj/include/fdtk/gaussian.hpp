#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <filesystem>

#include "fdtk/embedding.hpp"
#include "fdtk/errors.hpp"

namespace fdtk {

// Best-fit Gaussian of an embedding set: column means and the unbiased (N-1)
// covariance. Immutable once fitted; shareable across threads.
struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::int64_t count = 0;

  Eigen::Index dim() const { return mean.size(); }
};

struct SqrtTraceResult {
  double trace = 0.0;
  int clamped = 0;  // negative eigenvalues clamped to zero across the computation
};

struct FrechetResult {
  double value = 0.0;
  double mean_term = 0.0;   // ||mu1 - mu2||^2
  double trace_term = 0.0;  // tr(S1) + tr(S2) - 2 tr((S1 S2)^{1/2})
  int clamped_eigs = 0;
  bool value_clamped = false;  // set when a tiny negative total was clamped to 0
};

namespace detail {

// Max absolute asymmetry allowed, relative to max(1, largest coefficient).
inline constexpr double kSymmetryTol = 1e-12;

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (m.rows() != m.cols())
    throw ShapeError(std::string(what) + " must be square, got " + std::to_string(m.rows()) +
                     "x" + std::to_string(m.cols()));
  const double scale = std::max(1.0, m.template lpNorm<Eigen::Infinity>());
  const double asym = (m - m.transpose()).template lpNorm<Eigen::Infinity>();
  if (asym > kSymmetryTol * scale)
    throw DataError(std::string(what) + " is asymmetric beyond tolerance (max deviation " +
                    std::to_string(asym) + ")");
}

}  // namespace detail

// Column mean over rows of x.
template <typename Derived>
Eigen::VectorXd column_mean(const Eigen::MatrixBase<Derived>& x) {
  return x.colwise().mean().transpose();
}

// Unbiased sample covariance via the two-pass algorithm: center on the column
// means, then accumulate (Xc^T Xc)/(N-1) as a symmetric rank update.
template <typename Derived>
Eigen::MatrixXd sample_covariance(const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() < 2) throw RangeError("covariance needs at least 2 samples");
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd centered = x.derived().template cast<double>();
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(
      centered.transpose(), 1.0 / static_cast<double>(x.rows() - 1));
  cov.template triangularView<Eigen::StrictlyUpper>() =
      cov.transpose().template triangularView<Eigen::StrictlyUpper>();
  return cov;
}

GaussianStats fit_gaussian(const EmbeddingSet& set);

// Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0.
Eigen::MatrixXd sym_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& m, int* clamped = nullptr);

// tr((S1 S2)^{1/2}) for symmetric PSD S1, S2: the eigenvalues of
// S1^{1/2} S2 S1^{1/2} are computed through the congruent matrix
// L^{1/2} V^T S2 V L^{1/2} (S1 = V L V^T), which shares its spectrum and
// avoids forming S1^{1/2} explicitly. Negative eigenvalues are clamped to 0
// and counted, never silently regularized.
SqrtTraceResult sym_sqrt_trace(const Eigen::Ref<const Eigen::MatrixXd>& s1,
                               const Eigen::Ref<const Eigen::MatrixXd>& s2);

// F = ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}). Totals in (-1e-6, 0)
// are clamped to 0 and flagged; anything more negative is a data error.
FrechetResult frechet_distance(const GaussianStats& g1, const GaussianStats& g2);

// Stats cache container: magic "FDTKGS01", then little-endian u64 D, u64 N,
// D doubles mean, D*D doubles covariance (row-major).
void save_stats(const GaussianStats& stats, const std::filesystem::path& path);
GaussianStats load_stats(const std::filesystem::path& path);
bool is_stats_file(const std::filesystem::path& path);

}  // namespace fdtk
