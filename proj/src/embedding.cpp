#include "fdtk/embedding.hpp"

namespace fdtk {

void validate(const EmbeddingSet& set) {
  if (set.data.rows() < 1 || set.data.cols() < 1)
    throw ShapeError("embedding set must be at least 1x1, got " +
                     std::to_string(set.data.rows()) + "x" + std::to_string(set.data.cols()));
  for (Eigen::Index i = 0; i < set.data.rows(); ++i) {
    if (!set.data.row(i).allFinite())
      throw DataError("non-finite embedding value in row " + std::to_string(i));
  }
}

EmbeddingSet subsample_rows(const EmbeddingSet& set, std::span<const std::size_t> rows) {
  EmbeddingSet out;
  out.source_id = set.source_id;
  out.extractor_id = set.extractor_id;
  out.data.resize(static_cast<Eigen::Index>(rows.size()), set.data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(set.data.rows()))
      throw RangeError("row index " + std::to_string(rows[i]) + " out of range");
    out.data.row(static_cast<Eigen::Index>(i)) = set.data.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace fdtk
