#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

#include "fdtk/errors.hpp"

namespace fdtk {

// One feature matrix: row i is the embedding of image i. All numerics run at
// 64-bit precision; 32-bit data is widened on input.
struct EmbeddingSet {
  Eigen::MatrixXd data;  // N x D
  std::string source_id;
  std::string extractor_id;

  Eigen::Index count() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

// Enforces N >= 1, D >= 1 and finiteness; names the first offending row.
void validate(const EmbeddingSet& set);

// Copies the given rows (in the order given) into a new set with the same labels.
EmbeddingSet subsample_rows(const EmbeddingSet& set, std::span<const std::size_t> rows);

}  // namespace fdtk
