#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdtk/embedding.hpp"

namespace fdtk {

enum class Metric { Euclidean, Cosine };

std::string metric_name(Metric metric);
Metric parse_metric(const std::string& name);

struct NeighborResult {
  Eigen::Index reference = -1;  // pool row of the query, -1 for free vectors
  std::vector<Eigen::Index> indices;
  std::vector<double> distances;  // nondecreasing
};

// Exact top-k under the metric, ties broken toward the lower row index.
// Cosine distance is 1 - cosine similarity; an all-zero vector counts as
// similarity 0.
NeighborResult nearest_neighbors(const EmbeddingSet& pool,
                                 const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k,
                                 Metric metric = Metric::Euclidean);

// Query by pool row; the reference row itself is excluded from candidates.
NeighborResult nearest_neighbors(const EmbeddingSet& pool, Eigen::Index query_index,
                                 std::size_t k, Metric metric = Metric::Euclidean);

// Sample Pearson correlation; needs length >= 3 and nonzero variance on each side.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson of average ranks (ties share the mean of their rank range).
double spearman(std::span<const double> x, std::span<const double> y);

// 1-based average ranks used by spearman.
std::vector<double> average_ranks(std::span<const double> values);

// (mean, population standard deviation).
std::pair<double, double> aggregate_ratings(std::span<const double> samples);

enum class Vote : std::uint8_t { A, B };

// Percentages (A, B) summing to exactly 100.
std::pair<double, double> vote_shares(std::span<const Vote> votes);

// Survey-style table: label column first, then named numeric columns.
struct RatingTable {
  std::vector<std::string> columns;  // numeric column names (header minus the label column)
  std::vector<std::string> labels;
  Eigen::MatrixXd values;  // rows x columns

  std::vector<double> column(const std::string& name) const;
};

RatingTable load_rating_table(const std::filesystem::path& path);

}  // namespace fdtk
