#include "fdtk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace fdtk {

std::string metric_name(Metric metric) {
  return metric == Metric::Euclidean ? "euclidean" : "cosine";
}

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "cosine") return Metric::Cosine;
  throw FormatError("unknown metric '" + name + "'");
}

namespace {

double pair_distance(const Eigen::Ref<const Eigen::VectorXd>& query,
                     const Eigen::MatrixXd& data, Eigen::Index row, Metric metric,
                     double query_norm) {
  if (metric == Metric::Euclidean) return (data.row(row).transpose() - query).norm();
  const double row_norm = data.row(row).norm();
  if (query_norm == 0.0 || row_norm == 0.0) return 1.0;
  return 1.0 - data.row(row).dot(query) / (row_norm * query_norm);
}

NeighborResult top_k(const EmbeddingSet& pool, const Eigen::Ref<const Eigen::VectorXd>& query,
                     std::size_t k, Metric metric, Eigen::Index exclude) {
  validate(pool);
  if (query.size() != pool.dim())
    throw ShapeError("query dimension " + std::to_string(query.size()) + " does not match pool " +
                     std::to_string(pool.dim()));
  const auto limit =
      static_cast<std::size_t>(pool.count()) - (exclude >= 0 ? std::size_t{1} : std::size_t{0});
  if (k < 1 || k > limit)
    throw RangeError("k = " + std::to_string(k) + " out of range [1, " + std::to_string(limit) +
                     "]");

  using Entry = std::pair<double, Eigen::Index>;
  auto better = [](const Entry& a, const Entry& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  };

  // Bounded max-heap on (distance, index); the root is the current worst keeper.
  const double query_norm = query.norm();
  std::vector<Entry> heap;
  heap.reserve(k);
  for (Eigen::Index i = 0; i < pool.count(); ++i) {
    if (i == exclude) continue;
    const Entry entry{pair_distance(query, pool.data, i, metric, query_norm), i};
    if (heap.size() < k) {
      heap.push_back(entry);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(entry, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = entry;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), better);

  NeighborResult result;
  result.reference = exclude;
  result.indices.reserve(k);
  result.distances.reserve(k);
  for (const auto& [d, i] : heap) {
    result.indices.push_back(i);
    result.distances.push_back(d);
  }
  return result;
}

}  // namespace

NeighborResult nearest_neighbors(const EmbeddingSet& pool,
                                 const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k,
                                 Metric metric) {
  return top_k(pool, query, k, metric, -1);
}

NeighborResult nearest_neighbors(const EmbeddingSet& pool, Eigen::Index query_index,
                                 std::size_t k, Metric metric) {
  if (query_index < 0 || query_index >= pool.count())
    throw RangeError("query index " + std::to_string(query_index) + " out of range");
  const Eigen::VectorXd query = pool.data.row(query_index).transpose();
  return top_k(pool, query, k, metric, query_index);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw RangeError("length mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  if (x.size() < 3) throw RangeError("correlation needs at least 3 observations");

  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw DataError("non-finite value at index " + std::to_string(i));
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }

  // Constant input leaves only rounding residue in the centered sums.
  const double eps = std::numeric_limits<double>::epsilon();
  const double tol_x = n * std::pow(16 * eps * std::max(1.0, std::abs(mx)), 2);
  const double tol_y = n * std::pow(16 * eps * std::max(1.0, std::abs(my)), 2);
  if (sxx <= tol_x || syy <= tol_y) throw DataError("zero variance input");

  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw RangeError("length mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::pair<double, double> aggregate_ratings(std::span<const double> samples) {
  if (samples.empty()) throw RangeError("cannot aggregate an empty sample");
  double mean = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw DataError("non-finite rating");
    mean += v;
  }
  mean /= static_cast<double>(samples.size());
  double sq = 0.0;
  for (double v : samples) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(samples.size()))};
}

std::pair<double, double> vote_shares(std::span<const Vote> votes) {
  if (votes.empty()) throw RangeError("cannot tally an empty vote list");
  std::size_t a = 0;
  for (Vote v : votes)
    if (v == Vote::A) ++a;
  const double share_a = 100.0 * static_cast<double>(a) / static_cast<double>(votes.size());
  return {share_a, 100.0 - share_a};
}

std::vector<double> RatingTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == name) {
      std::vector<double> out(static_cast<std::size_t>(values.rows()));
      for (Eigen::Index r = 0; r < values.rows(); ++r)
        out[static_cast<std::size_t>(r)] = values(r, static_cast<Eigen::Index>(c));
      return out;
    }
  }
  throw RangeError("no column named '" + name + "'");
}

RatingTable load_rating_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty table");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  RatingTable table;
  {
    std::stringstream ss(line);
    std::string field;
    bool first = true;
    while (std::getline(ss, field, ',')) {
      if (first) first = false;
      else table.columns.push_back(field);
    }
  }
  if (table.columns.empty())
    throw FormatError(path.string() + ": table needs a label column plus numeric columns");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    table.labels.push_back(field);
    std::vector<double> row;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad number '" +
                          field + "'");
      }
      if (!std::isfinite(row.back()))
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
    }
    if (row.size() != table.columns.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(table.columns.size()) + " values, got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

}  // namespace fdtk
