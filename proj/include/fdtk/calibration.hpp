#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fdtk/embedding.hpp"
#include "fdtk/gaussian.hpp"

namespace fdtk {

// Per-extractor rescaling constant: the mean Frechet distance between seeded
// subsamples of a fixed reference pair, plus its spread over seeds.
struct ScalingFactor {
  std::string extractor_id;
  double factor = 0.0;  // mean over seeds
  double spread = 0.0;  // population standard deviation over seeds
  std::vector<std::uint64_t> seeds;
  std::size_t sample_size = 0;
  std::pair<std::string, std::string> reference_pair;
  std::vector<double> per_seed;  // raw per-seed distances, same order as seeds
};

// For each seed: draw k rows without replacement from each side (one
// SplitMix64 stream per seed, side A sampled first) and measure the Frechet
// distance between the subsample Gaussians. factor is the mean over seeds,
// spread the population standard deviation.
ScalingFactor calibrate(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t k,
                        std::span<const std::uint64_t> seeds);

// raw.value / s.factor; the factor must be positive.
double rescale(const FrechetResult& raw, const ScalingFactor& s);

nlohmann::json to_json(const ScalingFactor& s);
ScalingFactor scaling_from_json(const nlohmann::json& j);
void save_scaling(const ScalingFactor& s, const std::filesystem::path& path);
ScalingFactor load_scaling(const std::filesystem::path& path);

}  // namespace fdtk
