#include "fdtk/calibration.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fdtk/rng.hpp"

namespace fdtk {

ScalingFactor calibrate(const EmbeddingSet& a, const EmbeddingSet& b, std::size_t k,
                        std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw RangeError("calibrate needs at least one seed");
  if (k < 2) throw RangeError("calibrate needs k >= 2 for covariance estimation");
  const auto na = static_cast<std::size_t>(a.count());
  const auto nb = static_cast<std::size_t>(b.count());
  if (k > na || k > nb)
    throw RangeError("k = " + std::to_string(k) + " exceeds set sizes " + std::to_string(na) +
                     "/" + std::to_string(nb));
  if (a.dim() != b.dim())
    throw ShapeError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()));

  ScalingFactor s;
  s.extractor_id = a.extractor_id;
  s.sample_size = k;
  s.reference_pair = {a.source_id, b.source_id};
  s.seeds.assign(seeds.begin(), seeds.end());

  for (const auto seed : seeds) {
    SplitMix64 rng(seed);
    const auto rows_a = sample_without_replacement(na, k, rng);
    const auto rows_b = sample_without_replacement(nb, k, rng);
    const GaussianStats ga = fit_gaussian(subsample_rows(a, rows_a));
    const GaussianStats gb = fit_gaussian(subsample_rows(b, rows_b));
    s.per_seed.push_back(frechet_distance(ga, gb).value);
  }

  double sum = 0.0;
  for (double v : s.per_seed) sum += v;
  s.factor = sum / static_cast<double>(s.per_seed.size());
  double sq = 0.0;
  for (double v : s.per_seed) sq += (v - s.factor) * (v - s.factor);
  s.spread = std::sqrt(sq / static_cast<double>(s.per_seed.size()));
  return s;
}

double rescale(const FrechetResult& raw, const ScalingFactor& s) {
  if (!(s.factor > 0.0))
    throw RangeError("scaling factor must be positive, got " + std::to_string(s.factor));
  return raw.value / s.factor;
}

nlohmann::json to_json(const ScalingFactor& s) {
  return nlohmann::json{
      {"extractor_id", s.extractor_id},
      {"factor", s.factor},
      {"spread", s.spread},
      {"seeds", s.seeds},
      {"sample_size", s.sample_size},
      {"reference_pair", {s.reference_pair.first, s.reference_pair.second}},
      {"per_seed", s.per_seed},
  };
}

ScalingFactor scaling_from_json(const nlohmann::json& j) {
  try {
    ScalingFactor s;
    s.extractor_id = j.value("extractor_id", std::string{});
    s.factor = j.at("factor").get<double>();
    s.spread = j.value("spread", 0.0);
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.sample_size = j.value("sample_size", std::size_t{0});
    if (j.contains("reference_pair")) {
      const auto& p = j.at("reference_pair");
      s.reference_pair = {p.at(0).get<std::string>(), p.at(1).get<std::string>()};
    }
    if (j.contains("per_seed")) s.per_seed = j.at("per_seed").get<std::vector<double>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad scaling factor JSON: ") + e.what());
  }
}

void save_scaling(const ScalingFactor& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(s).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ScalingFactor load_scaling(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return scaling_from_json(j);
}

}  // namespace fdtk
