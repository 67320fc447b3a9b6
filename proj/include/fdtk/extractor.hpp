#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdtk/embedding.hpp"
#include "fdtk/image.hpp"
#include "fdtk/manifest.hpp"

namespace fdtk {

enum class ExtractorKind { RawDownsample, RandomProjection, External };

std::string kind_name(ExtractorKind kind);
ExtractorKind parse_extractor_kind(const std::string& name);

// Seeded linear stack applied to a pooled grayscale input. `widths` is the
// full chain [side*side, hidden..., D]; weights for layer l are uniform in
// [-a, a) with a = sqrt(6 / (fan_in + fan_out)), drawn row-major layer by
// layer from one SplitMix64 stream, no bias terms. Ramp nonlinearity on every
// layer but the last.
struct RandomProjectionSpec {
  std::uint64_t seed = 0;
  int side = 32;
  std::vector<int> widths = {1024, 4096, 2048};
};

// Immutable feature map f: image -> R^D. External extractors only label
// precomputed embeddings and cannot be invoked on images.
class FeatureExtractor {
 public:
  // Mean-pool to side x side grayscale cells, flatten row-major, scale to
  // [0,1]; D = side^2.
  static FeatureExtractor raw_downsample(std::string id, int side = 32);
  static FeatureExtractor random_projection(std::string id, RandomProjectionSpec spec);
  static FeatureExtractor external(std::string id, int dim);

  Eigen::VectorXd extract(const RasterImage& image) const;

  // Row i of the result is the embedding of manifest entry i. Relative entry
  // paths resolve against base_dir.
  EmbeddingSet extract_set(const DatasetManifest& manifest,
                           const std::filesystem::path& base_dir = {}) const;

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  ExtractorKind kind() const { return kind_; }

  // Config block {id, kind, dim, seed?, side?, widths?}.
  static FeatureExtractor from_json(const nlohmann::json& config);
  nlohmann::json to_json() const;

 private:
  FeatureExtractor(std::string id, ExtractorKind kind, int dim)
      : id_(std::move(id)), kind_(kind), dim_(dim) {}

  std::string id_;
  ExtractorKind kind_;
  int dim_;
  int side_ = 0;
  RandomProjectionSpec proj_;
  std::vector<Eigen::MatrixXd> layers_;  // random-projection weights, built eagerly
};

// Grayscale mean-pool to side x side in [0,1], row-major; shared by both
// built-in extractors. RGB collapses to the channel mean before pooling.
Eigen::VectorXd pool_grayscale(const RasterImage& image, int side);

}  // namespace fdtk
