#include "fdtk/extractor.hpp"

#include <cmath>

#include <json.hpp>

#include "fdtk/rng.hpp"

namespace fdtk {

std::string kind_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::RawDownsample: return "raw-downsample";
    case ExtractorKind::RandomProjection: return "random-projection";
    case ExtractorKind::External: return "external";
  }
  throw RangeError("unknown extractor kind");
}

ExtractorKind parse_extractor_kind(const std::string& name) {
  if (name == "raw-downsample") return ExtractorKind::RawDownsample;
  if (name == "random-projection") return ExtractorKind::RandomProjection;
  if (name == "external") return ExtractorKind::External;
  throw FormatError("unknown extractor kind '" + name + "'");
}

Eigen::VectorXd pool_grayscale(const RasterImage& image, int side) {
  validate(image);
  if (side < 1) throw RangeError("pooling side must be positive");

  Eigen::VectorXd out(static_cast<Eigen::Index>(side) * side);
  const int w = image.width, h = image.height, ch = image.channels;
  for (int cy = 0; cy < side; ++cy) {
    int y0 = static_cast<int>(static_cast<std::int64_t>(cy) * h / side);
    int y1 = static_cast<int>(static_cast<std::int64_t>(cy + 1) * h / side);
    y0 = std::min(y0, h - 1);
    if (y1 <= y0) y1 = y0 + 1;
    for (int cx = 0; cx < side; ++cx) {
      int x0 = static_cast<int>(static_cast<std::int64_t>(cx) * w / side);
      int x1 = static_cast<int>(static_cast<std::int64_t>(cx + 1) * w / side);
      x0 = std::min(x0, w - 1);
      if (x1 <= x0) x1 = x0 + 1;
      double sum = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          if (ch == 1) {
            sum += image.at(x, y, 0);
          } else {
            sum += (static_cast<double>(image.at(x, y, 0)) + image.at(x, y, 1) +
                    image.at(x, y, 2)) /
                   3.0;
          }
        }
      const double area = static_cast<double>(y1 - y0) * (x1 - x0);
      out[static_cast<Eigen::Index>(cy) * side + cx] = sum / area / 255.0;
    }
  }
  return out;
}

FeatureExtractor FeatureExtractor::raw_downsample(std::string id, int side) {
  if (side < 1) throw RangeError("side must be positive");
  FeatureExtractor ex(std::move(id), ExtractorKind::RawDownsample, side * side);
  ex.side_ = side;
  return ex;
}

FeatureExtractor FeatureExtractor::random_projection(std::string id, RandomProjectionSpec spec) {
  if (spec.widths.size() < 2)
    throw RangeError("random projection needs at least an input and an output width");
  for (int w : spec.widths)
    if (w < 1) throw RangeError("layer widths must be positive");
  if (spec.widths.front() != spec.side * spec.side)
    throw ShapeError("first width " + std::to_string(spec.widths.front()) +
                     " must equal side^2 = " + std::to_string(spec.side * spec.side));

  FeatureExtractor ex(std::move(id), ExtractorKind::RandomProjection, spec.widths.back());
  ex.side_ = spec.side;
  ex.proj_ = spec;

  SplitMix64 rng(spec.seed);
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const int fan_in = spec.widths[l];
    const int fan_out = spec.widths[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = a * (2.0 * rng.unit() - 1.0);
    ex.layers_.push_back(std::move(w));
  }
  return ex;
}

FeatureExtractor FeatureExtractor::external(std::string id, int dim) {
  if (dim < 1) throw RangeError("dim must be positive");
  return FeatureExtractor(std::move(id), ExtractorKind::External, dim);
}

Eigen::VectorXd FeatureExtractor::extract(const RasterImage& image) const {
  switch (kind_) {
    case ExtractorKind::RawDownsample:
      return pool_grayscale(image, side_);
    case ExtractorKind::RandomProjection: {
      Eigen::VectorXd v = pool_grayscale(image, side_);
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        v = layers_[l] * v;
        if (l + 1 < layers_.size()) v = v.cwiseMax(0.0);
      }
      return v;
    }
    case ExtractorKind::External:
      throw UnsupportedError("extractor '" + id_ +
                             "' is external; load its embeddings from file instead");
  }
  throw RangeError("unknown extractor kind");
}

EmbeddingSet FeatureExtractor::extract_set(const DatasetManifest& manifest,
                                           const std::filesystem::path& base_dir) const {
  if (manifest.entries.empty()) throw RangeError("manifest is empty");

  EmbeddingSet set;
  set.source_id = manifest.name;
  set.extractor_id = id_;
  set.data.resize(static_cast<Eigen::Index>(manifest.size()), dim_);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    std::filesystem::path p(manifest.entries[i].path);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    try {
      set.data.row(static_cast<Eigen::Index>(i)) = extract(load_image(p)).transpose();
    } catch (const Error& e) {
      throw DataError("extraction aborted at '" + manifest.entries[i].path + "': " + e.what());
    }
  }
  return set;
}

FeatureExtractor FeatureExtractor::from_json(const nlohmann::json& config) {
  if (!config.is_object()) throw FormatError("extractor config must be a JSON object");
  if (!config.contains("id") || !config.contains("kind"))
    throw FormatError("extractor config needs 'id' and 'kind'");
  const std::string id = config.at("id").get<std::string>();
  const ExtractorKind kind = parse_extractor_kind(config.at("kind").get<std::string>());

  switch (kind) {
    case ExtractorKind::RawDownsample: {
      int side = config.value("side", 0);
      if (side == 0 && config.contains("dim")) {
        const int dim = config.at("dim").get<int>();
        side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
        if (side * side != dim)
          throw FormatError("raw-downsample dim " + std::to_string(dim) +
                            " is not a perfect square; give 'side' explicitly");
      }
      if (side == 0) side = 32;
      auto ex = raw_downsample(id, side);
      if (config.contains("dim") && config.at("dim").get<int>() != ex.dim())
        throw FormatError("dim does not match side^2");
      return ex;
    }
    case ExtractorKind::RandomProjection: {
      RandomProjectionSpec spec;
      spec.seed = config.value("seed", std::uint64_t{0});
      spec.side = config.value("side", 32);
      if (config.contains("widths")) {
        spec.widths = config.at("widths").get<std::vector<int>>();
      } else {
        const int dim = config.value("dim", 2048);
        spec.widths = {spec.side * spec.side, 2 * dim, dim};
      }
      if (config.contains("dim") && config.at("dim").get<int>() != spec.widths.back())
        throw FormatError("dim does not match last width");
      return random_projection(id, spec);
    }
    case ExtractorKind::External:
      if (!config.contains("dim")) throw FormatError("external extractor needs 'dim'");
      return external(id, config.at("dim").get<int>());
  }
  throw FormatError("unknown extractor kind");
}

nlohmann::json FeatureExtractor::to_json() const {
  nlohmann::json j{{"id", id_}, {"kind", kind_name(kind_)}, {"dim", dim_}};
  if (kind_ == ExtractorKind::RawDownsample) j["side"] = side_;
  if (kind_ == ExtractorKind::RandomProjection) {
    j["seed"] = proj_.seed;
    j["side"] = proj_.side;
    j["widths"] = proj_.widths;
  }
  return j;
}

}  // namespace fdtk
