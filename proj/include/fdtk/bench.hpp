#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdtk/calibration.hpp"
#include "fdtk/embedding.hpp"
#include "fdtk/extractor.hpp"
#include "fdtk/gaussian.hpp"
#include "fdtk/manifest.hpp"
#include "fdtk/perturb.hpp"

namespace fdtk {

// Where an embedding set comes from: either a precomputed .npy file, or a
// manifest whose images are (optionally) subsampled, perturbed, then run
// through an extractor.
struct SourceSpec {
  std::filesystem::path embeddings;  // set for the precomputed route

  std::filesystem::path manifest;  // set for the manifest route
  std::optional<PerturbationSpec> perturbation;
  std::optional<nlohmann::json> extractor;  // extractor config block

  struct Sample {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::optional<std::string> stratify;
  };
  std::optional<Sample> sample;

  bool is_precomputed() const { return !embeddings.empty(); }
};

struct CandidateSpec {
  std::string label;
  SourceSpec source;
};

struct BenchmarkConfig {
  SourceSpec reference;
  std::vector<CandidateSpec> candidates;
  std::optional<std::filesystem::path> scaling_path;
  std::optional<ScalingFactor> scaling;  // parsed or inline
  std::filesystem::path output;
  int workers = 1;
};

struct BenchmarkRow {
  std::string label;
  double raw = 0.0;
  double rescaled = 0.0;
  int clamped_eigs = 0;
};

BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j);
BenchmarkConfig load_benchmark_config(const std::filesystem::path& path);

// Materializes a source; relative paths resolve against base_dir.
EmbeddingSet resolve_source(const SourceSpec& source, const std::filesystem::path& base_dir);

// One row per candidate, in config order. The reference Gaussian is fitted
// once; candidates are measured concurrently up to config.workers with all
// randomness coming from per-candidate seeds. Every source is checked before
// any compute starts and a DataError lists all problems at once. Without a
// scaling factor, rescaled equals raw.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config,
                                        const std::filesystem::path& base_dir = {});

struct TrackPoint {
  int step = 0;
  std::string label;
  double raw = 0.0;
  double rescaled = 0.0;
};

// Distance of each checkpoint to the reference, in order; step is the
// checkpoint position.
std::vector<TrackPoint> track_checkpoints(const SourceSpec& reference,
                                          const std::vector<SourceSpec>& checkpoints,
                                          const std::optional<ScalingFactor>& scaling,
                                          const std::filesystem::path& base_dir = {});

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         const std::filesystem::path& path);
void write_track_csv(const std::vector<TrackPoint>& points, const std::filesystem::path& path);

// Sidecar carrying the full config echo, seeds, and tool version, so every
// report is regenerable. No timestamps: reruns must be byte-identical.
void write_report_sidecar(const nlohmann::json& config_echo, const std::filesystem::path& path);

nlohmann::json source_to_json(const SourceSpec& source);
SourceSpec source_from_json(const nlohmann::json& j);

}  // namespace fdtk
