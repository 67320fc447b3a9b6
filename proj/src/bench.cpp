#include "fdtk/bench.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "fdtk/npy.hpp"
#include "fdtk/version.hpp"

namespace fdtk {
namespace {

PerturbationSpec perturbation_from_json(const nlohmann::json& j) {
  PerturbationSpec spec;
  spec.kind = parse_perturbation_kind(j.at("kind").get<std::string>());
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.swirl_strength = j.value("strength", spec.swirl_strength);
  spec.swirl_radius = j.value("radius", spec.swirl_radius);
  spec.erase_patches = j.value("patches", spec.erase_patches);
  spec.erase_patch_size = j.value("patch_size", spec.erase_patch_size);
  spec.noise_pixels = j.value("pixels", spec.noise_pixels);
  return spec;
}

nlohmann::json perturbation_to_json(const PerturbationSpec& spec) {
  return nlohmann::json{
      {"kind", kind_name(spec.kind)},         {"seed", spec.seed},
      {"strength", spec.swirl_strength},      {"radius", spec.swirl_radius},
      {"patches", spec.erase_patches},        {"patch_size", spec.erase_patch_size},
      {"pixels", spec.noise_pixels},
  };
}

std::filesystem::path resolve_path(const std::filesystem::path& p,
                                   const std::filesystem::path& base_dir) {
  if (p.is_relative() && !base_dir.empty()) return base_dir / p;
  return p;
}

// Fixed shortest-unambiguous formatting keeps reports byte-stable run to run.
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void collect_source_problems(const SourceSpec& source, const std::string& what,
                             const std::filesystem::path& base_dir,
                             std::vector<std::string>& problems) {
  if (source.is_precomputed()) {
    if (!source.manifest.empty())
      problems.push_back(what + ": give either 'embeddings' or 'manifest', not both");
    const auto p = resolve_path(source.embeddings, base_dir);
    if (!std::filesystem::exists(p)) problems.push_back(what + ": missing file " + p.string());
    return;
  }
  if (source.manifest.empty()) {
    problems.push_back(what + ": needs 'embeddings' or 'manifest'");
    return;
  }
  const auto p = resolve_path(source.manifest, base_dir);
  if (!std::filesystem::exists(p)) problems.push_back(what + ": missing manifest " + p.string());
  if (!source.extractor.has_value()) {
    problems.push_back(what + ": manifest route needs an 'extractor' block");
  } else {
    try {
      FeatureExtractor::from_json(*source.extractor);
    } catch (const Error& e) {
      problems.push_back(what + ": " + e.what());
    }
  }
}

}  // namespace

nlohmann::json source_to_json(const SourceSpec& source) {
  nlohmann::json j;
  if (source.is_precomputed()) {
    j["embeddings"] = source.embeddings.string();
    return j;
  }
  j["manifest"] = source.manifest.string();
  if (source.perturbation) j["perturbation"] = perturbation_to_json(*source.perturbation);
  if (source.extractor) j["extractor"] = *source.extractor;
  if (source.sample) {
    nlohmann::json s{{"k", source.sample->k}, {"seed", source.sample->seed}};
    if (source.sample->stratify) s["stratify"] = *source.sample->stratify;
    j["sample"] = s;
  }
  return j;
}

SourceSpec source_from_json(const nlohmann::json& j) {
  SourceSpec source;
  try {
    if (j.contains("embeddings")) source.embeddings = j.at("embeddings").get<std::string>();
    if (j.contains("manifest")) source.manifest = j.at("manifest").get<std::string>();
    if (j.contains("perturbation"))
      source.perturbation = perturbation_from_json(j.at("perturbation"));
    if (j.contains("extractor")) source.extractor = j.at("extractor");
    if (j.contains("sample")) {
      SourceSpec::Sample s;
      s.k = j.at("sample").at("k").get<std::size_t>();
      s.seed = j.at("sample").value("seed", std::uint64_t{0});
      if (j.at("sample").contains("stratify"))
        s.stratify = j.at("sample").at("stratify").get<std::string>();
      source.sample = s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad source spec: ") + e.what());
  }
  return source;
}

BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j) {
  BenchmarkConfig config;
  try {
    config.reference = source_from_json(j.at("reference"));
    for (const auto& c : j.at("candidates")) {
      CandidateSpec spec;
      spec.label = c.at("label").get<std::string>();
      spec.source = source_from_json(c);
      config.candidates.push_back(std::move(spec));
    }
    if (j.contains("scaling")) {
      if (j.at("scaling").is_string())
        config.scaling_path = j.at("scaling").get<std::string>();
      else
        config.scaling = scaling_from_json(j.at("scaling"));
    }
    if (j.contains("output")) config.output = j.at("output").get<std::string>();
    config.workers = j.value("workers", 1);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad benchmark config: ") + e.what());
  }
  return config;
}

BenchmarkConfig load_benchmark_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return benchmark_config_from_json(j);
}

EmbeddingSet resolve_source(const SourceSpec& source, const std::filesystem::path& base_dir) {
  if (source.is_precomputed()) return load_embeddings(resolve_path(source.embeddings, base_dir));

  if (source.manifest.empty()) throw FormatError("source needs 'embeddings' or 'manifest'");
  if (!source.extractor.has_value())
    throw FormatError("manifest route needs an 'extractor' block");

  const auto manifest_path = resolve_path(source.manifest, base_dir);
  DatasetManifest manifest = load_manifest(manifest_path);
  if (source.sample)
    manifest = sample_manifest(manifest, source.sample->k, source.sample->seed,
                               source.sample->stratify);

  const FeatureExtractor extractor = FeatureExtractor::from_json(*source.extractor);
  const auto image_base = manifest_path.parent_path();

  if (!source.perturbation) return extractor.extract_set(manifest, image_base);

  EmbeddingSet set;
  set.source_id = manifest.name + "+" + kind_name(source.perturbation->kind);
  set.extractor_id = extractor.id();
  set.data.resize(static_cast<Eigen::Index>(manifest.size()), extractor.dim());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    std::filesystem::path p(manifest.entries[i].path);
    if (p.is_relative()) p = image_base / p;
    try {
      const RasterImage img = apply(*source.perturbation, load_image(p));
      set.data.row(static_cast<Eigen::Index>(i)) = extractor.extract(img).transpose();
    } catch (const Error& e) {
      throw DataError("extraction aborted at '" + manifest.entries[i].path + "': " + e.what());
    }
  }
  return set;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config,
                                        const std::filesystem::path& base_dir) {
  // Fail fast: surface every unresolvable source and config defect together.
  std::vector<std::string> problems;
  collect_source_problems(config.reference, "reference", base_dir, problems);
  std::set<std::string> labels;
  for (const auto& candidate : config.candidates) {
    if (!labels.insert(candidate.label).second)
      problems.push_back("duplicate candidate label '" + candidate.label + "'");
    collect_source_problems(candidate.source, "candidate '" + candidate.label + "'", base_dir,
                            problems);
  }
  std::optional<ScalingFactor> scaling = config.scaling;
  if (config.scaling_path) {
    const auto p = resolve_path(*config.scaling_path, base_dir);
    if (!std::filesystem::exists(p)) {
      problems.push_back("missing scaling file " + p.string());
    } else {
      try {
        scaling = load_scaling(p);
      } catch (const Error& e) {
        problems.push_back(std::string("scaling: ") + e.what());
      }
    }
  }
  if (scaling && !(scaling->factor > 0.0))
    problems.push_back("scaling factor must be positive");
  if (config.candidates.empty()) problems.push_back("no candidates configured");
  if (!problems.empty()) {
    std::string joined = "benchmark config problems:";
    for (const auto& p : problems) joined += "\n  - " + p;
    throw DataError(joined);
  }

  const GaussianStats reference = fit_gaussian(resolve_source(config.reference, base_dir));

  std::vector<BenchmarkRow> rows(config.candidates.size());
  std::vector<std::exception_ptr> failures(config.candidates.size());
  std::atomic<std::size_t> cursor{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= config.candidates.size()) return;
      try {
        const EmbeddingSet set = resolve_source(config.candidates[i].source, base_dir);
        const FrechetResult r = frechet_distance(reference, fit_gaussian(set));
        rows[i] = {config.candidates[i].label, r.value, scaling ? rescale(r, *scaling) : r.value,
                   r.clamped_eigs};
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(config.workers,
                                                  static_cast<int>(config.candidates.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  return rows;
}

std::vector<TrackPoint> track_checkpoints(const SourceSpec& reference,
                                          const std::vector<SourceSpec>& checkpoints,
                                          const std::optional<ScalingFactor>& scaling,
                                          const std::filesystem::path& base_dir) {
  if (checkpoints.empty()) throw RangeError("track needs at least one checkpoint");
  if (scaling && !(scaling->factor > 0.0))
    throw RangeError("scaling factor must be positive");

  const GaussianStats ref_stats = fit_gaussian(resolve_source(reference, base_dir));

  std::vector<TrackPoint> series;
  series.reserve(checkpoints.size());
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const EmbeddingSet set = resolve_source(checkpoints[i], base_dir);
    const FrechetResult r = frechet_distance(ref_stats, fit_gaussian(set));
    TrackPoint point;
    point.step = static_cast<int>(i);
    point.label = set.source_id;
    point.raw = r.value;
    point.rescaled = scaling ? rescale(r, *scaling) : r.value;
    series.push_back(std::move(point));
  }
  return series;
}

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "label,raw_distance,rescaled_distance,clamped_eigs\n";
  for (const auto& row : rows)
    out << row.label << ',' << format_double(row.raw) << ',' << format_double(row.rescaled)
        << ',' << row.clamped_eigs << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_track_csv(const std::vector<TrackPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,label,raw_distance,rescaled_distance\n";
  for (const auto& point : points)
    out << point.step << ',' << point.label << ',' << format_double(point.raw) << ','
        << format_double(point.rescaled) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_report_sidecar(const nlohmann::json& config_echo, const std::filesystem::path& path) {
  nlohmann::json j{{"tool", "fdtk"}, {"version", kVersion}, {"config", config_echo}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fdtk
