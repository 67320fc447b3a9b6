#include <doctest.h>

#include <json.hpp>

#include "fdtk/bench.hpp"
#include "fdtk/npy.hpp"
#include "fdtk/rng.hpp"
#include "support.hpp"

using fdtk::BenchmarkConfig;
using fdtk::CandidateSpec;
using fdtk::EmbeddingSet;
using fdtk::SourceSpec;
using testutil::TempDir;

namespace {

SourceSpec npy_source(const std::filesystem::path& path) {
  SourceSpec s;
  s.embeddings = path;
  return s;
}

// Blob images plus optional additive Gaussian pixel noise, written as PNGs
// with a manifest; returns the manifest path.
std::filesystem::path write_blob_corpus(const TempDir& dir, const std::string& name,
                                        int count, double noise_sigma, std::uint64_t seed) {
  fdtk::SplitMix64 rng(seed);
  fdtk::DatasetManifest manifest;
  manifest.name = name;
  for (int i = 0; i < count; ++i) {
    fdtk::RasterImage img = fdtk::RasterImage::filled(32, 32, 1, 0);
    const double cx = 8.0 + 16.0 * rng.unit();
    const double cy = 8.0 + 16.0 * rng.unit();
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        double v = 255.0 * std::exp(-d2 / 40.0);
        if (noise_sigma > 0.0) v += noise_sigma * 255.0 * rng.normal();
        img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    const std::string file = name + "_" + std::to_string(i) + ".png";
    fdtk::save_image(img, dir.file(file));
    manifest.entries.push_back({file, {}});
  }
  const auto path = dir.file(name + ".csv");
  fdtk::save_manifest(manifest, path);
  return path;
}

nlohmann::json pool_extractor() {
  return nlohmann::json{{"id", "pool8"}, {"kind", "raw-downsample"}, {"side", 8}};
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("reference as its own candidate scores zero") {
  TempDir dir("bench");
  fdtk::SplitMix64 rng(1);
  const EmbeddingSet set = testutil::random_embeddings(50, 6, rng);
  fdtk::save_embeddings(set, dir.file("ref.npy"));

  BenchmarkConfig config;
  config.reference = npy_source(dir.file("ref.npy"));
  config.candidates.push_back({"self", npy_source(dir.file("ref.npy"))});
  const auto rows = fdtk::run_benchmark(config);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].label == "self");
  CHECK(rows[0].raw <= 1e-6);
  CHECK(rows[0].rescaled <= 1e-6);
}

TEST_CASE("rows follow config order and rescale via the factor") {
  TempDir dir("bench");
  fdtk::SplitMix64 rng(2);
  const EmbeddingSet ref = testutil::random_embeddings(60, 4, rng);
  EmbeddingSet far = testutil::random_embeddings(60, 4, rng);
  far.data.array() += 3.0;
  EmbeddingSet near = testutil::random_embeddings(60, 4, rng);
  near.data.array() += 0.5;
  fdtk::save_embeddings(ref, dir.file("ref.npy"));
  fdtk::save_embeddings(far, dir.file("far.npy"));
  fdtk::save_embeddings(near, dir.file("near.npy"));

  BenchmarkConfig config;
  config.reference = npy_source(dir.file("ref.npy"));
  config.candidates.push_back({"far", npy_source(dir.file("far.npy"))});
  config.candidates.push_back({"near", npy_source(dir.file("near.npy"))});
  fdtk::ScalingFactor scale;
  scale.factor = 2.0;
  config.scaling = scale;

  const auto rows = fdtk::run_benchmark(config);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label == "far");
  CHECK(rows[1].label == "near");
  CHECK(rows[0].raw > rows[1].raw);
  CHECK(rows[0].rescaled == doctest::Approx(rows[0].raw / 2.0));
  CHECK(rows[1].rescaled == doctest::Approx(rows[1].raw / 2.0));

  // Concurrent evaluation returns the same rows in the same order.
  config.workers = 4;
  const auto parallel = fdtk::run_benchmark(config);
  REQUIRE(parallel.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parallel[i].label == rows[i].label);
    CHECK(parallel[i].raw == rows[i].raw);
  }

  // Each candidate's value is independent of where it sits in the config.
  std::swap(config.candidates[0], config.candidates[1]);
  config.workers = 1;
  const auto swapped = fdtk::run_benchmark(config);
  CHECK(swapped[0].label == "near");
  CHECK(swapped[1].label == "far");
  CHECK(swapped[1].raw == rows[0].raw);
  CHECK(swapped[0].raw == rows[1].raw);
}

TEST_CASE("rescaled distances grow with the noise level") {
  TempDir dir("mono");
  const auto ref = write_blob_corpus(dir, "base", 24, 0.0, 100);
  const auto n1 = write_blob_corpus(dir, "noise1", 24, 0.1, 100);
  const auto n2 = write_blob_corpus(dir, "noise2", 24, 0.3, 100);
  const auto n3 = write_blob_corpus(dir, "noise3", 24, 0.5, 100);

  BenchmarkConfig config;
  config.reference.manifest = ref;
  config.reference.extractor = pool_extractor();
  for (const auto& [label, path] :
       std::vector<std::pair<std::string, std::filesystem::path>>{
           {"s1", n1}, {"s2", n2}, {"s3", n3}}) {
    CandidateSpec c;
    c.label = label;
    c.source.manifest = path;
    c.source.extractor = pool_extractor();
    config.candidates.push_back(std::move(c));
  }
  fdtk::ScalingFactor scale;
  scale.factor = 0.37;
  config.scaling = scale;

  const auto rows = fdtk::run_benchmark(config);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rescaled < rows[1].rescaled);
  CHECK(rows[1].rescaled < rows[2].rescaled);
}

TEST_CASE("manifest candidates support perturbation and sampling") {
  TempDir dir("pert");
  const auto manifest = write_blob_corpus(dir, "imgs", 12, 0.0, 7);

  BenchmarkConfig config;
  config.reference.manifest = manifest;
  config.reference.extractor = pool_extractor();

  CandidateSpec flipped;
  flipped.label = "vflip";
  flipped.source.manifest = manifest;
  flipped.source.extractor = pool_extractor();
  fdtk::PerturbationSpec pert;
  pert.kind = fdtk::PerturbationKind::VerticalFlip;
  flipped.source.perturbation = pert;
  config.candidates.push_back(flipped);

  CandidateSpec sampled;
  sampled.label = "half";
  sampled.source.manifest = manifest;
  sampled.source.extractor = pool_extractor();
  sampled.source.sample = SourceSpec::Sample{6, 3, std::nullopt};
  config.candidates.push_back(sampled);

  const auto rows = fdtk::run_benchmark(config);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].raw > 0.0);   // flipped blobs move the Gaussian
  CHECK(rows[1].raw >= 0.0);  // subsample of the same corpus stays close
  CHECK(rows[0].raw > rows[1].raw);
}

TEST_CASE("validation lists every problem before computing") {
  TempDir dir("val");
  BenchmarkConfig config;
  config.reference = npy_source(dir.file("missing_ref.npy"));
  config.candidates.push_back({"a", npy_source(dir.file("missing_a.npy"))});
  CandidateSpec no_extractor;
  no_extractor.label = "a";  // duplicate label on purpose
  no_extractor.source.manifest = dir.file("missing.csv");
  config.candidates.push_back(no_extractor);
  config.scaling_path = dir.file("missing_scale.json");

  try {
    fdtk::run_benchmark(config);
    FAIL("expected DataError");
  } catch (const fdtk::DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing_ref.npy") != std::string::npos);
    CHECK(msg.find("missing_a.npy") != std::string::npos);
    CHECK(msg.find("missing.csv") != std::string::npos);
    CHECK(msg.find("duplicate candidate label") != std::string::npos);
    CHECK(msg.find("extractor") != std::string::npos);
    CHECK(msg.find("missing_scale.json") != std::string::npos);
  }
}

TEST_CASE("benchmark csv is byte-identical across runs") {
  TempDir dir("csv");
  fdtk::SplitMix64 rng(3);
  const EmbeddingSet ref = testutil::random_embeddings(40, 5, rng);
  EmbeddingSet other = testutil::random_embeddings(40, 5, rng);
  other.data.array() += 1.0;
  fdtk::save_embeddings(ref, dir.file("ref.npy"));
  fdtk::save_embeddings(other, dir.file("other.npy"));

  BenchmarkConfig config;
  config.reference = npy_source(dir.file("ref.npy"));
  config.candidates.push_back({"other", npy_source(dir.file("other.npy"))});

  fdtk::write_benchmark_csv(fdtk::run_benchmark(config), dir.file("r1.csv"));
  fdtk::write_benchmark_csv(fdtk::run_benchmark(config), dir.file("r2.csv"));
  CHECK(testutil::read_file(dir.file("r1.csv")) == testutil::read_file(dir.file("r2.csv")));

  const std::string csv = testutil::read_file(dir.file("r1.csv"));
  CHECK(csv.rfind("label,raw_distance,rescaled_distance,clamped_eigs\n", 0) == 0);
}

TEST_CASE("track: single checkpoint equal to the reference is a zero series") {
  TempDir dir("track");
  fdtk::SplitMix64 rng(4);
  const EmbeddingSet ref = testutil::random_embeddings(30, 4, rng);
  fdtk::save_embeddings(ref, dir.file("ref.npy"));

  const auto series = fdtk::track_checkpoints(
      npy_source(dir.file("ref.npy")), {npy_source(dir.file("ref.npy"))}, std::nullopt);
  REQUIRE(series.size() == 1);
  CHECK(series[0].step == 0);
  CHECK(series[0].rescaled <= 1e-6);
}

TEST_CASE("track: checkpoints drifting onto the reference give a nonincreasing series") {
  TempDir dir("drift");
  fdtk::SplitMix64 rng(5);
  const EmbeddingSet ref = testutil::random_embeddings(80, 4, rng);
  fdtk::save_embeddings(ref, dir.file("ref.npy"));

  std::vector<SourceSpec> checkpoints;
  for (int step = 0; step < 4; ++step) {
    EmbeddingSet ckpt = ref;
    ckpt.data.array() += 2.0 - 0.5 * step;  // linear drift toward the reference mean
    const auto path = dir.file("ckpt" + std::to_string(step) + ".npy");
    fdtk::save_embeddings(ckpt, path);
    checkpoints.push_back(npy_source(path));
  }

  const auto series = fdtk::track_checkpoints(npy_source(dir.file("ref.npy")), checkpoints,
                                              std::nullopt);
  REQUIRE(series.size() == 4);
  for (std::size_t i = 1; i < series.size(); ++i)
    CHECK(series[i].rescaled <= series[i - 1].rescaled + 1e-12);

  fdtk::write_track_csv(series, dir.file("series.csv"));
  const std::string csv = testutil::read_file(dir.file("series.csv"));
  CHECK(csv.rfind("step,label,raw_distance,rescaled_distance\n", 0) == 0);
}

TEST_CASE("track rejects an empty checkpoint list") {
  CHECK_THROWS_AS(fdtk::track_checkpoints(SourceSpec{}, {}, std::nullopt), fdtk::RangeError);
}

TEST_CASE("config json parses sources, scaling and output") {
  const auto j = nlohmann::json::parse(R"({
    "reference": {"embeddings": "ref.npy"},
    "candidates": [
      {"label": "plain", "embeddings": "a.npy"},
      {"label": "swirled", "manifest": "imgs.csv",
       "perturbation": {"kind": "Swirl", "seed": 9, "strength": 2.0, "radius": 400.0},
       "extractor": {"id": "pool32", "kind": "raw-downsample", "side": 32},
       "sample": {"k": 10, "seed": 3}}
    ],
    "scaling": {"factor": 4.41},
    "output": "report.csv",
    "workers": 2
  })");
  const BenchmarkConfig config = fdtk::benchmark_config_from_json(j);
  CHECK(config.reference.embeddings == "ref.npy");
  REQUIRE(config.candidates.size() == 2);
  CHECK(config.candidates[1].source.perturbation->kind == fdtk::PerturbationKind::Swirl);
  CHECK(config.candidates[1].source.sample->k == 10);
  CHECK(config.scaling->factor == doctest::Approx(4.41));
  CHECK(config.output == "report.csv");
  CHECK(config.workers == 2);

  CHECK_THROWS_AS(fdtk::benchmark_config_from_json(nlohmann::json{{"candidates", 3}}),
                  fdtk::FormatError);
}

}  // TEST_SUITE
