#include <doctest.h>

#include <json.hpp>

#include "fdtk/extractor.hpp"
#include "fdtk/gaussian.hpp"
#include "fdtk/rng.hpp"
#include "support.hpp"

using fdtk::FeatureExtractor;
using fdtk::RasterImage;
using testutil::TempDir;

TEST_SUITE("extractor") {

TEST_CASE("raw-downsample on a constant image is the constant vector") {
  const auto ex = FeatureExtractor::raw_downsample("pool2", 2);
  const RasterImage gray = RasterImage::filled(4, 4, 1, 128);
  const Eigen::VectorXd v = ex.extract(gray);
  REQUIRE(v.size() == 4);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    CHECK(v[i] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("raw-downsample output stays in [0, 1] and mean-pools") {
  const auto ex = FeatureExtractor::raw_downsample("pool2", 2);
  RasterImage img = RasterImage::filled(4, 4, 1, 0);
  // One white cell in the top-left 2x2 block.
  img.at(1, 1, 0) = 255;
  const Eigen::VectorXd v = ex.extract(img);
  CHECK(v[0] == doctest::Approx(255.0 / 4.0 / 255.0));
  CHECK(v[1] == doctest::Approx(0.0));
  CHECK(v.minCoeff() >= 0.0);
  CHECK(v.maxCoeff() <= 1.0);
}

TEST_CASE("rgb images collapse to the channel mean") {
  const auto ex = FeatureExtractor::raw_downsample("pool1", 1);
  RasterImage img = RasterImage::filled(2, 2, 3, 0);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      img.at(x, y, 0) = 30;
      img.at(x, y, 1) = 60;
      img.at(x, y, 2) = 90;
    }
  const Eigen::VectorXd v = ex.extract(img);
  CHECK(v[0] == doctest::Approx(60.0 / 255.0));
}

TEST_CASE("random projection is deterministic per seed") {
  fdtk::RandomProjectionSpec spec;
  spec.seed = 9;
  spec.side = 8;
  spec.widths = {64, 32, 16};
  const auto ex = FeatureExtractor::random_projection("rp", spec);

  fdtk::SplitMix64 rng(2);
  const RasterImage img = testutil::random_image(16, 16, 1, rng);
  const Eigen::VectorXd a = ex.extract(img);
  const Eigen::VectorXd b = ex.extract(img);
  REQUIRE(a.size() == 16);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.allFinite());

  // Same spec, fresh instance: identical weights, identical output.
  const auto ex2 = FeatureExtractor::random_projection("rp", spec);
  CHECK((ex2.extract(img) - a).lpNorm<Eigen::Infinity>() == 0.0);

  spec.seed = 10;
  const auto ex3 = FeatureExtractor::random_projection("rp", spec);
  CHECK((ex3.extract(img) - a).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("random projection matches a direct product oracle") {
  fdtk::RandomProjectionSpec spec;
  spec.seed = 41;
  spec.side = 4;
  spec.widths = {16, 8, 4};
  const auto ex = FeatureExtractor::random_projection("rp", spec);

  fdtk::SplitMix64 rng(6);
  const RasterImage img = testutil::random_image(4, 4, 1, rng);

  // Replay the documented stream: weights row-major, layer by layer,
  // uniform in [-a, a) with a = sqrt(6/(fan_in + fan_out)).
  fdtk::SplitMix64 stream(spec.seed);
  Eigen::MatrixXd w1(8, 16), w2(4, 8);
  const double a1 = std::sqrt(6.0 / (16 + 8));
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 16; ++c) w1(r, c) = a1 * (2.0 * stream.unit() - 1.0);
  const double a2 = std::sqrt(6.0 / (8 + 4));
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) w2(r, c) = a2 * (2.0 * stream.unit() - 1.0);

  Eigen::VectorXd input(16);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) input[y * 4 + x] = img.at(x, y, 0) / 255.0;

  const Eigen::VectorXd expected = w2 * (w1 * input).cwiseMax(0.0);
  const Eigen::VectorXd got = ex.extract(img);
  CHECK((got - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("one changed pixel changes the projection") {
  fdtk::RandomProjectionSpec spec;
  spec.seed = 3;
  spec.side = 4;
  spec.widths = {16, 8, 4};
  const auto ex = FeatureExtractor::random_projection("rp", spec);

  RasterImage img = RasterImage::filled(4, 4, 1, 100);
  const Eigen::VectorXd before = ex.extract(img);
  img.at(2, 1, 0) = 200;
  const Eigen::VectorXd after = ex.extract(img);
  CHECK((before - after).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("random-projection features give zero self Frechet distance") {
  TempDir dir("rpself");
  fdtk::SplitMix64 rng(14);
  fdtk::DatasetManifest manifest;
  manifest.name = "self";
  for (int i = 0; i < 10; ++i) {
    const auto name = "img" + std::to_string(i) + ".png";
    fdtk::save_image(testutil::random_image(8, 8, 1, rng), dir.file(name));
    manifest.entries.push_back({name, {}});
  }
  fdtk::RandomProjectionSpec spec;
  spec.seed = 77;
  spec.side = 8;
  spec.widths = {64, 16, 8};
  const auto ex = FeatureExtractor::random_projection("rp", spec);
  const auto set = ex.extract_set(manifest, dir.path());
  const auto g = fdtk::fit_gaussian(set);
  CHECK(fdtk::frechet_distance(g, g).value <= 1e-6);
}

TEST_CASE("external extractors refuse image input") {
  const auto ex = FeatureExtractor::external("inception", 2048);
  CHECK(ex.dim() == 2048);
  CHECK_THROWS_AS(ex.extract(RasterImage::filled(4, 4, 1, 0)), fdtk::UnsupportedError);
}

TEST_CASE("extract_set keeps manifest order and records provenance") {
  TempDir dir("exset");
  fdtk::SplitMix64 rng(8);
  fdtk::DatasetManifest manifest;
  manifest.name = "toy";
  for (int i = 0; i < 3; ++i) {
    const auto name = "img" + std::to_string(i) + ".png";
    fdtk::save_image(testutil::random_image(8, 8, 1, rng), dir.file(name));
    manifest.entries.push_back({name, {}});
  }

  const auto ex = FeatureExtractor::raw_downsample("pool4", 4);
  const fdtk::EmbeddingSet set = ex.extract_set(manifest, dir.path());
  CHECK(set.count() == 3);
  CHECK(set.dim() == 16);
  CHECK(set.source_id == "toy");
  CHECK(set.extractor_id == "pool4");

  // Row i must equal the standalone extraction of image i.
  for (int i = 0; i < 3; ++i) {
    const auto img = fdtk::load_image(dir.file("img" + std::to_string(i) + ".png"));
    CHECK((set.data.row(i).transpose() - ex.extract(img)).lpNorm<Eigen::Infinity>() == 0.0);
  }

  // Permuting the manifest permutes the rows identically.
  fdtk::DatasetManifest reversed = manifest;
  std::reverse(reversed.entries.begin(), reversed.entries.end());
  const fdtk::EmbeddingSet rset = ex.extract_set(reversed, dir.path());
  for (int i = 0; i < 3; ++i)
    CHECK((rset.data.row(i) - set.data.row(2 - i)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("extract_set aborts naming the unreadable image") {
  TempDir dir("exbad");
  fdtk::DatasetManifest manifest;
  manifest.name = "broken";
  manifest.entries.push_back({"gone.png", {}});
  const auto ex = FeatureExtractor::raw_downsample("pool4", 4);
  CHECK_THROWS_WITH_AS(ex.extract_set(manifest, dir.path()), doctest::Contains("gone.png"),
                       fdtk::DataError);
}

TEST_CASE("config json round-trip") {
  fdtk::RandomProjectionSpec spec;
  spec.seed = 12;
  spec.side = 8;
  spec.widths = {64, 32, 8};
  const auto ex = FeatureExtractor::random_projection("rp8", spec);
  const auto back = FeatureExtractor::from_json(ex.to_json());
  CHECK(back.id() == "rp8");
  CHECK(back.dim() == 8);
  CHECK(back.kind() == fdtk::ExtractorKind::RandomProjection);

  const auto pool = FeatureExtractor::from_json(
      nlohmann::json{{"id", "p"}, {"kind", "raw-downsample"}, {"dim", 1024}});
  CHECK(pool.dim() == 1024);

  CHECK_THROWS_AS(FeatureExtractor::from_json(nlohmann::json{{"id", "x"}, {"kind", "trained"}}),
                  fdtk::FormatError);
  CHECK_THROWS_AS(FeatureExtractor::from_json(
                      nlohmann::json{{"id", "x"}, {"kind", "raw-downsample"}, {"dim", 1000}}),
                  fdtk::FormatError);
}

}  // TEST_SUITE
