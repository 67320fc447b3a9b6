// fdtk: Frechet-distance toolkit over pluggable feature spaces.
//
// Subcommands: stats, distance, calibrate, perturb, extract, neighbors,
// correlate, probe (train/eval), benchmark, track. Every command exits 0 on
// success and prints a single `error: <Kind>: <message>` line on failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdtk/analysis.hpp"
#include "fdtk/bench.hpp"
#include "fdtk/calibration.hpp"
#include "fdtk/errors.hpp"
#include "fdtk/extractor.hpp"
#include "fdtk/gaussian.hpp"
#include "fdtk/image.hpp"
#include "fdtk/manifest.hpp"
#include "fdtk/npy.hpp"
#include "fdtk/perturb.hpp"
#include "fdtk/probe.hpp"
#include "fdtk/version.hpp"

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// "0..9", "3,5,8" or a single integer.
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto parse_one = [&](const std::string& token) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw fdtk::RangeError("bad seed '" + token + "' in '" + text + "'");
    }
  };
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const auto lo = parse_one(text.substr(0, range));
    const auto hi = parse_one(text.substr(range + 2));
    if (hi < lo) throw fdtk::RangeError("seed range " + text + " is descending");
    if (hi - lo >= 1'000'000) throw fdtk::RangeError("seed range " + text + " is too large");
    std::vector<std::uint64_t> seeds;
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    seeds.push_back(parse_one(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (seeds.empty()) throw fdtk::RangeError("empty seed list");
  return seeds;
}

// Accepts a stats container or an NPY embedding file.
fdtk::GaussianStats load_stats_or_fit(const std::filesystem::path& path) {
  if (fdtk::is_stats_file(path)) return fdtk::load_stats(path);
  return fdtk::fit_gaussian(fdtk::load_embeddings(path));
}

fdtk::LabeledEmbeddings load_labeled(const std::filesystem::path& emb_path,
                                     const std::filesystem::path& label_path) {
  fdtk::LabeledEmbeddings data;
  data.set = fdtk::load_embeddings(emb_path);
  data.labels = fdtk::load_labels(label_path);
  if (data.labels.size() != static_cast<std::size_t>(data.set.count()))
    throw fdtk::ShapeError("label count " + std::to_string(data.labels.size()) +
                           " does not match embedding rows " + std::to_string(data.set.count()));
  return data;
}

struct GlobalFlags {
  bool json = false;
  std::uint64_t seed = 0;
  int workers = 1;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frechet distance toolkit over pluggable feature spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", fdtk::kVersion);

  GlobalFlags flags;
  app.add_flag("--json", flags.json, "emit machine-readable JSON on stdout");
  app.add_option("--seed", flags.seed, "seed for commands that draw randomness");
  app.add_option("--workers", flags.workers, "max concurrent candidate evaluations");

  // stats <embeddings.npy> -o stats.bin
  std::string stats_in, stats_out;
  auto* cmd_stats = app.add_subcommand("stats", "fit Gaussian statistics and cache them");
  cmd_stats->add_option("embeddings", stats_in, "NPY embedding file")->required();
  cmd_stats->add_option("-o,--output", stats_out, "stats container path")->required();

  // distance <a> <b>
  std::string dist_a, dist_b;
  auto* cmd_distance = app.add_subcommand("distance", "Frechet distance between two sets");
  cmd_distance->add_option("a", dist_a, "embeddings (.npy) or stats container")->required();
  cmd_distance->add_option("b", dist_b, "embeddings (.npy) or stats container")->required();

  // calibrate <a.npy> <b.npy> --k 5000 --seeds 0..9 -o scale.json
  std::string cal_a, cal_b, cal_seeds = "0..9", cal_out;
  std::size_t cal_k = 5000;
  auto* cmd_calibrate = app.add_subcommand("calibrate", "derive a per-extractor scaling factor");
  cmd_calibrate->add_option("a", cal_a, "first reference embedding set")->required();
  cmd_calibrate->add_option("b", cal_b, "second reference embedding set")->required();
  cmd_calibrate->add_option("--k", cal_k, "samples drawn per side per seed");
  cmd_calibrate->add_option("--seeds", cal_seeds, "seed list: 0..9 or 1,2,3");
  cmd_calibrate->add_option("-o,--output", cal_out, "scaling factor JSON")->required();

  // perturb --kind K --seed S [params] <in> <out.png>
  std::string pert_kind, pert_in, pert_out;
  fdtk::PerturbationSpec pert_defaults;
  double pert_strength = pert_defaults.swirl_strength;
  double pert_radius = pert_defaults.swirl_radius;
  int pert_patches = pert_defaults.erase_patches;
  int pert_patch_size = pert_defaults.erase_patch_size;
  int pert_pixels = pert_defaults.noise_pixels;
  auto* cmd_perturb = app.add_subcommand("perturb", "apply a seeded image perturbation");
  cmd_perturb->add_option("--kind", pert_kind, "VerticalFlip|HorizontalFlip|Swirl|RandomErase|SaltPepperNoise|Puzzle8|Puzzle32")
      ->required();
  cmd_perturb->add_option("--strength", pert_strength, "swirl strength");
  cmd_perturb->add_option("--radius", pert_radius, "swirl radius in pixels");
  cmd_perturb->add_option("--patches", pert_patches, "erase patch count");
  cmd_perturb->add_option("--patch-size", pert_patch_size, "erase patch side in pixels");
  cmd_perturb->add_option("--pixels", pert_pixels, "salt/pepper draw count");
  cmd_perturb->add_option("input", pert_in, "input image (PNG or JPEG)")->required();
  cmd_perturb->add_option("output", pert_out, "output PNG")->required();

  // extract <manifest.csv> -o out.npy [--extractor cfg.json | flags]
  std::string ext_manifest, ext_out, ext_config, ext_kind = "raw-downsample", ext_id;
  int ext_side = 32, ext_dim = 0;
  auto* cmd_extract = app.add_subcommand("extract", "embed every image of a manifest");
  cmd_extract->add_option("manifest", ext_manifest, "manifest CSV")->required();
  cmd_extract->add_option("-o,--output", ext_out, "output NPY")->required();
  cmd_extract->add_option("--extractor", ext_config, "extractor config JSON file");
  cmd_extract->add_option("--kind", ext_kind, "raw-downsample|random-projection");
  cmd_extract->add_option("--id", ext_id, "extractor id recorded in the set");
  cmd_extract->add_option("--side", ext_side, "pooled input side length");
  cmd_extract->add_option("--dim", ext_dim, "output dimension (random-projection)");

  // neighbors <pool.npy> --query-index i --k 9 --metric euclidean
  std::string nn_pool, nn_metric = "euclidean";
  std::int64_t nn_query = 0;
  std::size_t nn_k = 9;
  auto* cmd_neighbors = app.add_subcommand("neighbors", "exact nearest neighbors in a pool");
  cmd_neighbors->add_option("pool", nn_pool, "NPY embedding pool")->required();
  cmd_neighbors->add_option("--query-index", nn_query, "pool row to query")->required();
  cmd_neighbors->add_option("--k", nn_k, "neighbor count");
  cmd_neighbors->add_option("--metric", nn_metric, "euclidean|cosine");

  // correlate <table.csv> --x col --y col
  std::string corr_table, corr_x, corr_y;
  auto* cmd_correlate = app.add_subcommand("correlate", "Pearson/Spearman between table columns");
  cmd_correlate->add_option("table", corr_table, "CSV: label column then numeric columns")
      ->required();
  cmd_correlate->add_option("--x", corr_x, "first column name")->required();
  cmd_correlate->add_option("--y", corr_y, "second column name")->required();

  // probe train/eval
  auto* cmd_probe = app.add_subcommand("probe", "train or evaluate an MLP head");
  cmd_probe->require_subcommand(1);
  std::string pt_emb, pt_labels, pt_out;
  std::vector<int> pt_hidden = {512};
  int pt_epochs = 50, pt_batch = 32;
  double pt_lr = 0.01;
  auto* cmd_probe_train = cmd_probe->add_subcommand("train", "fit a head on labeled embeddings");
  cmd_probe_train->add_option("embeddings", pt_emb, "NPY embedding file")->required();
  cmd_probe_train->add_option("labels", pt_labels, "labels CSV (header `label`)")->required();
  cmd_probe_train->add_option("--hidden", pt_hidden, "hidden layer widths");
  cmd_probe_train->add_option("--epochs", pt_epochs, "training epochs");
  cmd_probe_train->add_option("--batch", pt_batch, "mini-batch size");
  cmd_probe_train->add_option("--lr", pt_lr, "learning rate");
  cmd_probe_train->add_option("-o,--output", pt_out, "head JSON path")->required();

  std::string pe_head, pe_emb, pe_labels;
  auto* cmd_probe_eval = cmd_probe->add_subcommand("eval", "accuracy of a head on labeled data");
  cmd_probe_eval->add_option("head", pe_head, "head JSON")->required();
  cmd_probe_eval->add_option("embeddings", pe_emb, "NPY embedding file")->required();
  cmd_probe_eval->add_option("labels", pe_labels, "labels CSV")->required();

  // benchmark --config cfg.json [-o report.csv]
  std::string bench_config, bench_out;
  auto* cmd_benchmark = app.add_subcommand("benchmark", "distance report over candidate sets");
  cmd_benchmark->add_option("--config", bench_config, "benchmark config JSON")->required();
  cmd_benchmark->add_option("-o,--output", bench_out, "report CSV (overrides config)");

  // track --reference ref [--scale s.json] -o out.csv <checkpoints...>
  std::string trk_ref, trk_scale, trk_out;
  std::vector<std::string> trk_ckpts;
  auto* cmd_track = app.add_subcommand("track", "distance of ordered checkpoints to a reference");
  cmd_track->add_option("--reference", trk_ref, "reference embeddings (.npy)")->required();
  cmd_track->add_option("--scale", trk_scale, "scaling factor JSON");
  cmd_track->add_option("-o,--output", trk_out, "series CSV")->required();
  cmd_track->add_option("checkpoints", trk_ckpts, "checkpoint embedding files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_stats) {
      const auto set = fdtk::load_embeddings(stats_in);
      const auto stats = fdtk::fit_gaussian(set);
      fdtk::save_stats(stats, stats_out);
      if (flags.json)
        std::cout << json{{"n", stats.count}, {"d", stats.dim()}, {"output", stats_out}}.dump()
                  << '\n';
      else
        std::cout << "fitted " << stats.count << " samples at dim " << stats.dim() << " -> "
                  << stats_out << '\n';
    } else if (*cmd_distance) {
      const auto ga = load_stats_or_fit(dist_a);
      const auto gb = load_stats_or_fit(dist_b);
      const auto r = fdtk::frechet_distance(ga, gb);
      if (flags.json)
        std::cout << json{{"value", r.value},
                          {"mean_term", r.mean_term},
                          {"trace_term", r.trace_term},
                          {"clamped_eigs", r.clamped_eigs}}
                         .dump()
                  << '\n';
      else
        std::cout << "value=" << format_double(r.value) << " mean_term="
                  << format_double(r.mean_term) << " trace_term=" << format_double(r.trace_term)
                  << " clamped_eigs=" << r.clamped_eigs << '\n';
    } else if (*cmd_calibrate) {
      const auto a = fdtk::load_embeddings(cal_a);
      const auto b = fdtk::load_embeddings(cal_b);
      const auto seeds = parse_seed_list(cal_seeds);
      const auto scale = fdtk::calibrate(a, b, cal_k, seeds);
      fdtk::save_scaling(scale, cal_out);
      if (flags.json)
        std::cout << fdtk::to_json(scale).dump() << '\n';
      else
        std::cout << "factor=" << format_double(scale.factor)
                  << " spread=" << format_double(scale.spread) << " seeds=" << seeds.size()
                  << " -> " << cal_out << '\n';
    } else if (*cmd_perturb) {
      if (std::filesystem::path(pert_out).extension() != ".png")
        throw fdtk::RangeError("perturb output must be a .png path");
      fdtk::PerturbationSpec spec;
      spec.kind = fdtk::parse_perturbation_kind(pert_kind);
      spec.seed = flags.seed;
      spec.swirl_strength = pert_strength;
      spec.swirl_radius = pert_radius;
      spec.erase_patches = pert_patches;
      spec.erase_patch_size = pert_patch_size;
      spec.noise_pixels = pert_pixels;
      const auto out = fdtk::apply(spec, fdtk::load_image(pert_in));
      fdtk::save_image(out, pert_out);
      if (flags.json)
        std::cout << json{{"kind", pert_kind}, {"seed", spec.seed}, {"output", pert_out}}.dump()
                  << '\n';
      else
        std::cout << pert_kind << " -> " << pert_out << '\n';
    } else if (*cmd_extract) {
      fdtk::FeatureExtractor extractor = [&]() {
        if (!ext_config.empty()) {
          std::ifstream in(ext_config);
          if (!in) throw fdtk::IoError("cannot open " + ext_config);
          json cfg;
          try {
            in >> cfg;
          } catch (const json::exception& e) {
            throw fdtk::FormatError(ext_config + ": " + e.what());
          }
          return fdtk::FeatureExtractor::from_json(cfg);
        }
        const auto kind = fdtk::parse_extractor_kind(ext_kind);
        if (kind == fdtk::ExtractorKind::RawDownsample)
          return fdtk::FeatureExtractor::raw_downsample(
              ext_id.empty() ? "pool" + std::to_string(ext_side) : ext_id, ext_side);
        if (kind == fdtk::ExtractorKind::RandomProjection) {
          fdtk::RandomProjectionSpec spec;
          spec.seed = flags.seed;
          spec.side = ext_side;
          const int dim = ext_dim > 0 ? ext_dim : 2048;
          spec.widths = {ext_side * ext_side, 2 * dim, dim};
          return fdtk::FeatureExtractor::random_projection(
              ext_id.empty() ? "randproj" + std::to_string(dim) : ext_id, spec);
        }
        throw fdtk::UnsupportedError("external extractors cannot run on images");
      }();
      const auto manifest = fdtk::load_manifest(ext_manifest);
      const auto set =
          extractor.extract_set(manifest, std::filesystem::path(ext_manifest).parent_path());
      fdtk::save_embeddings(set, ext_out);
      if (flags.json)
        std::cout << json{{"n", set.count()}, {"d", set.dim()}, {"extractor", extractor.id()},
                          {"output", ext_out}}
                         .dump()
                  << '\n';
      else
        std::cout << "extracted " << set.count() << " x " << set.dim() << " -> " << ext_out
                  << '\n';
    } else if (*cmd_neighbors) {
      const auto pool = fdtk::load_embeddings(nn_pool);
      const auto metric = fdtk::parse_metric(nn_metric);
      const auto result = fdtk::nearest_neighbors(pool, static_cast<Eigen::Index>(nn_query),
                                                  nn_k, metric);
      if (flags.json) {
        json j{{"reference", result.reference},
               {"metric", nn_metric},
               {"indices", result.indices},
               {"distances", result.distances}};
        std::cout << j.dump() << '\n';
      } else {
        for (std::size_t i = 0; i < result.indices.size(); ++i)
          std::cout << result.indices[i] << '\t' << format_double(result.distances[i]) << '\n';
      }
    } else if (*cmd_correlate) {
      const auto table = fdtk::load_rating_table(corr_table);
      const auto x = table.column(corr_x);
      const auto y = table.column(corr_y);
      const double r = fdtk::pearson(x, y);
      const double rho = fdtk::spearman(x, y);
      if (flags.json)
        std::cout << json{{"x", corr_x}, {"y", corr_y}, {"pearson", r}, {"spearman", rho}}.dump()
                  << '\n';
      else
        std::cout << "pearson=" << format_double(r) << " spearman=" << format_double(rho)
                  << '\n';
    } else if (*cmd_probe_train) {
      const auto data = load_labeled(pt_emb, pt_labels);
      fdtk::TrainConfig config;
      config.hidden = pt_hidden;
      config.epochs = pt_epochs;
      config.batch = pt_batch;
      config.learning_rate = pt_lr;
      config.seed = flags.seed;
      const auto head = fdtk::train(data, config);
      fdtk::save_head(head, pt_out);
      const double acc = fdtk::evaluate(head, data);
      if (flags.json)
        std::cout << json{{"train_accuracy", acc}, {"output", pt_out}}.dump() << '\n';
      else
        std::cout << "train_accuracy=" << format_double(acc) << " -> " << pt_out << '\n';
    } else if (*cmd_probe_eval) {
      const auto head = fdtk::load_head(pe_head);
      const auto data = load_labeled(pe_emb, pe_labels);
      const double acc = fdtk::evaluate(head, data);
      if (flags.json)
        std::cout << json{{"accuracy", acc}}.dump() << '\n';
      else
        std::cout << "accuracy=" << format_double(acc) << '\n';
    } else if (*cmd_benchmark) {
      auto config = fdtk::load_benchmark_config(bench_config);
      if (!bench_out.empty()) config.output = bench_out;
      if (config.output.empty())
        throw fdtk::RangeError("no output path: set 'output' in the config or pass -o");
      if (app.count("--workers") > 0) config.workers = flags.workers;
      const auto base_dir = std::filesystem::path(bench_config).parent_path();
      const auto rows = fdtk::run_benchmark(config, base_dir);
      auto out_path = config.output;
      if (out_path.is_relative() && !base_dir.empty()) out_path = base_dir / out_path;
      fdtk::write_benchmark_csv(rows, out_path);

      std::ifstream cfg_in(bench_config);
      json cfg_echo;
      cfg_in >> cfg_echo;
      fdtk::write_report_sidecar(cfg_echo, out_path.string() + ".meta.json");

      if (flags.json) {
        json j = json::array();
        for (const auto& row : rows)
          j.push_back({{"label", row.label},
                       {"raw", row.raw},
                       {"rescaled", row.rescaled},
                       {"clamped_eigs", row.clamped_eigs}});
        std::cout << j.dump() << '\n';
      } else {
        for (const auto& row : rows)
          std::cout << row.label << ": raw=" << format_double(row.raw)
                    << " rescaled=" << format_double(row.rescaled)
                    << " clamped_eigs=" << row.clamped_eigs << '\n';
        std::cout << "report -> " << out_path.string() << '\n';
      }
    } else if (*cmd_track) {
      fdtk::SourceSpec reference;
      reference.embeddings = trk_ref;
      std::vector<fdtk::SourceSpec> checkpoints;
      for (const auto& c : trk_ckpts) {
        fdtk::SourceSpec s;
        s.embeddings = c;
        checkpoints.push_back(std::move(s));
      }
      std::optional<fdtk::ScalingFactor> scaling;
      if (!trk_scale.empty()) scaling = fdtk::load_scaling(trk_scale);
      const auto series = fdtk::track_checkpoints(reference, checkpoints, scaling);
      fdtk::write_track_csv(series, trk_out);
      if (flags.json) {
        json j = json::array();
        for (const auto& p : series)
          j.push_back({{"step", p.step}, {"label", p.label}, {"raw", p.raw},
                       {"rescaled", p.rescaled}});
        std::cout << j.dump() << '\n';
      } else {
        for (const auto& p : series)
          std::cout << p.step << '\t' << format_double(p.rescaled) << '\n';
        std::cout << "series -> " << trk_out << '\n';
      }
    }
  } catch (const fdtk::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
