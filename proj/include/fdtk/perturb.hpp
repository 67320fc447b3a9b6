#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fdtk/image.hpp"

namespace fdtk {

enum class PerturbationKind {
  VerticalFlip,
  HorizontalFlip,
  Swirl,
  RandomErase,
  SaltPepperNoise,
  Puzzle8,
  Puzzle32,
};

std::string kind_name(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(const std::string& name);

// A named, seeded image transform. Defaults: Swirl strength 2 / radius 400 px,
// RandomErase 50 patches of 50x50, SaltPepperNoise 10'000 draws, Puzzle patch
// sizes from the kind. Flips and Swirl ignore the seed.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::HorizontalFlip;
  std::uint64_t seed = 0;
  double swirl_strength = 2.0;
  double swirl_radius = 400.0;
  int erase_patches = 50;
  int erase_patch_size = 50;
  int noise_pixels = 10'000;
};

// Top-left corners of the erase patches for an image of the given size, in
// draw order: one x then one y per patch, uniform over [0, W-pw] x [0, H-ph]
// so patches never cross the border. Exposed so tests can audit the erased
// region without re-deriving the stream.
std::vector<std::pair<int, int>> random_erase_anchors(const PerturbationSpec& spec, int width,
                                                      int height);

// Pure function of (spec, image); output has the same size and channels.
RasterImage apply(const PerturbationSpec& spec, const RasterImage& image);

}  // namespace fdtk
