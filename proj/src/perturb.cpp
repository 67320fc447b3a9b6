#include "fdtk/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdtk/rng.hpp"

namespace fdtk {

std::string kind_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::VerticalFlip: return "VerticalFlip";
    case PerturbationKind::HorizontalFlip: return "HorizontalFlip";
    case PerturbationKind::Swirl: return "Swirl";
    case PerturbationKind::RandomErase: return "RandomErase";
    case PerturbationKind::SaltPepperNoise: return "SaltPepperNoise";
    case PerturbationKind::Puzzle8: return "Puzzle8";
    case PerturbationKind::Puzzle32: return "Puzzle32";
  }
  throw RangeError("unknown perturbation kind");
}

PerturbationKind parse_perturbation_kind(const std::string& name) {
  if (name == "VerticalFlip") return PerturbationKind::VerticalFlip;
  if (name == "HorizontalFlip") return PerturbationKind::HorizontalFlip;
  if (name == "Swirl") return PerturbationKind::Swirl;
  if (name == "RandomErase") return PerturbationKind::RandomErase;
  if (name == "SaltPepperNoise") return PerturbationKind::SaltPepperNoise;
  if (name == "Puzzle8") return PerturbationKind::Puzzle8;
  if (name == "Puzzle32") return PerturbationKind::Puzzle32;
  throw FormatError("unknown perturbation kind '" + name + "'");
}

namespace {

RasterImage flip_vertical(const RasterImage& img) {
  RasterImage out = img;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y)
    std::copy_n(img.pixels.data() + static_cast<std::size_t>(img.height - 1 - y) * stride, stride,
                out.pixels.data() + static_cast<std::size_t>(y) * stride);
  return out;
}

RasterImage flip_horizontal(const RasterImage& img) {
  RasterImage out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

// Inverse-mapped swirl: the source for the output pixel at polar offset
// (rho, phi) from the image center sits at angle phi + strength*exp(-rho/r)
// with r = ln(2)*radius/5. Bilinear interpolation, edge-clamp padding.
RasterImage swirl(const RasterImage& img, double strength, double radius) {
  RasterImage out = img;
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  const double r = std::numbers::ln2 * radius / 5.0;

  auto sample = [&](double sx, double sy, int c) {
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(sx);
    const int y0 = static_cast<int>(sy);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    return (1.0 - fy) * top + fy * bot;
  };

  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double rho = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx) + strength * std::exp(-rho / r);
      const double sx = cx + rho * std::cos(theta);
      const double sy = cy + rho * std::sin(theta);
      for (int c = 0; c < img.channels; ++c) {
        const double v = sample(sx, sy, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  return out;
}

RasterImage random_erase(const RasterImage& img, const PerturbationSpec& spec) {
  RasterImage out = img;
  const int pw = std::min(spec.erase_patch_size, img.width);
  const int ph = std::min(spec.erase_patch_size, img.height);
  for (const auto& [ax, ay] : random_erase_anchors(spec, img.width, img.height))
    for (int y = ay; y < ay + ph; ++y)
      for (int x = ax; x < ax + pw; ++x)
        for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 0;
  return out;
}

RasterImage salt_pepper(const RasterImage& img, const PerturbationSpec& spec) {
  RasterImage out = img;
  SplitMix64 rng(spec.seed);
  const std::uint64_t n_pixels = img.pixel_count();
  // Per draw: one position (row-major linear index, with replacement), then
  // one word whose low bit picks white over black. All channels switch jointly.
  for (int i = 0; i < spec.noise_pixels; ++i) {
    const auto idx = rng.bounded(n_pixels);
    const std::uint8_t value = (rng.next() & 1) ? 255 : 0;
    for (int c = 0; c < img.channels; ++c)
      out.pixels[idx * img.channels + c] = value;
  }
  return out;
}

RasterImage puzzle(const RasterImage& img, int patch, std::uint64_t seed) {
  if (img.width % patch != 0 || img.height % patch != 0)
    throw ShapeError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     " is not divisible into " + std::to_string(patch) + "x" +
                     std::to_string(patch) + " patches");
  const int gw = img.width / patch;
  const int gh = img.height / patch;

  // Fisher-Yates over patch indices in row-major grid order; output patch p
  // takes its pixels from source patch perm[p].
  std::vector<std::size_t> perm(static_cast<std::size_t>(gw) * gh);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  SplitMix64 rng(seed);
  shuffle(perm, rng);

  RasterImage out = img;
  const std::size_t row_bytes = static_cast<std::size_t>(patch) * img.channels;
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx) {
      const std::size_t src = perm[static_cast<std::size_t>(gy) * gw + gx];
      const int sx = static_cast<int>(src % gw) * patch;
      const int sy = static_cast<int>(src / gw) * patch;
      for (int y = 0; y < patch; ++y)
        std::copy_n(&img.pixels[(static_cast<std::size_t>(sy + y) * img.width + sx) *
                                img.channels],
                    row_bytes,
                    &out.pixels[(static_cast<std::size_t>(gy * patch + y) * img.width +
                                 gx * patch) *
                                img.channels]);
    }
  return out;
}

}  // namespace

std::vector<std::pair<int, int>> random_erase_anchors(const PerturbationSpec& spec, int width,
                                                      int height) {
  const int pw = std::min(spec.erase_patch_size, width);
  const int ph = std::min(spec.erase_patch_size, height);
  SplitMix64 rng(spec.seed);
  std::vector<std::pair<int, int>> anchors;
  anchors.reserve(static_cast<std::size_t>(spec.erase_patches));
  for (int i = 0; i < spec.erase_patches; ++i) {
    const int ax = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(width - pw + 1)));
    const int ay = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(height - ph + 1)));
    anchors.emplace_back(ax, ay);
  }
  return anchors;
}

RasterImage apply(const PerturbationSpec& spec, const RasterImage& image) {
  validate(image);
  switch (spec.kind) {
    case PerturbationKind::VerticalFlip: return flip_vertical(image);
    case PerturbationKind::HorizontalFlip: return flip_horizontal(image);
    case PerturbationKind::Swirl: return swirl(image, spec.swirl_strength, spec.swirl_radius);
    case PerturbationKind::RandomErase: return random_erase(image, spec);
    case PerturbationKind::SaltPepperNoise: return salt_pepper(image, spec);
    case PerturbationKind::Puzzle8: return puzzle(image, 8, spec.seed);
    case PerturbationKind::Puzzle32: return puzzle(image, 32, spec.seed);
  }
  throw RangeError("unknown perturbation kind");
}

}  // namespace fdtk
