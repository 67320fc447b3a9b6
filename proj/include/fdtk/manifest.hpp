#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdtk/errors.hpp"

namespace fdtk {

struct ManifestEntry {
  std::string path;
  std::map<std::string, std::string> attrs;
};

// CSV-backed dataset listing: header `path,attr1,attr2,...`, UTF-8, one image
// per row. Entry paths must be unique.
struct DatasetManifest {
  std::string name;
  std::vector<std::string> attr_names;
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Deterministic subset of k entries. Without stratification the subset is
// drawn uniformly; with `stratify` naming an attribute, per-class counts
// follow the full manifest's class proportions under largest-remainder
// rounding (remainder ties broken by class name). Selected entries keep
// their original manifest order, so k == size() returns the manifest as-is.
DatasetManifest sample_manifest(const DatasetManifest& manifest, std::size_t k,
                                std::uint64_t seed,
                                const std::optional<std::string>& stratify = std::nullopt);

}  // namespace fdtk
