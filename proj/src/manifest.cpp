#include "fdtk/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fdtk/rng.hpp"

namespace fdtk {
namespace {

// One CSV record; double quotes wrap fields containing commas, "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  DatasetManifest manifest;
  manifest.name = path.stem().string();

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv(line);
  if (header.empty() || header[0] != "path")
    throw FormatError(path.string() + ": manifest header must start with 'path'");
  manifest.attr_names.assign(header.begin() + 1, header.end());

  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    ManifestEntry entry;
    entry.path = fields[0];
    if (!seen.insert(entry.path).second)
      throw DataError(path.string() + ": duplicate entry path '" + entry.path + "'");
    for (std::size_t i = 1; i < fields.size(); ++i) entry.attrs[header[i]] = fields[i];
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  out << "path";
  for (const auto& name : manifest.attr_names) out << ',' << quote_csv(name);
  out << '\n';
  for (const auto& entry : manifest.entries) {
    out << quote_csv(entry.path);
    for (const auto& name : manifest.attr_names) {
      auto it = entry.attrs.find(name);
      out << ',' << quote_csv(it == entry.attrs.end() ? std::string{} : it->second);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DatasetManifest sample_manifest(const DatasetManifest& manifest, std::size_t k,
                                std::uint64_t seed,
                                const std::optional<std::string>& stratify) {
  const std::size_t n = manifest.size();
  if (k > n)
    throw RangeError("requested " + std::to_string(k) + " of " + std::to_string(n) + " entries");

  SplitMix64 rng(seed);
  std::vector<std::size_t> selected;

  if (!stratify) {
    selected = sample_without_replacement(n, k, rng);
  } else {
    // Bucket by class value, classes processed in lexicographic order so the
    // draw sequence is well defined.
    std::map<std::string, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < n; ++i) {
      auto it = manifest.entries[i].attrs.find(*stratify);
      if (it == manifest.entries[i].attrs.end())
        throw DataError("entry '" + manifest.entries[i].path + "' lacks attribute '" +
                        *stratify + "'");
      classes[it->second].push_back(i);
    }

    // Largest-remainder apportionment of k over class sizes.
    struct Quota {
      const std::string* name;
      std::size_t base;
      std::size_t remainder;  // numerator of the fractional part, scale n
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [name, members] : classes) {
      const std::size_t numer = k * members.size();
      quotas.push_back({&name, numer / n, numer % n});
      assigned += numer / n;
    }
    std::vector<std::size_t> order(quotas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (quotas[a].remainder != quotas[b].remainder)
        return quotas[a].remainder > quotas[b].remainder;
      return *quotas[a].name < *quotas[b].name;
    });
    for (std::size_t i = 0; assigned < k; ++i, ++assigned) quotas[order[i]].base += 1;

    for (const auto& quota : quotas) {
      const auto& members = classes.at(*quota.name);
      auto picks = sample_without_replacement(members.size(), quota.base, rng);
      for (auto p : picks) selected.push_back(members[p]);
    }
    std::sort(selected.begin(), selected.end());
  }

  DatasetManifest out;
  out.name = manifest.name;
  out.attr_names = manifest.attr_names;
  out.entries.reserve(selected.size());
  for (auto i : selected) out.entries.push_back(manifest.entries[i]);
  return out;
}

}  // namespace fdtk
