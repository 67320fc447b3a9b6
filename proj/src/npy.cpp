#include "fdtk/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace fdtk {
namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

template <typename T>
T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return v;
}

template <typename T>
void store_le(T v, unsigned char* p) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  std::memcpy(p, &v, sizeof(T));
}

// Pulls the value of `key` out of the header dict without a full Python parser.
std::string dict_value(const std::string& header, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos) throw FormatError("NPY header missing key " + key);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos) throw FormatError("NPY header missing ':' after " + key);
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (pos >= header.size()) throw FormatError("NPY header truncated after " + key);
  if (header[pos] == '\'') {
    const auto end = header.find('\'', pos + 1);
    if (end == std::string::npos) throw FormatError("NPY header has unterminated string");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    const auto end = header.find(')', pos + 1);
    if (end == std::string::npos) throw FormatError("NPY header has unterminated tuple");
    return header.substr(pos, end - pos + 1);
  }
  auto end = header.find_first_of(",}", pos);
  if (end == std::string::npos) end = header.size();
  auto value = header.substr(pos, end - pos);
  while (!value.empty() && value.back() == ' ') value.pop_back();
  return value;
}

std::vector<std::uint64_t> parse_shape(const std::string& tuple) {
  std::vector<std::uint64_t> dims;
  std::string digits;
  auto flush = [&]() {
    if (digits.empty()) return;
    try {
      dims.push_back(std::stoull(digits));
    } catch (const std::exception&) {
      throw FormatError("NPY shape dimension '" + digits + "' out of range");
    }
    digits.clear();
  };
  for (char c : tuple) {
    if (c >= '0' && c <= '9') digits.push_back(c);
    else flush();
  }
  flush();
  return dims;
}

}  // namespace

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  unsigned char preamble[10];
  if (!in.read(reinterpret_cast<char*>(preamble), sizeof(preamble)))
    throw FormatError(path.string() + ": truncated NPY preamble");
  if (std::memcmp(preamble, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": bad NPY magic");
  if (preamble[6] != 1 || preamble[7] != 0)
    throw FormatError(path.string() + ": unsupported NPY version " +
                      std::to_string(preamble[6]) + "." + std::to_string(preamble[7]));
  const auto header_len = load_le<std::uint16_t>(preamble + 8);

  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len))
    throw FormatError(path.string() + ": truncated NPY header");

  const std::string descr = dict_value(header, "descr");
  const std::string order = dict_value(header, "fortran_order");
  const auto shape = parse_shape(dict_value(header, "shape"));

  std::size_t elem_size = 0;
  if (descr == "<f8") elem_size = 8;
  else if (descr == "<f4") elem_size = 4;
  else throw FormatError(path.string() + ": unsupported dtype '" + descr + "'");

  bool fortran = false;
  if (order == "True") fortran = true;
  else if (order != "False") throw FormatError(path.string() + ": bad fortran_order '" + order + "'");

  if (shape.size() != 2)
    throw ShapeError(path.string() + ": expected rank-2 array, got rank " +
                     std::to_string(shape.size()));
  if (shape[0] < 1 || shape[1] < 1)
    throw ShapeError(path.string() + ": empty array " + std::to_string(shape[0]) + "x" +
                     std::to_string(shape[1]));
  // Reject sizes the buffer arithmetic below could not represent.
  if (shape[0] > (1ULL << 31) || shape[1] > (1ULL << 31) ||
      shape[0] * shape[1] > (1ULL << 40))
    throw FormatError(path.string() + ": implausible array shape " + std::to_string(shape[0]) +
                      "x" + std::to_string(shape[1]));
  const auto rows = static_cast<Eigen::Index>(shape[0]);
  const auto cols = static_cast<Eigen::Index>(shape[1]);

  const std::size_t n_elems = shape[0] * shape[1];
  std::vector<unsigned char> raw(n_elems * elem_size);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw FormatError(path.string() + ": truncated NPY payload");

  EmbeddingSet set;
  set.source_id = path.stem().string();
  set.data.resize(rows, cols);
  auto element = [&](std::size_t flat) -> double {
    const unsigned char* p = raw.data() + flat * elem_size;
    return elem_size == 8 ? load_le<double>(p) : static_cast<double>(load_le<float>(p));
  };
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::size_t flat = fortran
                                   ? static_cast<std::size_t>(c) * shape[0] + static_cast<std::size_t>(r)
                                   : static_cast<std::size_t>(r) * shape[1] + static_cast<std::size_t>(c);
      set.data(r, c) = element(flat);
    }

  validate(set);
  return set;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  validate(set);

  std::ostringstream dict;
  dict << "{'descr': '<f8', 'fortran_order': False, 'shape': (" << set.data.rows() << ", "
       << set.data.cols() << "), }";
  std::string header = dict.str();
  // Total preamble + header is padded to a multiple of 64, newline-terminated.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  unsigned char preamble[10];
  std::memcpy(preamble, kMagic, sizeof(kMagic));
  preamble[6] = 1;
  preamble[7] = 0;
  store_le<std::uint16_t>(static_cast<std::uint16_t>(header.size()), preamble + 8);
  out.write(reinterpret_cast<const char*>(preamble), sizeof(preamble));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::vector<unsigned char> row(static_cast<std::size_t>(set.data.cols()) * 8);
  for (Eigen::Index r = 0; r < set.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < set.data.cols(); ++c)
      store_le<double>(set.data(r, c), row.data() + static_cast<std::size_t>(c) * 8);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fdtk
