#pragma once

#include <filesystem>

#include "fdtk/embedding.hpp"

namespace fdtk {

// Embedding files are NPY v1.0: magic \x93NUMPY, version 0x01 0x00, a
// space-padded header dict with descr/fortran_order/shape, then raw
// little-endian floats. Readers accept <f4 (widened to double) and <f8 in
// either storage order; the writer always emits <f8, C order.
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

}  // namespace fdtk
