#pragma once

namespace fdtk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fdtk
