#pragma once

#include <stdexcept>
#include <string>

namespace fdtk {

// All toolkit errors derive from Error and carry a stable kind tag; the CLI
// prints "error: <kind>: <message>" and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error("FormatError", m) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("ShapeError", m) {}
};

struct DataError : Error {
  explicit DataError(const std::string& m) : Error("DataError", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("IoError", m) {}
};

struct RangeError : Error {
  explicit RangeError(const std::string& m) : Error("RangeError", m) {}
};

struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& m) : Error("UnsupportedError", m) {}
};

}  // namespace fdtk
