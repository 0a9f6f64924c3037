#pragma once

#include <stdexcept>
#include <string>

namespace cvos {

// Malformed input text (annotation lines, RLE strings, config files).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure (missing file, unwritable directory, ...).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvos
