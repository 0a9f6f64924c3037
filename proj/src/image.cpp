#include "cvos/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "cvos/errors.hpp"

namespace cvos {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path) {
  try {
    const int value = std::stoi(tok);
    if (value <= 0) throw std::invalid_argument("");
    return value;
  } catch (...) {
    throw ParseError(path.string() + ": bad PGM header field '" + tok + "'");
  }
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  if (next_token(in) != "P5")
    throw ParseError(path.string() + ": not a binary PGM (P5) file");
  const int width = parse_dim(next_token(in), path);
  const int height = parse_dim(next_token(in), path);
  const int maxval = parse_dim(next_token(in), path);
  if (maxval != 255)
    throw ParseError(path.string() + ": unsupported maxval " +
                     std::to_string(maxval));

  Image image(height, width);
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(height) * width);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw ParseError(path.string() + ": truncated pixel data");
  for (std::size_t i = 0; i < raw.size(); ++i)
    image.pixels[i] = raw[i] / 255.0;
  return image;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<std::uint8_t> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cvos
