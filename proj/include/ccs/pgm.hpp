#ifndef CCS_PGM_HPP
#define CCS_PGM_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ccs/error.hpp"
#include "ccs/linalg.hpp"

namespace ccs {

/// Parses a binary (P5) 8-bit PGM image into a matrix of pixel values.
inline Mat decode_pgm(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> long {
    skip();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw IoError("pgm: malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1000000) throw IoError("pgm: header value out of range");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw IoError("pgm: not a binary P5 image");
  pos = 2;
  const long w = number(), h = number(), maxval = number();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw IoError("pgm: unsupported dimensions or depth");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError("pgm: malformed header");
  ++pos;
  if (bytes.size() - pos < static_cast<std::size_t>(w * h)) throw IoError("pgm: truncated pixel data");
  Mat img(h, w);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c) img(r, c) = static_cast<double>(bytes[pos + static_cast<std::size_t>(r * w + c)]);
  return img;
}

inline Mat read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("pgm: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + " (" + path + ")");
  }
}

/// Writes pixels rounded and clamped to [0, 255].
inline void write_pgm(const std::string& path, const Mat& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pgm: cannot write " + path);
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(img.cols()));
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      const double v = std::isfinite(img(r, c)) ? std::clamp(std::round(img(r, c)), 0.0, 255.0) : 0.0;
      row[static_cast<std::size_t>(c)] = static_cast<char>(static_cast<unsigned char>(v));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("pgm: write failed for " + path);
}

}  // namespace ccs

#endif
