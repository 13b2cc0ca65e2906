#pragma once

/// @file pgm.hpp
/// @brief Binary PGM (P5) reading and writing for masks and grayscale frames.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "magsuture/raster.hpp"

namespace magsuture {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_pnm_int(std::istream& in, const char* what) {
  skip_pnm_space(in);
  long v = -1;
  if (!(in >> v) || v < 0) throw IoError(std::string("pgm: malformed ") + what);
  return v;
}

}  // namespace detail

/// Reads a P5 image; 16-bit samples (maxval > 255) are rescaled to 8 bits.
inline GrayFrame read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw IoError("pgm: not a binary P5 file");
  const long w = detail::read_pnm_int(in, "width");
  const long h = detail::read_pnm_int(in, "height");
  const long maxval = detail::read_pnm_int(in, "maxval");
  if (w == 0 || h == 0 || w > 1 << 16 || h > 1 << 16) throw IoError("pgm: unsupported dimensions");
  if (maxval < 1 || maxval > 65535) throw IoError("pgm: maxval out of range");
  if (!std::isspace(in.get())) throw IoError("pgm: missing separator after header");

  GrayFrame img(static_cast<int>(w), static_cast<int>(h));
  const bool wide = maxval > 255;
  const std::size_t n = img.size() * (wide ? 2u : 1u);
  std::string buf(n, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw IoError("pgm: truncated pixel data");
  for (std::size_t i = 0; i < img.size(); ++i) {
    unsigned v = 0;
    if (wide) {
      v = (static_cast<unsigned char>(buf[2 * i]) << 8) | static_cast<unsigned char>(buf[2 * i + 1]);
    } else {
      v = static_cast<unsigned char>(buf[i]);
    }
    img.data()[i] = static_cast<std::uint8_t>((v * 255u + static_cast<unsigned>(maxval) / 2u) / static_cast<unsigned>(maxval));
  }
  return img;
}

inline void write_pgm(std::ostream& out, const GrayFrame& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw IoError("pgm: write failed");
}

/// Gray value >= 128 means needle.
inline SegMask gray_to_mask(const GrayFrame& img) {
  SegMask m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m.data()[i] = img.data()[i] >= 128 ? 1 : 0;
  return m;
}

inline GrayFrame mask_to_gray(const SegMask& m) {
  GrayFrame img(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) img.data()[i] = m.data()[i] ? 255 : 0;
  return img;
}

inline SegMask read_mask_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return gray_to_mask(read_pgm(in));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_mask_pgm(const std::filesystem::path& path, const SegMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  write_pgm(out, mask_to_gray(mask));
}

}  // namespace magsuture
