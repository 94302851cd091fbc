#pragma once

// File formats: 8-bit PNG, binary PPM/PGM (P6/P5) and little-endian PFM.
// 8-bit values map to [0, 1] by division by 255; PFM stores raw floats.

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "descatter/image.hpp"

namespace descatter::io {

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

inline std::uint8_t quantize8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline Image from_bytes(const std::vector<std::uint8_t>& bytes, int width, int height,
                        int channels) {
  Image img(width, height, channels);
  auto values = img.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = bytes[i] / 255.0;
  return img;
}

inline std::vector<std::uint8_t> to_bytes(const Image& img) {
  std::vector<std::uint8_t> bytes(img.size());
  const auto values = img.values();
  for (std::size_t i = 0; i < values.size(); ++i) bytes[i] = quantize8(values[i]);
  return bytes;
}

// Skips whitespace and '#' comments in a netpbm header.
inline void skip_header_space(std::istream& in) {
  while (in) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
}

inline long read_header_int(std::istream& in) {
  skip_header_space(in);
  long value = -1;
  in >> value;
  return value;
}

}  // namespace detail

inline Image read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorKind::kIo, "cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::kIo, "cannot decode PNG " + path.string() + ": " + message);
  }
  return detail::from_bytes(buffer, static_cast<int>(image.width), static_cast<int>(image.height),
                            channels);
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const auto bytes = detail::to_bytes(img);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, "cannot write PNG " + path.string() + ": " + image.message);
  }
}

/// Reads binary P6 (RGB) or P5 (gray) with maxval 255.
inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P6" && magic != "P5") {
    throw Error(ErrorKind::kIo, path.string() + ": not a binary PPM/PGM");
  }
  const long width = detail::read_header_int(in);
  const long height = detail::read_header_int(in);
  const long maxval = detail::read_header_int(in);
  if (!in || width <= 0 || height <= 0 || maxval != 255) {
    throw Error(ErrorKind::kIo, path.string() + ": unsupported PPM header");
  }
  in.get();  // single whitespace before the raster
  const int channels = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width * height * channels));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(ErrorKind::kIo, path.string() + ": truncated PPM raster");
  return detail::from_bytes(bytes, static_cast<int>(width), static_cast<int>(height), channels);
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << (img.channels() == 3 ? "P6" : "P5") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  const auto bytes = detail::to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

/// PFM: "PF" (RGB) or "Pf" (gray), negative scale means little-endian,
/// scanlines stored bottom-to-top.
inline Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "PF" && magic != "Pf") throw Error(ErrorKind::kIo, path.string() + ": not a PFM");
  long width = 0, height = 0;
  double scale = 0.0;
  in >> width >> height >> scale;
  if (!in || width <= 0 || height <= 0 || scale == 0.0) {
    throw Error(ErrorKind::kIo, path.string() + ": bad PFM header");
  }
  in.get();
  const int channels = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(width * channels));
  for (int y = img.height() - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
    if (!in) throw Error(ErrorKind::kIo, path.string() + ": truncated PFM raster");
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        std::uint32_t bits = row[static_cast<std::size_t>(x * channels + c)];
        if (swap) bits = __builtin_bswap32(bits);
        img(x, y, c) = static_cast<double>(std::bit_cast<float>(bits));
      }
    }
  }
  return img;
}

inline void write_pfm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << (img.channels() == 3 ? "PF" : "Pf") << '\n'
      << img.width() << ' ' << img.height() << "\n-1.0\n";
  std::vector<std::uint32_t> row(static_cast<std::size_t>(img.width() * img.channels()));
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(img(x, y, c)));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        row[static_cast<std::size_t>(x * img.channels() + c)] = bits;
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

/// Dispatches on extension: .png, .ppm/.pgm, .pfm.
inline Image read_image(const std::filesystem::path& path) {
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm") return read_ppm(path);
  if (ext == ".pfm") return read_pfm(path);
  throw Error(ErrorKind::kIo, "unsupported image format: " + path.string());
}

inline void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".ppm" || ext == ".pgm") return write_ppm(path, img);
  if (ext == ".pfm") return write_pfm(path, img);
  throw Error(ErrorKind::kIo, "unsupported image format: " + path.string());
}

}  // namespace descatter::io
