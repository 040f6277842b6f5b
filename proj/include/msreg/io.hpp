#pragma once

// PNG (8/16-bit gray or RGB, via libpng) and binary PGM/PPM (P5/P6).
// Integer codes map to intensities as v = code / maxcode; writing inverts
// that with round-half-up after clamping to [0, 1].

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "msreg/error.hpp"
#include "msreg/image.hpp"

namespace msreg {

using AnyImage = std::variant<GrayImage, ColorImage>;

namespace io_detail {

inline std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path, "read failed");
  return bytes;
}

inline std::uint32_t to_code(float v, std::uint32_t maxcode) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0) * maxcode;
  return static_cast<std::uint32_t>(std::floor(c + 0.5));
}

// Planes in R, G, B order (one plane for gray).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::uint32_t maxcode = 0;
  std::vector<std::uint32_t> codes;  // interleaved
};

inline AnyImage raster_to_image(const Raster& r) {
  const double scale = 1.0 / r.maxcode;
  if (r.channels == 1) {
    GrayImage g(r.width, r.height);
    auto px = g.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(r.codes[i] * scale);
    return g;
  }
  ColorImage c(r.width, r.height);
  for (int ch = 0; ch < 3; ++ch) {
    auto px = c.plane(ch).pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(r.codes[i * 3 + ch] * scale);
  }
  return c;
}

inline Raster image_to_raster(const AnyImage& img, std::uint32_t maxcode) {
  Raster r;
  r.maxcode = maxcode;
  if (const auto* g = std::get_if<GrayImage>(&img)) {
    r.width = g->width();
    r.height = g->height();
    r.channels = 1;
    r.codes.reserve(g->size());
    for (float v : g->pixels()) r.codes.push_back(to_code(v, maxcode));
  } else {
    const auto& c = std::get<ColorImage>(img);
    r.width = c.width();
    r.height = c.height();
    r.channels = 3;
    r.codes.resize(static_cast<std::size_t>(r.width) * r.height * 3);
    for (int ch = 0; ch < 3; ++ch) {
      auto px = c.plane(ch).pixels();
      for (std::size_t i = 0; i < px.size(); ++i) r.codes[i * 3 + ch] = to_code(px[i], maxcode);
    }
  }
  return r;
}

// ---------------------------------------------------------------- PNM

inline Raster decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::uint64_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw IoError(path, "malformed PNM header");
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1ULL << 32)) throw IoError(path, "PNM header value out of range");
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw IoError(path, "not a binary PGM/PPM (expected P5 or P6)");
  }
  Raster r;
  r.channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const std::uint64_t w = read_uint();
  const std::uint64_t h = read_uint();
  const std::uint64_t maxval = read_uint();
  if (w < 1 || h < 1 || w > (1U << 20) || h > (1U << 20)) throw IoError(path, "invalid PNM dimensions");
  if (maxval < 1 || maxval > 65535) {
    throw IoError(path, "unsupported bit depth (maxval " + std::to_string(maxval) + ")");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError(path, "malformed PNM header");
  ++pos;

  r.width = static_cast<int>(w);
  r.height = static_cast<int>(h);
  r.maxcode = static_cast<std::uint32_t>(maxval);
  const std::size_t bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t count = static_cast<std::size_t>(w * h) * r.channels;
  if (bytes.size() - pos < count * bytes_per_sample) throw IoError(path, "truncated PNM pixel data");
  r.codes.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = 0;
    if (bytes_per_sample == 1) {
      v = bytes[pos + i];
    } else {
      v = (static_cast<std::uint32_t>(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1];
    }
    if (v > maxval) throw IoError(path, "PNM sample exceeds maxval");
    r.codes[i] = v;
  }
  return r;
}

inline std::vector<std::uint8_t> encode_pnm(const Raster& r) {
  const std::string header = std::string(r.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(r.width) + " " +
                             std::to_string(r.height) + "\n" + std::to_string(r.maxcode) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = r.maxcode > 255;
  out.reserve(out.size() + r.codes.size() * (wide ? 2 : 1));
  for (std::uint32_t c : r.codes) {
    if (wide) out.push_back(static_cast<std::uint8_t>(c >> 8));
    out.push_back(static_cast<std::uint8_t>(c & 0xFF));
  }
  return out;
}

// ---------------------------------------------------------------- PNG

struct PngReadState {
  const std::vector<std::uint8_t>* bytes = nullptr;
  std::size_t pos = 0;
  char message[256] = {};
};

extern "C" inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->bytes->size() - st->pos < len) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, st->bytes->data() + st->pos, len);
  st->pos += len;
}

extern "C" inline void png_error_to_state(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  if (st != nullptr) std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

extern "C" inline void png_warning_ignore(png_structp, png_const_charp) {}

// All objects with destructors live outside the setjmp frame.
inline bool decode_png_raw(const std::vector<std::uint8_t>& bytes, Raster& r, std::vector<std::uint8_t>& pixels,
                           std::vector<png_bytep>& rows, PngReadState& st, std::string& error) {
  st.bytes = &bytes;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_error_to_state, png_warning_ignore);
  if (png == nullptr) {
    error = "cannot allocate PNG reader";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    error = "cannot allocate PNG info";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = st.message[0] != '\0' ? st.message : "PNG decode error";
    return false;
  }
  png_set_read_fn(png, &st, png_read_from_memory);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  } else if (depth != 8 && depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "unsupported bit depth " + std::to_string(depth);
    return false;
  }
  if ((color & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int out_depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "unsupported channel layout";
    return false;
  }
  const png_size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  r.width = static_cast<int>(width);
  r.height = static_cast<int>(height);
  r.channels = channels;
  r.maxcode = out_depth == 16 ? 65535U : 255U;
  return true;
}

inline Raster decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  Raster r;
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  PngReadState st;
  std::string error;
  if (!decode_png_raw(bytes, r, pixels, rows, st, error)) throw IoError(path, error);
  const std::size_t count = static_cast<std::size_t>(r.width) * r.height * r.channels;
  r.codes.resize(count);
  if (r.maxcode == 255U) {
    for (std::size_t i = 0; i < count; ++i) r.codes[i] = pixels[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      r.codes[i] = (static_cast<std::uint32_t>(pixels[2 * i]) << 8) | pixels[2 * i + 1];
    }
  }
  return r;
}

struct PngWriteState {
  std::vector<std::uint8_t>* out = nullptr;
  char message[256] = {};
};

extern "C" inline void png_write_to_memory(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + len);
}

extern "C" inline void png_flush_noop(png_structp) {}

extern "C" inline void png_write_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngWriteState*>(png_get_error_ptr(png));
  if (st != nullptr) std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

inline bool encode_png_raw(const Raster& r, const std::vector<png_bytep>& rows, PngWriteState& st, std::string& error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, png_write_error, png_warning_ignore);
  if (png == nullptr) {
    error = "cannot allocate PNG writer";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    error = "cannot allocate PNG info";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    error = st.message[0] != '\0' ? st.message : "PNG encode error";
    return false;
  }
  png_set_write_fn(png, &st, png_write_to_memory, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height),
               r.maxcode > 255 ? 16 : 8, r.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline std::vector<std::uint8_t> encode_png(const Raster& r, const std::string& path) {
  const bool wide = r.maxcode > 255;
  const std::size_t rowbytes = static_cast<std::size_t>(r.width) * r.channels * (wide ? 2 : 1);
  std::vector<std::uint8_t> pixels(rowbytes * r.height);
  for (std::size_t i = 0; i < r.codes.size(); ++i) {
    if (wide) {
      pixels[2 * i] = static_cast<std::uint8_t>(r.codes[i] >> 8);
      pixels[2 * i + 1] = static_cast<std::uint8_t>(r.codes[i] & 0xFF);
    } else {
      pixels[i] = static_cast<std::uint8_t>(r.codes[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(r.height));
  for (int y = 0; y < r.height; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + y * rowbytes;
  std::vector<std::uint8_t> out;
  PngWriteState st;
  st.out = &out;
  std::string error;
  if (!encode_png_raw(r, rows, st, error)) throw IoError(path, error);
  return out;
}

}  // namespace io_detail

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// failed write never leaves a partial file behind.
inline void write_file_atomic(const std::string& path, const void* data, std::size_t size) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError(path, "write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path, "cannot move temp file into place");
  }
}

inline void write_file_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

[[nodiscard]] inline AnyImage read_image(const std::string& path) {
  const std::vector<std::uint8_t> bytes = io_detail::read_file(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
    return io_detail::raster_to_image(io_detail::decode_png(bytes, path));
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    return io_detail::raster_to_image(io_detail::decode_pnm(bytes, path));
  }
  throw IoError(path, "unrecognized image format (expected PNG or binary PGM/PPM)");
}

/// Color inputs are reduced to luminance.
[[nodiscard]] inline GrayImage read_gray(const std::string& path) {
  AnyImage img = read_image(path);
  if (auto* g = std::get_if<GrayImage>(&img)) return std::move(*g);
  return to_luminance(std::get<ColorImage>(img));
}

/// Gray inputs are replicated into three planes.
[[nodiscard]] inline ColorImage read_color(const std::string& path) {
  AnyImage img = read_image(path);
  if (auto* c = std::get_if<ColorImage>(&img)) return std::move(*c);
  return replicate3(std::get<GrayImage>(img));
}

/// Format follows the extension: .png, .pgm (gray), .ppm (color), .pnm (either).
inline void write_image(const std::string& path, const AnyImage& img, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) throw IoError(path, "unsupported bit depth " + std::to_string(bit_depth));
  const std::uint32_t maxcode = bit_depth == 16 ? 65535U : 255U;
  const std::string ext = io_detail::lower_extension(path);
  const bool gray = std::holds_alternative<GrayImage>(img);
  const io_detail::Raster r = io_detail::image_to_raster(img, maxcode);
  std::vector<std::uint8_t> bytes;
  if (ext == ".png") {
    bytes = io_detail::encode_png(r, path);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    if (ext == ".pgm" && !gray) throw IoError(path, "cannot write a color image as PGM");
    if (ext == ".ppm" && gray) throw IoError(path, "cannot write a gray image as PPM");
    bytes = io_detail::encode_pnm(r);
  } else {
    throw IoError(path, "unsupported output extension '" + ext + "'");
  }
  write_file_atomic(path, bytes.data(), bytes.size());
}

}  // namespace msreg
