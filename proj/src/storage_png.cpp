// PNG codec on top of libpng. libpng reports errors through longjmp, so the
// decode and encode cores below keep every object with a destructor outside
// the setjmp frame.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "splatkit/errors.hpp"
#include "splatkit/storage.hpp"

namespace splatkit {

namespace {

struct ReadCursor {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t offset = 0;
  char message[256] = {};
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->size - cursor->offset < length) {
    std::snprintf(cursor->message, sizeof cursor->message, "unexpected end of PNG data");
    cursor->offset = cursor->size;
    png_error(png, "truncated");
  }
  std::memcpy(out, cursor->data + cursor->offset, length);
  cursor->offset += length;
}

void error_callback(png_structp png, png_const_charp msg) {
  auto* cursor = static_cast<ReadCursor*>(png_get_error_ptr(png));
  if (cursor != nullptr && cursor->message[0] == '\0') {
    std::snprintf(cursor->message, sizeof cursor->message, "%s", msg);
  }
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int channels = 0;
};

// Two-phase decode: header first (so the caller can size the buffer), then
// the pixel rows. Returns false with cursor.message set on failure.
bool decode_core(ReadCursor& cursor, PngHeader& header, std::vector<std::uint8_t>* pixels) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &cursor, error_callback,
                                           warning_callback);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  png_bytep* volatile rows = nullptr;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::free(rows);
    png_destroy_read_struct(&png, &info, nullptr);
    if (cursor.message[0] == '\0') std::snprintf(cursor.message, sizeof cursor.message, "bad PNG");
    return false;
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_set_crc_action(png, PNG_CRC_ERROR_QUIT, PNG_CRC_ERROR_QUIT);
  png_set_user_limits(png, 1u << 15, 1u << 15);
  png_read_info(png, info);

  int color_type = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
  png_read_update_info(png, info);

  header.width = png_get_image_width(png, info);
  header.height = png_get_image_height(png, info);
  header.bit_depth = png_get_bit_depth(png, info);
  header.channels = png_get_channels(png, info);

  if (pixels != nullptr) {
    const std::size_t stride = png_get_rowbytes(png, info);
    if (pixels->size() != stride * header.height) {
      std::snprintf(cursor.message, sizeof cursor.message, "PNG row size mismatch");
      png_error(png, "row size");
    }
    rows = static_cast<png_bytepp>(std::malloc(sizeof(png_bytep) * header.height));
    for (png_uint_32 y = 0; y < header.height; ++y) rows[y] = pixels->data() + y * stride;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
  }
  std::free(rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct WriteSink {
  std::vector<std::uint8_t>* out = nullptr;
};

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* sink = static_cast<WriteSink*>(png_get_io_ptr(png));
  sink->out->insert(sink->out->end(), data, data + length);
}

void flush_callback(png_structp) {}

bool encode_core(const std::uint8_t* pixels, png_uint_32 width, png_uint_32 height, int channels,
                 int bit_depth, WriteSink& sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  png_bytep* volatile rows = nullptr;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    std::free(rows);
    png_destroy_write_struct(&png, &info);
    return false;
  }
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                        PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
  png_set_write_fn(png, &sink, write_callback, flush_callback);
  png_set_IHDR(png, info, width, height, bit_depth, kColorTypes[channels - 1], PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  rows = static_cast<png_bytepp>(std::malloc(sizeof(png_bytep) * std::max<png_uint_32>(height, 1)));
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = const_cast<std::uint8_t*>(pixels) + y * stride;
  }
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  std::free(rows);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

DecodedPng decode_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
    throw ParseError("not a PNG file (bad signature)", ParseError::Location::kByte, 0);
  }

  ReadCursor cursor{bytes.data(), bytes.size()};
  PngHeader header;
  if (!decode_core(cursor, header, nullptr)) {
    throw ParseError(std::string("PNG decode failed: ") + cursor.message,
                     ParseError::Location::kByte, cursor.offset);
  }
  const std::size_t sample_bytes = header.bit_depth == 16 ? 2 : 1;
  const std::size_t raw_size = static_cast<std::size_t>(header.width) * header.height *
                               header.channels * sample_bytes;
  // Deflate cannot expand beyond ~1032:1; anything larger is a lying header.
  if (raw_size / 1100 > bytes.size()) {
    throw ParseError("PNG header declares " + std::to_string(header.width) + "x" +
                         std::to_string(header.height) + " pixels, inconsistent with file size",
                     ParseError::Location::kByte, 16);
  }
  std::vector<std::uint8_t> pixels(raw_size);
  cursor = ReadCursor{bytes.data(), bytes.size()};
  if (!decode_core(cursor, header, &pixels)) {
    throw ParseError(std::string("PNG decode failed: ") + cursor.message,
                     ParseError::Location::kByte, cursor.offset);
  }

  const std::size_t n = static_cast<std::size_t>(header.width) * header.height * header.channels;
  std::vector<float> values(n);
  if (header.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t code;
      std::memcpy(&code, &pixels[2 * i], 2);
      values[i] = static_cast<float>(code / 65535.0);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<float>(pixels[i] / 255.0);
  }
  DecodedPng out;
  out.image = Image(static_cast<int>(header.width), static_cast<int>(header.height),
                    header.channels, std::move(values));
  out.bit_depth = header.bit_depth == 16 ? 16 : 8;
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
  if (image.width() < 1 || image.height() < 1) {
    throw ShapeError("cannot encode an empty image as PNG");
  }
  const auto src = image.data();
  std::vector<std::uint8_t> pixels(src.size() * (bit_depth / 8));
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto code = static_cast<std::uint16_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 65535.0));
      std::memcpy(&pixels[2 * i], &code, 2);
    }
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) {
      pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0));
    }
  }
  std::vector<std::uint8_t> out;
  WriteSink sink{&out};
  if (!encode_core(pixels.data(), static_cast<png_uint_32>(image.width()),
                   static_cast<png_uint_32>(image.height()), image.channels(), bit_depth, sink)) {
    throw IoError("PNG encoding failed");
  }
  return out;
}

Image read_image(const std::filesystem::path& path, int* bit_depth) {
  const auto bytes = read_file(path);
  try {
    DecodedPng decoded = decode_png(bytes);
    if (bit_depth != nullptr) *bit_depth = decoded.bit_depth;
    return std::move(decoded.image);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.location_kind(), e.location());
  }
}

void write_image(const std::filesystem::path& path, const Image& image, int bit_depth) {
  write_file(path, encode_png(image, bit_depth));
}

}  // namespace splatkit
