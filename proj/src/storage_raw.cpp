#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "splatkit/errors.hpp"
#include "splatkit/random.hpp"
#include "splatkit/storage.hpp"

namespace splatkit {

static_assert(std::endian::native == std::endian::little,
              "raw float codecs assume a little-endian host");

namespace {

constexpr int kMaxDimension = 1 << 16;

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Reads one whitespace-delimited header token; `pos` ends on the delimiter.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
  const std::size_t begin = pos;
  while (pos < bytes.size() && !is_space(bytes[pos]) && pos - begin < 64) ++pos;
  if (begin == pos) throw ParseError("PFM header ended early", ParseError::Location::kByte, pos);
  return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(begin),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos));
}

int parse_dimension(const std::string& token, std::size_t offset, const char* what) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || value < 1 || value > kMaxDimension) {
    throw ParseError(std::string("invalid PFM ") + what + " '" + token + "'",
                     ParseError::Location::kByte, offset);
  }
  return static_cast<int>(value);
}

float load_float(const std::uint8_t* p, bool little_endian) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if (!little_endian) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

void store_float(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  std::uint8_t b[4];
  std::memcpy(b, &bits, 4);
  out.insert(out.end(), b, b + 4);
}

void store_int32(std::vector<std::uint8_t>& out, std::int32_t v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

// --- PFM -------------------------------------------------------------------

Raster decode_pfm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  if (magic == "PF") {
    throw UnsupportedVariantError("colour PFM ('PF') is not supported, expected 'Pf'",
                                  ParseError::Location::kByte, 0);
  }
  if (magic != "Pf") {
    throw ParseError("not a PFM file (magic '" + magic + "')", ParseError::Location::kByte, 0);
  }
  std::size_t at = pos;
  const int width = parse_dimension(next_token(bytes, pos), at, "width");
  at = pos;
  const int height = parse_dimension(next_token(bytes, pos), at, "height");
  at = pos;
  const std::string scale_token = next_token(bytes, pos);
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(scale_token, &used);
    if (used != scale_token.size()) scale = 0.0;
  } catch (const std::exception&) {
    scale = 0.0;
  }
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw ParseError("invalid PFM scale '" + scale_token + "'", ParseError::Location::kByte, at);
  }
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    throw ParseError("PFM header missing terminator", ParseError::Location::kByte, pos);
  }
  ++pos;  // exactly one whitespace byte separates header and data

  const bool little_endian = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  const std::size_t expected = pos + count * 4;
  if (bytes.size() < expected) {
    throw ParseError("PFM data truncated: need " + std::to_string(count * 4) + " bytes",
                     ParseError::Location::kByte, bytes.size());
  }
  if (bytes.size() > expected) {
    throw ParseError("trailing bytes after PFM data", ParseError::Location::kByte, expected);
  }

  Raster out(width, height);
  for (int fy = 0; fy < height; ++fy) {
    const int y = height - 1 - fy;  // file rows are bottom-up
    for (int x = 0; x < width; ++x) {
      const std::size_t offset = pos + (static_cast<std::size_t>(fy) * width + x) * 4;
      out.at(x, y) = load_float(&bytes[offset], little_endian);
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_pfm(const Raster& raster) {
  if (raster.width() < 1 || raster.height() < 1) throw ShapeError("cannot encode an empty PFM");
  const std::string header =
      "Pf\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n-1\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + raster.pixel_count() * 4);
  for (int fy = 0; fy < raster.height(); ++fy) {
    const int y = raster.height() - 1 - fy;
    for (int x = 0; x < raster.width(); ++x) store_float(out, static_cast<float>(raster.at(x, y)));
  }
  return out;
}

Raster read_pfm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_pfm(bytes);
  } catch (const UnsupportedVariantError& e) {
    throw UnsupportedVariantError(path.string() + ": " + e.detail(), e.location_kind(),
                                  e.location());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.location_kind(), e.location());
  }
}

void write_pfm(const std::filesystem::path& path, const Raster& raster) {
  write_file(path, encode_pfm(raster));
}

// --- Middlebury .flo -------------------------------------------------------

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) {
    throw ParseError(".flo header truncated", ParseError::Location::kByte, bytes.size());
  }
  const float magic = load_float(bytes.data(), true);
  if (magic != kFloMagic) {
    throw ParseError(".flo magic mismatch: expected 202021.25 (\"PIEH\")",
                     ParseError::Location::kByte, 0);
  }
  std::int32_t width;
  std::int32_t height;
  std::memcpy(&width, bytes.data() + 4, 4);
  std::memcpy(&height, bytes.data() + 8, 4);
  if (width < 1 || width > kMaxDimension) {
    throw ParseError(".flo width " + std::to_string(width) + " out of range",
                     ParseError::Location::kByte, 4);
  }
  if (height < 1 || height > kMaxDimension) {
    throw ParseError(".flo height " + std::to_string(height) + " out of range",
                     ParseError::Location::kByte, 8);
  }
  const std::size_t count = static_cast<std::size_t>(width) * height;
  const std::size_t expected = 12 + count * 8;
  if (bytes.size() < expected) {
    throw ParseError(".flo data truncated", ParseError::Location::kByte, bytes.size());
  }
  if (bytes.size() > expected) {
    throw ParseError("trailing bytes after .flo data", ParseError::Location::kByte, expected);
  }
  FlowField flow(width, height);
  for (std::size_t i = 0; i < count; ++i) {
    flow.du[i] = load_float(bytes.data() + 12 + 8 * i, true);
    flow.dv[i] = load_float(bytes.data() + 16 + 8 * i, true);
  }
  return flow;
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  if (flow.width < 1 || flow.height < 1) throw ShapeError("cannot encode an empty flow field");
  std::vector<std::uint8_t> out;
  out.reserve(12 + flow.pixel_count() * 8);
  store_float(out, kFloMagic);
  store_int32(out, flow.width);
  store_int32(out, flow.height);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    store_float(out, static_cast<float>(flow.du[i]));
    store_float(out, static_cast<float>(flow.dv[i]));
  }
  return out;
}

FlowField read_flo(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_flo(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.location_kind(), e.location());
  }
}

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  write_file(path, encode_flo(flow));
}

// --- Evaluation pairs ------------------------------------------------------

std::vector<EvalPairSpec> make_eval_pairs(int n_frames, EvalPairMode mode, std::uint64_t seed) {
  std::vector<EvalPairSpec> pairs;
  if (mode.kind == EvalPairMode::Kind::kSkip) {
    if (mode.amount < 1) throw ParameterError("skip distance must be >= 1");
    if (n_frames <= mode.amount) {
      throw DegenerateInputError("need more than " + std::to_string(mode.amount) +
                                 " frames for skip " + std::to_string(mode.amount) + ", got " +
                                 std::to_string(n_frames));
    }
    for (int i = 0; i + mode.amount < n_frames; ++i) pairs.push_back({i, i + mode.amount});
    return pairs;
  }

  if (mode.amount < 1) throw ParameterError("random offset radius must be >= 1");
  if (n_frames < 2) throw DegenerateInputError("random pairs need at least 2 frames");
  Rng rng(seed);
  for (int i = 0; i < n_frames; ++i) {
    // In-range offsets are [lo, -1] and [1, hi]; drawing uniformly over them
    // is the same distribution as resampling out-of-range draws.
    const int lo = std::max(-mode.amount, -i);
    const int hi = std::min(mode.amount, n_frames - 1 - i);
    const int choices = (hi - lo + 1) - 1;
    int delta = static_cast<int>(rng.uniform_int(0, choices - 1)) + lo;
    if (delta >= 0) ++delta;
    pairs.push_back({i, i + delta});
  }
  return pairs;
}

}  // namespace splatkit
