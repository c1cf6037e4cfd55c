#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splatkit/geometry.hpp"
#include "splatkit/imaging.hpp"

namespace splatkit {

// PNG (8 or 16 bit, 1-4 channels). Codes map to [0,1] by division by the
// maximum code; writing rounds to the nearest code.

struct DecodedPng {
  Image image;
  int bit_depth = 8;
};

DecodedPng decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& image, int bit_depth = 8);

Image read_image(const std::filesystem::path& path, int* bit_depth = nullptr);
void write_image(const std::filesystem::path& path, const Image& image, int bit_depth = 8);

// PFM, grayscale "Pf" only. The sign of the scale line selects endianness
// (negative: little-endian). Files store rows bottom-up; rasters here are
// top-down, the codec flips.

Raster decode_pfm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pfm(const Raster& raster);

Raster read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Raster& raster);

// Middlebury .flo: float 202021.25, int32 width, int32 height, then
// interleaved float32 (du, dv), rows top-down, all little-endian.

inline constexpr float kFloMagic = 202021.25f;

FlowField decode_flo(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_flo(const FlowField& flow);

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const FlowField& flow);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Camera trajectories, one frame per line:
//
//   timestamp fx fy cx cy 0 0 r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
//
// Intrinsics are normalised by the image width (fx, cx) and height (fy, cy).
// The 3x4 matrix is world-to-camera [R|t]. Lines starting with '#' and
// blank lines are ignored, as is a leading single-token URL line.

/// Signed permutation applied to the camera axes of every pose, for
/// datasets whose camera frame is not x-right / y-down / z-forward.
/// axes[i] = k selects source axis |k|-1 with sign(k); the identity is {1, 2, 3}.
struct AxisConvention {
  std::array<int, 3> axes{1, 2, 3};

  /// Parses "x,-y,-z" style specs; throws ParameterError.
  static AxisConvention parse(std::string_view spec);
};

struct TrajectoryFrame {
  std::string timestamp;
  CameraFrame camera;
};

struct TrajectoryFile {
  std::vector<TrajectoryFrame> frames;
};

TrajectoryFile parse_trajectory(std::string_view text, int image_width, int image_height,
                                const AxisConvention& axes = {});
TrajectoryFile read_trajectory(const std::filesystem::path& path, int image_width,
                               int image_height, const AxisConvention& axes = {});

// Evaluation pairs.

struct EvalPairSpec {
  int src_index = 0;
  int tgt_index = 0;

  friend bool operator==(const EvalPairSpec&, const EvalPairSpec&) = default;
};

struct EvalPairMode {
  enum class Kind { kSkip, kRandom };
  Kind kind = Kind::kSkip;
  int amount = 5;  // k for skip, r for random

  static EvalPairMode skip(int k) { return {Kind::kSkip, k}; }
  static EvalPairMode random(int r) { return {Kind::kRandom, r}; }
};

/// Skip mode: (i, i+k) for every i with i+k < n. Random mode: one pair per
/// frame, target offset uniform on [-r, r] \ {0} among in-range offsets.
std::vector<EvalPairSpec> make_eval_pairs(int n_frames, EvalPairMode mode, std::uint64_t seed = 0);

}  // namespace splatkit
