#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "splatkit/imaging.hpp"

namespace splatkit {

using Mat3 = std::array<double, 9>;  // row-major
using Vec3 = std::array<double, 3>;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// Pinhole camera with a world-to-camera pose: X_cam = R * X_world + t.
///
/// Pixel centres sit at integer coordinates, (0,0) being the centre of the
/// top-left pixel; +x points right, +y down, +z forward. Depth is z-depth
/// (distance along the optical axis), not ray length.
class CameraFrame {
 public:
  /// Tolerance below which a rotation is accepted as-is.
  static constexpr double kOrthonormalTolerance = 1e-6;
  /// Rotations off by at most this much are projected onto SO(3); larger
  /// deviations are rejected.
  static constexpr double kRepairTolerance = 1e-3;

  /// Validates intrinsics and rotation; throws ValidationError.
  CameraFrame(const Intrinsics& intrinsics, const Mat3& rotation, const Vec3& translation);

  static CameraFrame identity(const Intrinsics& intrinsics);

  const Intrinsics& intrinsics() const noexcept { return k_; }
  const Mat3& rotation() const noexcept { return r_; }
  const Vec3& translation() const noexcept { return t_; }

  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;

 private:
  Intrinsics k_;
  Mat3 r_;
  Vec3 t_;
};

/// Per-pixel depth with an explicit validity bit. Non-finite and
/// non-positive inputs are marked invalid rather than kept as sentinels.
class DepthMap {
 public:
  DepthMap() = default;
  explicit DepthMap(const Raster& depth);

  int width() const noexcept { return depth_.width(); }
  int height() const noexcept { return depth_.height(); }
  const Raster& depth() const noexcept { return depth_; }
  const std::vector<std::uint8_t>& valid() const noexcept { return valid_; }

 private:
  Raster depth_;
  std::vector<std::uint8_t> valid_;
};

/// Per-pixel target-minus-source displacement in pixels ("view
/// transformation map"). Invalid pixels carry du = dv = 0 and never
/// contribute downstream. tgt_depth is present only for flows derived from
/// depth and poses.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> du;
  std::vector<double> dv;
  std::vector<std::uint8_t> valid;
  std::optional<std::vector<double>> tgt_depth;

  FlowField() = default;
  FlowField(int w, int h);

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  /// du/dv as rasters (invalid pixels read 0).
  Raster du_raster() const;
  Raster dv_raster() const;
  /// tgt_depth as a raster; invalid pixels read 0. Requires has value.
  Raster tgt_depth_raster() const;

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct Reprojection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  bool valid = false;
};

/// Minimum target-camera z for a point to count as in front of the camera.
inline constexpr double kBehindCameraEpsilon = 1e-6;

Reprojection reproject_point(double u, double v, double depth, const CameraFrame& src,
                             const CameraFrame& tgt);

FlowField flow_from_depth(const DepthMap& depth, const CameraFrame& src, const CameraFrame& tgt);

enum class StereoDirection { kLeftToRight, kRightToLeft };

/// Horizontal flow from a non-negative disparity map. Left-to-right moves
/// content by -disparity (leftward) in the right-eye view.
FlowField disparity_to_flow(const Raster& disparity, StereoDirection direction);

}  // namespace splatkit
