#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>

#include "splatkit/geometry.hpp"
#include "splatkit/imaging.hpp"
#include "splatkit/random.hpp"
#include "splatkit/splatting.hpp"

namespace splatkit::testing {

inline Image random_image(int w, int h, int c, Rng& rng) {
  Image img(w, h, c);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

inline FlowField random_flow(int w, int h, double magnitude, Rng& rng) {
  FlowField flow(w, h);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    flow.du[i] = rng.uniform(-magnitude, magnitude);
    flow.dv[i] = rng.uniform(-magnitude, magnitude);
  }
  return flow;
}

inline ImportanceMap random_importance(int w, int h, double max_z, Rng& rng) {
  ImportanceMap imp(w, h);
  for (double& z : imp.z) z = rng.uniform(0.0, max_z);
  return imp;
}

inline FlowField shift_flow(int w, int h, double du, double dv = 0.0) {
  FlowField flow(w, h);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    flow.du[i] = du;
    flow.dv[i] = dv;
  }
  return flow;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("splatkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace splatkit::testing

namespace splatkit::testing {

/// Fronto-parallel two-layer scene (a near square over a far plane) viewed
/// by a rectified stereo pair. Gives flows with genuine depth edges.
struct SyntheticScene {
  Image x_src;
  Image x_tgt;
  FlowField flow;
  ImportanceMap importance;
};

inline SyntheticScene synthetic_scene(int w, int h, Rng& rng, double baseline = 0.4) {
  SyntheticScene s;
  s.x_src = random_image(w, h, 3, rng);
  s.x_tgt = random_image(w, h, 3, rng);
  Raster depth(w, h, 10.0);
  const int x0 = static_cast<int>(rng.uniform_int(w / 4, w / 2));
  const int y0 = static_cast<int>(rng.uniform_int(h / 4, h / 2));
  for (int y = y0; y < std::min(h, y0 + h / 3); ++y)
    for (int x = x0; x < std::min(w, x0 + w / 3); ++x) depth.at(x, y) = 2.0;
  const Intrinsics k{40.0, 40.0, (w - 1) / 2.0, (h - 1) / 2.0};
  const CameraFrame left = CameraFrame::identity(k);
  const CameraFrame right(k, Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1}, Vec3{-baseline, 0, 0});
  s.flow = flow_from_depth(DepthMap(depth), left, right);
  const Raster tgt_depth = s.flow.tgt_depth_raster();
  s.importance = importance_from_depth(tgt_depth, kDefaultBeta,
                                       depth_percentile_bounds(tgt_depth, s.flow.valid),
                                       s.flow.valid);
  return s;
}

}  // namespace splatkit::testing
