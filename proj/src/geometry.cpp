#include "splatkit/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "splatkit/errors.hpp"

namespace splatkit {

namespace {

using RowMat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

double orthonormality_error(const RowMat3& r) {
  const double gram = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(r.determinant() - 1.0);
  return std::max(gram, det);
}

}  // namespace

CameraFrame::CameraFrame(const Intrinsics& intrinsics, const Mat3& rotation,
                         const Vec3& translation)
    : k_(intrinsics), r_(rotation), t_(translation) {
  if (!(k_.fx > 0.0) || !(k_.fy > 0.0) || !std::isfinite(k_.fx) || !std::isfinite(k_.fy) ||
      !std::isfinite(k_.cx) || !std::isfinite(k_.cy)) {
    throw ValidationError("camera focal lengths must be finite and positive");
  }
  for (double v : r_) {
    if (!std::isfinite(v)) throw ValidationError("camera rotation has non-finite entries");
  }
  for (double v : t_) {
    if (!std::isfinite(v)) throw ValidationError("camera translation has non-finite entries");
  }

  Eigen::Map<RowMat3> r(r_.data());
  const double err = orthonormality_error(r);
  if (err <= kOrthonormalTolerance) return;
  if (err > kRepairTolerance) {
    throw ValidationError("camera rotation is not orthonormal (deviation " +
                          std::to_string(err) + ")");
  }
  // Nearest rotation in the Frobenius sense.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r.eval(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d nearest = svd.matrixU() * svd.matrixV().transpose();
  if (nearest.determinant() < 0.0) {
    throw ValidationError("camera rotation is a reflection (det < 0)");
  }
  r = nearest;
}

CameraFrame CameraFrame::identity(const Intrinsics& intrinsics) {
  return CameraFrame(intrinsics, Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1}, Vec3{0, 0, 0});
}

DepthMap::DepthMap(const Raster& depth) : depth_(depth), valid_(depth.pixel_count()) {
  for (std::size_t i = 0; i < depth_.pixel_count(); ++i) {
    const double d = depth_[i];
    valid_[i] = std::isfinite(d) && d > 0.0;
    if (!valid_[i]) depth_[i] = 0.0;
  }
}

FlowField::FlowField(int w, int h)
    : width(w),
      height(h),
      du(static_cast<std::size_t>(w) * h, 0.0),
      dv(static_cast<std::size_t>(w) * h, 0.0),
      valid(static_cast<std::size_t>(w) * h, 1) {}

Raster FlowField::du_raster() const { return Raster(width, height, du); }
Raster FlowField::dv_raster() const { return Raster(width, height, dv); }

Raster FlowField::tgt_depth_raster() const {
  if (!tgt_depth) throw ShapeError("flow field carries no target depth");
  return Raster(width, height, *tgt_depth);
}

Reprojection reproject_point(double u, double v, double depth, const CameraFrame& src,
                             const CameraFrame& tgt) {
  if (src == tgt) return {u, v, depth, depth > kBehindCameraEpsilon};

  const auto& ks = src.intrinsics();
  const auto& kt = tgt.intrinsics();
  const Eigen::Map<const RowMat3> rs(src.rotation().data());
  const Eigen::Map<const RowMat3> rt(tgt.rotation().data());
  const Eigen::Vector3d ts(src.translation()[0], src.translation()[1], src.translation()[2]);
  const Eigen::Vector3d tt(tgt.translation()[0], tgt.translation()[1], tgt.translation()[2]);

  const Eigen::Vector3d x_src(depth * (u - ks.cx) / ks.fx, depth * (v - ks.cy) / ks.fy, depth);
  const Eigen::Vector3d x_world = rs.transpose() * (x_src - ts);
  const Eigen::Vector3d x_tgt = rt * x_world + tt;

  Reprojection out;
  out.z = x_tgt.z();
  if (!(x_tgt.z() > kBehindCameraEpsilon)) return out;
  out.u = kt.fx * x_tgt.x() / x_tgt.z() + kt.cx;
  out.v = kt.fy * x_tgt.y() / x_tgt.z() + kt.cy;
  out.valid = std::isfinite(out.u) && std::isfinite(out.v);
  return out;
}

FlowField flow_from_depth(const DepthMap& depth, const CameraFrame& src, const CameraFrame& tgt) {
  const int w = depth.width();
  const int h = depth.height();
  FlowField flow(w, h);
  flow.tgt_depth.emplace(flow.pixel_count(), 0.0);
  auto& tgt_depth = *flow.tgt_depth;
  const auto& d = depth.depth();
  const auto& ok = depth.valid();

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!ok[i]) {
        flow.valid[i] = 0;
        continue;
      }
      const Reprojection r = reproject_point(x, y, d[i], src, tgt);
      if (!r.valid) {
        flow.valid[i] = 0;
        continue;
      }
      flow.du[i] = r.u - x;
      flow.dv[i] = r.v - y;
      tgt_depth[i] = r.z;
    }
  }
  return flow;
}

FlowField disparity_to_flow(const Raster& disparity, StereoDirection direction) {
  FlowField flow(disparity.width(), disparity.height());
  const double sign = direction == StereoDirection::kLeftToRight ? -1.0 : 1.0;
  for (std::size_t i = 0; i < disparity.pixel_count(); ++i) {
    const double s = disparity[i];
    if (!std::isfinite(s) || s < 0.0) {
      throw ParameterError("disparity must be finite and non-negative, got " + std::to_string(s) +
                           " at pixel " + std::to_string(i));
    }
    // 0 * -1 would give -0.0; keep zero disparity a bitwise zero flow.
    flow.du[i] = s == 0.0 ? 0.0 : sign * s;
  }
  return flow;
}

}  // namespace splatkit
