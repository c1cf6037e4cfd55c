// Sequential reference for softmax_splat. Deliberately the textbook
// formulation: one pass over source pixels in raster order, scattering into
// full-frame accumulators. No tiling, no buckets, no OpenMP.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "splatkit/errors.hpp"
#include "splatkit/splatting.hpp"

namespace splatkit {

SplatResult splat_oracle(const Image& src, const FlowField& flow, const ImportanceMap& importance,
                         double tau) {
  if (src.width() != flow.width || src.height() != flow.height ||
      importance.width != flow.width || importance.height != flow.height) {
    throw ShapeError("splat_oracle: operand dimensions differ");
  }
  if (!(tau > 0.0)) throw ParameterError("splat_oracle: tau must be positive");

  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  std::vector<double> num(src.pixel_count() * ch, 0.0);
  std::vector<double> den(src.pixel_count(), 0.0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (!flow.valid[p]) continue;
      const double tx = x + flow.du[p];
      const double ty = y + flow.dv[p];
      if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
      const double fx = std::floor(tx);
      const double fy = std::floor(ty);
      const double e = std::exp(importance.z[p]);
      for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
          const double k = (1.0 - std::abs(tx - (fx + dx))) * (1.0 - std::abs(ty - (fy + dy)));
          if (k == 0.0) continue;
          const double qx = fx + dx;
          const double qy = fy + dy;
          if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
          const std::size_t q = static_cast<std::size_t>(qy) * w + static_cast<std::size_t>(qx);
          den[q] += k * e;
          for (int c = 0; c < ch; ++c) num[q * ch + c] += k * e * src.data()[p * ch + c];
        }
      }
    }
  }

  SplatResult out{Image(w, h, ch), Raster(w, h), Mask(w, h)};
  for (std::size_t q = 0; q < src.pixel_count(); ++q) {
    out.weight[q] = den[q];
    if (den[q] < tau) continue;
    out.mask[q] = 1.0f;
    for (int c = 0; c < ch; ++c) {
      out.image.data()[q * ch + c] =
          static_cast<float>(std::clamp(num[q * ch + c] / den[q], 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace splatkit
