#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "splatkit/geometry.hpp"
#include "splatkit/imaging.hpp"

namespace splatkit {

inline constexpr double kDefaultBeta = 20.0;
inline constexpr double kDefaultTau = 1e-4;
inline constexpr double kDefaultLowPercentile = 1.0;
inline constexpr double kDefaultHighPercentile = 99.0;

/// Per-source-pixel softmax importance, in [0, beta].
struct ImportanceMap {
  int width = 0;
  int height = 0;
  std::vector<double> z;

  ImportanceMap() = default;
  ImportanceMap(int w, int h, double fill = 0.0)
      : width(w), height(h), z(static_cast<std::size_t>(w) * h, fill) {}
};

struct SplatResult {
  Image image;    // normalised colours, 0 where mask is 0
  Raster weight;  // accumulated softmax denominator
  Mask mask;      // 1 where weight >= tau
};

struct DepthBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Linear-interpolated percentiles of the depths flagged valid (all pixels
/// when `valid` is empty). Throws DegenerateInputError if none are valid.
DepthBounds depth_percentile_bounds(const Raster& depth, std::span<const std::uint8_t> valid,
                                    double lo_percentile = kDefaultLowPercentile,
                                    double hi_percentile = kDefaultHighPercentile);

/// z = beta * (1/clamp(d, lo, hi) - 1/hi) / (1/lo - 1/hi); z == 0 when
/// lo == hi. Pixels flagged invalid get z = 0 and are not range-checked.
ImportanceMap importance_from_depth(const Raster& depth, double beta, DepthBounds bounds,
                                    std::span<const std::uint8_t> valid = {});

/// Disparity proxy for importance: z = beta * (clamp(s, lo, hi) - lo) / (hi - lo),
/// which is the inverse-depth formula with depth = 1/disparity.
ImportanceMap importance_from_disparity(const Raster& disparity, double beta,
                                        double lo_percentile = kDefaultLowPercentile,
                                        double hi_percentile = kDefaultHighPercentile);

/// Depth-weighted softmax forward splatting, OpenMP-parallel.
///
/// Each valid source pixel p lands at q = p + flow(p) and is spread over the
/// (up to) four integer neighbours with the bilinear kernel, weighted by
/// exp(z(p)). Accumulation is double precision. Contributions are bucketed
/// by target row in source order, so the result is bit-identical for any
/// thread count.
SplatResult softmax_splat(const Image& src, const FlowField& flow, const ImportanceMap& importance,
                          double tau = kDefaultTau);

/// Unnormalised softmax sums in double precision: `color` holds
/// sum(k * exp(z) * c) per pixel and channel, `weight` holds sum(k * exp(z)).
struct SplatAccumulation {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> color;
  std::vector<double> weight;

  /// Normalised colour num/den, or 0 where the weight is zero.
  double normalized(int x, int y, int c) const {
    const std::size_t q = static_cast<std::size_t>(y) * width + x;
    return weight[q] > 0.0 ? color[q * channels + c] / weight[q] : 0.0;
  }
};

/// The accumulation stage of softmax_splat, exposed for callers that need
/// the sums before single-precision storage.
SplatAccumulation softmax_splat_accumulate(const Image& src, const FlowField& flow,
                                           const ImportanceMap& importance);

/// Naive sequential scatter computing the same quantity as softmax_splat.
/// Kept as the reference for tests and benchmarks; intended for small inputs.
SplatResult splat_oracle(const Image& src, const FlowField& flow, const ImportanceMap& importance,
                         double tau = kDefaultTau);

/// Binary coverage mask of the flow: the mask of splatting an all-ones image.
Mask splat_ones_mask(const FlowField& flow, const ImportanceMap& importance,
                     double tau = kDefaultTau);

}  // namespace splatkit
