#pragma once

#include <optional>

#include "splatkit/imaging.hpp"

namespace splatkit {

inline constexpr double kPsnrCapDb = 99.0;

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double valid_fraction = 1.0;
};

/// Peak signal-to-noise ratio for unit peak. With a mask, only pixels with
/// mask >= 0.5 are counted. Zero error is reported as kPsnrCapDb.
double psnr(const Image& a, const Image& b, const Mask* mask = nullptr);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, unit peak, averaged over the valid window positions and all
/// channels. Requires at least 11x11.
double ssim(const Image& a, const Image& b);

/// Per-pixel mean over channels of |a - b|, as a one-channel image.
Image diff_map(const Image& a, const Image& b);

MetricReport evaluate(const Image& reference, const Image& test, const Mask* mask = nullptr);

}  // namespace splatkit
