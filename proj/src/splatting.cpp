#include "splatkit/splatting.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "splatkit/errors.hpp"

namespace splatkit {

namespace {

// Source rows per counting-sort chunk. Fixed, so bucket contents never
// depend on the thread count.
constexpr int kChunkRows = 16;

void check_splat_inputs(const Image& src, const FlowField& flow, const ImportanceMap& importance,
                        double tau) {
  if (src.width() != flow.width || src.height() != flow.height ||
      importance.width != flow.width || importance.height != flow.height ||
      flow.du.size() != flow.pixel_count() || flow.dv.size() != flow.pixel_count() ||
      flow.valid.size() != flow.pixel_count() || importance.z.size() != flow.pixel_count()) {
    throw ShapeError("softmax_splat: image " + std::to_string(src.width()) + "x" +
                     std::to_string(src.height()) + ", flow " + std::to_string(flow.width) + "x" +
                     std::to_string(flow.height) + " and importance " +
                     std::to_string(importance.width) + "x" + std::to_string(importance.height) +
                     " must agree");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ParameterError("softmax_splat: tau must be positive, got " + std::to_string(tau));
  }
}

double percentile_of(std::vector<double>& values, double pct) {
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(k);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  const double lo = values[k];
  if (frac == 0.0 || k + 1 >= values.size()) return lo;
  const double hi =
      *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(k) + 1, values.end());
  return lo + frac * (hi - lo);
}

void check_percentiles(double lo, double hi) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 100.0)) {
    throw ParameterError("percentile bounds must satisfy 0 <= lo <= hi <= 100");
  }
}

}  // namespace

DepthBounds depth_percentile_bounds(const Raster& depth, std::span<const std::uint8_t> valid,
                                    double lo_percentile, double hi_percentile) {
  check_percentiles(lo_percentile, hi_percentile);
  if (!valid.empty() && valid.size() != depth.pixel_count()) {
    throw ShapeError("depth_percentile_bounds: validity length mismatch");
  }
  std::vector<double> values;
  values.reserve(depth.pixel_count());
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (!valid.empty() && !valid[i]) continue;
    const double d = depth[i];
    if (std::isfinite(d) && d > 0.0) values.push_back(d);
  }
  if (values.empty()) throw DegenerateInputError("no valid depth values for percentile bounds");
  DepthBounds b;
  b.lo = percentile_of(values, lo_percentile);
  b.hi = percentile_of(values, hi_percentile);
  return b;
}

ImportanceMap importance_from_depth(const Raster& depth, double beta, DepthBounds bounds,
                                    std::span<const std::uint8_t> valid) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ParameterError("importance beta must be >= 0, got " + std::to_string(beta));
  }
  if (!(bounds.lo > 0.0) || !(bounds.lo <= bounds.hi) || !std::isfinite(bounds.hi)) {
    throw ParameterError("importance depth bounds must satisfy 0 < lo <= hi");
  }
  if (!valid.empty() && valid.size() != depth.pixel_count()) {
    throw ShapeError("importance_from_depth: validity length mismatch");
  }
  ImportanceMap out(depth.width(), depth.height());
  const bool degenerate = bounds.lo == bounds.hi || beta == 0.0;
  const double inv_hi = 1.0 / bounds.hi;
  const double inv_range = degenerate ? 0.0 : 1.0 / (1.0 / bounds.lo - inv_hi);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    if (!valid.empty() && !valid[i]) continue;
    const double d = depth[i];
    if (!std::isfinite(d) || !(d > 0.0)) {
      throw ParameterError("importance_from_depth: depth must be positive, got " +
                           std::to_string(d) + " at pixel " + std::to_string(i));
    }
    if (degenerate) continue;
    const double clamped = std::clamp(d, bounds.lo, bounds.hi);
    out.z[i] = std::clamp(beta * (1.0 / clamped - inv_hi) * inv_range, 0.0, beta);
  }
  return out;
}

ImportanceMap importance_from_disparity(const Raster& disparity, double beta,
                                        double lo_percentile, double hi_percentile) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ParameterError("importance beta must be >= 0, got " + std::to_string(beta));
  }
  check_percentiles(lo_percentile, hi_percentile);
  ImportanceMap out(disparity.width(), disparity.height());
  if (disparity.pixel_count() == 0) return out;
  std::vector<double> values(disparity.data().begin(), disparity.data().end());
  for (double s : values) {
    if (!std::isfinite(s) || s < 0.0) {
      throw ParameterError("disparity must be finite and non-negative");
    }
  }
  const double lo = percentile_of(values, lo_percentile);
  const double hi = percentile_of(values, hi_percentile);
  if (lo == hi || beta == 0.0) return out;
  for (std::size_t i = 0; i < disparity.pixel_count(); ++i) {
    out.z[i] = beta * (std::clamp(disparity[i], lo, hi) - lo) / (hi - lo);
  }
  return out;
}

namespace {

// Runs the bucketed scatter and hands each finished target row to `sink` as
// (row, num[w * ch], den[w]). Rows are visited in parallel.
template <typename RowSink>
void splat_rows(const Image& src, const FlowField& flow, const ImportanceMap& importance,
                RowSink&& sink) {
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  const std::size_t n = src.pixel_count();
  const auto colors = src.data();

  // Pass 1: softmax weight and target-row bucket of every source pixel.
  // Bucket b holds landings whose top neighbour row is b - 1, so b spans
  // [0, h]; -1 marks a pixel that contributes nothing.
  std::vector<double> weight(n);
  std::vector<std::int32_t> bucket(n);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      bucket[i] = -1;
      if (!flow.valid[i]) continue;
      const double qx = x + flow.du[i];
      const double qy = y + flow.dv[i];
      if (!(qx > -1.0 && qx < w && qy > -1.0 && qy < h)) continue;
      bucket[i] = static_cast<std::int32_t>(std::floor(qy)) + 1;
      weight[i] = std::exp(importance.z[i]);
    }
  }

  // Pass 2: stable counting sort of source indices by bucket.
  const int n_buckets = h + 1;
  const int n_chunks = (h + kChunkRows - 1) / kChunkRows;
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_chunks) * n_buckets, 0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n_chunks; ++c) {
    std::size_t* row = &counts[static_cast<std::size_t>(c) * n_buckets];
    const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows * w;
    const std::size_t end = std::min(n, begin + static_cast<std::size_t>(kChunkRows) * w);
    for (std::size_t i = begin; i < end; ++i) {
      if (bucket[i] >= 0) ++row[bucket[i]];
    }
  }
  std::vector<std::size_t> bucket_start(static_cast<std::size_t>(n_buckets) + 1, 0);
  {
    std::size_t running = 0;
    for (int b = 0; b < n_buckets; ++b) {
      bucket_start[b] = running;
      for (int c = 0; c < n_chunks; ++c) {
        std::size_t& slot = counts[static_cast<std::size_t>(c) * n_buckets + b];
        const std::size_t count = slot;
        slot = running;  // becomes the chunk's write cursor
        running += count;
      }
    }
    bucket_start[n_buckets] = running;
  }
  std::vector<std::uint32_t> order(bucket_start[n_buckets]);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n_chunks; ++c) {
    std::size_t* cursor = &counts[static_cast<std::size_t>(c) * n_buckets];
    const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows * w;
    const std::size_t end = std::min(n, begin + static_cast<std::size_t>(kChunkRows) * w);
    for (std::size_t i = begin; i < end; ++i) {
      if (bucket[i] >= 0) order[cursor[bucket[i]]++] = static_cast<std::uint32_t>(i);
    }
  }

  // Pass 3: gather per target row. Row r receives the lower half of the
  // kernel from bucket r (top row r - 1) and the upper half from bucket
  // r + 1 (top row r). Each target pixel is written by exactly one thread.
#pragma omp parallel
  {
    std::vector<double> num(static_cast<std::size_t>(w) * ch);
    std::vector<double> den(static_cast<std::size_t>(w));

#pragma omp for schedule(dynamic, 4)
    for (int r = 0; r < h; ++r) {
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);

      for (int half = 0; half < 2; ++half) {
        const int b = r + half;
        for (std::size_t k = bucket_start[b]; k < bucket_start[b + 1]; ++k) {
          const std::uint32_t i = order[k];
          const int sx = static_cast<int>(i % static_cast<std::uint32_t>(w));
          const int sy = static_cast<int>(i / static_cast<std::uint32_t>(w));
          const double qx = sx + flow.du[i];
          const double qy = sy + flow.dv[i];
          const double ay = qy - std::floor(qy);
          const double ky = half == 0 ? ay : 1.0 - ay;
          if (ky == 0.0) continue;
          const double x0f = std::floor(qx);
          const int x0 = static_cast<int>(x0f);
          const double ax = qx - x0f;
          const double e = weight[i];
          const float* color = &colors[static_cast<std::size_t>(i) * ch];
          const double kx[2] = {1.0 - ax, ax};
          for (int j = 0; j < 2; ++j) {
            const int tx = x0 + j;
            if (tx < 0 || tx >= w || kx[j] == 0.0) continue;
            const double kw = kx[j] * ky * e;
            den[tx] += kw;
            double* acc = &num[static_cast<std::size_t>(tx) * ch];
            for (int c = 0; c < ch; ++c) acc[c] += kw * color[c];
          }
        }
      }
      sink(r, num.data(), den.data());
    }
  }
}

}  // namespace

SplatAccumulation softmax_splat_accumulate(const Image& src, const FlowField& flow,
                                           const ImportanceMap& importance) {
  check_splat_inputs(src, flow, importance, kDefaultTau);
  SplatAccumulation acc;
  acc.width = src.width();
  acc.height = src.height();
  acc.channels = src.channels();
  acc.color.assign(src.pixel_count() * src.channels(), 0.0);
  acc.weight.assign(src.pixel_count(), 0.0);
  const std::size_t row_len = static_cast<std::size_t>(acc.width);
  splat_rows(src, flow, importance, [&](int r, const double* num, const double* den) {
    std::copy(num, num + row_len * acc.channels, acc.color.begin() + r * row_len * acc.channels);
    std::copy(den, den + row_len, acc.weight.begin() + r * row_len);
  });
  return acc;
}

SplatResult softmax_splat(const Image& src, const FlowField& flow, const ImportanceMap& importance,
                          double tau) {
  check_splat_inputs(src, flow, importance, tau);
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  SplatResult result{Image(w, h, ch), Raster(w, h), Mask(w, h)};
  auto out = result.image.data();
  splat_rows(src, flow, importance, [&](int r, const double* num, const double* den) {
    const std::size_t row_base = static_cast<std::size_t>(r) * w;
    for (int x = 0; x < w; ++x) {
      const std::size_t q = row_base + x;
      result.weight[q] = den[x];
      if (den[x] < tau) continue;
      result.mask[q] = 1.0f;
      for (int c = 0; c < ch; ++c) {
        const double v = num[static_cast<std::size_t>(x) * ch + c] / den[x];
        out[q * ch + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  });
  return result;
}

Mask splat_ones_mask(const FlowField& flow, const ImportanceMap& importance, double tau) {
  const Image ones(flow.width, flow.height, 1, 1.0f);
  return softmax_splat(ones, flow, importance, tau).mask;
}

}  // namespace splatkit
