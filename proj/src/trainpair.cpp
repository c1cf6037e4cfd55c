#include "splatkit/trainpair.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splatkit/errors.hpp"
#include "splatkit/random.hpp"

namespace splatkit {

namespace {

constexpr int kMaxErrorMaskRounds = 10;
constexpr int kMinRectSide = 4;
constexpr int kJitterPatch = 16;
constexpr double kMaxJitter = 0.1;
constexpr double kBlurCoverage = 0.3;

void check_pair_dims(const Image& x_src, const Image& x_tgt, const FlowField& flow,
                     const ImportanceMap& importance) {
  if (!x_src.same_shape(x_tgt) || x_src.width() != flow.width || x_src.height() != flow.height ||
      importance.width != flow.width || importance.height != flow.height) {
    throw ShapeError("training pair inputs differ in shape");
  }
}

// Union of `count` random rectangles, restricted to the support.
Mask draw_rectangles(const Mask& support, int count, Rng& rng) {
  const int w = support.width();
  const int h = support.height();
  const int max_side = std::max(8, w / 8);
  Mask out(w, h);
  for (int k = 0; k < count; ++k) {
    const int rw = static_cast<int>(rng.uniform_int(kMinRectSide, max_side));
    const int rh = static_cast<int>(rng.uniform_int(kMinRectSide, max_side));
    const int x0 = static_cast<int>(rng.uniform_int(0, w - 1));
    const int y0 = static_cast<int>(rng.uniform_int(0, h - 1));
    for (int y = y0; y < std::min(h, y0 + rh); ++y) {
      for (int x = x0; x < std::min(w, x0 + rw); ++x) {
        if (support.at(x, y) >= 0.5f) out.at(x, y) = 1.0f;
      }
    }
  }
  return out;
}

}  // namespace

void SesParams::validate() const {
  if (!(edge_threshold >= 0.0) || !std::isfinite(edge_threshold)) {
    throw ParameterError("SES edge threshold must be >= 0");
  }
  if (!(coverage >= 0.0 && coverage <= 1.0)) {
    throw ParameterError("SES coverage must lie in [0,1]");
  }
  if (blob_count < 0) throw ParameterError("SES blob count must be >= 0");
}

TrainingPair tpa_pair(const Image& x_src, const Image& x_tgt, const FlowField& flow,
                      const ImportanceMap& importance, double tau) {
  check_pair_dims(x_src, x_tgt, flow, importance);
  TrainingPair pair;
  pair.splat_mask = splat_ones_mask(flow, importance, tau);
  pair.conditioned = apply_mask(x_tgt, pair.splat_mask);
  pair.target = x_tgt;
  pair.error_mask = Mask(x_tgt.width(), x_tgt.height());
  pair.provenance.mode = "tpa";
  pair.provenance.tau = tau;
  return pair;
}

Mask edge_mask_from_flow(const FlowField& flow, double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw ParameterError("edge threshold must be >= 0, got " + std::to_string(theta));
  }
  const Raster gu = sobel_magnitude(flow.du_raster());
  const Raster gv = sobel_magnitude(flow.dv_raster());
  Mask out(flow.width, flow.height);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    out[i] = std::sqrt(gu[i] * gu[i] + gv[i] * gv[i]) > theta ? 1.0f : 0.0f;
  }
  return out;
}

SplattedEdges splat_edges(const Image& x_src, const Mask& edge_mask, const FlowField& flow,
                          const ImportanceMap& importance, double tau) {
  if (!same_dims(x_src, edge_mask) || x_src.width() != flow.width ||
      x_src.height() != flow.height) {
    throw ShapeError("splat_edges inputs differ in shape");
  }
  const Image e_src = apply_mask(x_src, edge_mask);
  FlowField edge_flow = flow;
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    if (edge_mask[i] < 0.5f) {
      edge_flow.valid[i] = 0;
      edge_flow.du[i] = 0.0;
      edge_flow.dv[i] = 0.0;
    }
  }
  SplatResult splat = softmax_splat(e_src, edge_flow, importance, tau);
  return {std::move(splat.image), std::move(splat.mask)};
}

Mask gen_error_mask(const Mask& support, const SesParams& params) {
  params.validate();
  const int w = support.width();
  const int h = support.height();
  std::size_t support_count = 0;
  for (float v : support.data()) support_count += v >= 0.5f;
  if (support_count == 0 || params.blob_count == 0 || w == 0 || h == 0) return Mask(w, h);

  const double lo = params.coverage / 2.0;
  const double hi = std::min(1.0, 2.0 * params.coverage);
  Rng rng(params.seed);
  Mask best;
  double best_distance = INFINITY;
  for (int round = 0; round < kMaxErrorMaskRounds; ++round) {
    Mask attempt = draw_rectangles(support, params.blob_count, rng);
    std::size_t on = 0;
    for (float v : attempt.data()) on += v >= 0.5f;
    const double frac = static_cast<double>(on) / static_cast<double>(support_count);
    if (frac >= lo && frac <= hi) return attempt;
    const double distance = std::abs(frac - params.coverage);
    if (distance < best_distance) {
      best_distance = distance;
      best = std::move(attempt);
    }
  }
  return best;
}

TrainingPair ses_inject(const TrainingPair& tpa, const Image& e_tgt, const Mask& m_error) {
  if (!tpa.conditioned.same_shape(e_tgt) || !same_dims(e_tgt, m_error)) {
    throw ShapeError("ses_inject operands differ in shape");
  }
  TrainingPair out = tpa;
  out.conditioned = blend(e_tgt, tpa.conditioned, m_error);
  out.error_mask = m_error;
  return out;
}

TrainingPair ses_pair(const Image& x_src, const Image& x_tgt, const FlowField& flow,
                      const ImportanceMap& importance, const SesParams& params, double tau) {
  params.validate();
  check_pair_dims(x_src, x_tgt, flow, importance);
  TrainingPair pair = tpa_pair(x_src, x_tgt, flow, importance, tau);
  const Mask edges = edge_mask_from_flow(flow, params.edge_threshold);
  const SplattedEdges e_tgt = splat_edges(x_src, edges, flow, importance, tau);
  const Mask m_error = gen_error_mask(e_tgt.support, params);
  pair = ses_inject(pair, e_tgt.image, m_error);

  std::size_t support_count = 0;
  std::size_t error_count = 0;
  for (std::size_t i = 0; i < m_error.pixel_count(); ++i) {
    support_count += e_tgt.support[i] >= 0.5f;
    error_count += m_error[i] >= 0.5f;
  }
  pair.provenance.mode = "ses";
  pair.provenance.ses = params;
  pair.provenance.achieved_error_coverage =
      support_count == 0 ? 0.0
                         : static_cast<double>(error_count) / static_cast<double>(support_count);
  return pair;
}

Image degrade_texture(const Image& x_tgt, double strength, std::uint64_t seed) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw ParameterError("degradation strength must lie in [0,1]");
  }
  if (strength == 0.0 || x_tgt.empty()) return x_tgt;

  const int w = x_tgt.width();
  const int h = x_tgt.height();
  const int ch = x_tgt.channels();
  Rng rng(seed);

  // Patchwise colour jitter.
  Image jittered = x_tgt;
  const int px = (w + kJitterPatch - 1) / kJitterPatch;
  const int py = (h + kJitterPatch - 1) / kJitterPatch;
  std::vector<double> offsets(static_cast<std::size_t>(px) * py * ch);
  for (double& o : offsets) o = rng.uniform(-kMaxJitter * strength, kMaxJitter * strength);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t patch = static_cast<std::size_t>(y / kJitterPatch) * px + x / kJitterPatch;
      for (int c = 0; c < ch; ++c) {
        const double v = jittered.at(x, y, c) + offsets[patch * ch + c];
        jittered.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }

  // Blur inside random rectangles until they cover the target share.
  const Image blurred = gaussian_blur(jittered, 2.0 * strength);
  Mask region(w, h);
  const double target = kBlurCoverage * strength;
  const std::size_t total = x_tgt.pixel_count();
  std::size_t covered = 0;
  const int min_side = std::max(1, std::min(w, h) / 16);
  const int max_side = std::max(min_side, std::min(w, h) / 4);
  for (int attempt = 0; attempt < 10000 && static_cast<double>(covered) < target * total;
       ++attempt) {
    const int rw = static_cast<int>(rng.uniform_int(min_side, max_side));
    const int rh = static_cast<int>(rng.uniform_int(min_side, max_side));
    const int x0 = static_cast<int>(rng.uniform_int(0, w - 1));
    const int y0 = static_cast<int>(rng.uniform_int(0, h - 1));
    for (int y = y0; y < std::min(h, y0 + rh); ++y) {
      for (int x = x0; x < std::min(w, x0 + rw); ++x) {
        if (region.at(x, y) == 0.0f) {
          region.at(x, y) = 1.0f;
          ++covered;
        }
      }
    }
  }
  return blend(blurred, jittered, region);
}

Composite compose_sparse(const SplatResult& a, const SplatResult& b, double sigma) {
  if (!a.image.same_shape(b.image) || !same_dims(a.image, a.mask) ||
      !same_dims(b.image, b.mask)) {
    throw ShapeError("compose_sparse inputs differ in shape");
  }
  const bool a_primary = a.mask.coverage() >= b.mask.coverage();
  const SplatResult& primary = a_primary ? a : b;
  const SplatResult& secondary = a_primary ? b : a;

  Mask w = gaussian_blur(primary.mask, sigma);
  Mask combined(a.image.width(), a.image.height());
  for (std::size_t i = 0; i < w.pixel_count(); ++i) {
    const bool p = primary.mask[i] >= 0.5f;
    const bool s = secondary.mask[i] >= 0.5f;
    if (p && !s) {
      w[i] = 1.0f;
    } else if (!p && s) {
      w[i] = 0.0f;
    }
    combined[i] = (p || s) ? 1.0f : 0.0f;
  }
  Image image = blend(primary.image, secondary.image, w);
  // Both inputs are zero outside their masks already; make it explicit.
  image = apply_mask(image, combined);
  return {std::move(image), std::move(combined)};
}

}  // namespace splatkit
