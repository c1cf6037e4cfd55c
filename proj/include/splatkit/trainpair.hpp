#pragma once

#include <cstdint>
#include <string>

#include "splatkit/geometry.hpp"
#include "splatkit/imaging.hpp"
#include "splatkit/splatting.hpp"

namespace splatkit {

inline constexpr double kDefaultEdgeThreshold = 1.0;

/// Splatting-error-simulation parameters.
struct SesParams {
  double edge_threshold = kDefaultEdgeThreshold;  // theta, flow-gradient magnitude
  double coverage = 0.2;                          // rho, target fraction of the edge support
  int blob_count = 16;                            // K rectangles per attempt
  std::uint64_t seed = 0;

  void validate() const;  // throws ParameterError
};

struct PairProvenance {
  std::string mode;  // "tpa" or "ses"
  double tau = kDefaultTau;
  SesParams ses;     // meaningful when mode == "ses"
  double achieved_error_coverage = 0.0;
};

struct TrainingPair {
  Image conditioned;
  Image target;
  Mask splat_mask;
  Mask error_mask;
  PairProvenance provenance;
};

/// Aligned pair: conditioned = x_tgt masked by the splat coverage of `flow`.
TrainingPair tpa_pair(const Image& x_src, const Image& x_tgt, const FlowField& flow,
                      const ImportanceMap& importance, double tau = kDefaultTau);

/// Binary mask where the combined Sobel magnitude of (du, dv) exceeds theta.
Mask edge_mask_from_flow(const FlowField& flow, double theta);

struct SplattedEdges {
  Image image;   // e_tgt
  Mask support;  // coverage of the edge-only splat
};

/// Splats x_src * edge_mask, with non-edge pixels excluded from accumulation.
SplattedEdges splat_edges(const Image& x_src, const Mask& edge_mask, const FlowField& flow,
                          const ImportanceMap& importance, double tau = kDefaultTau);

/// Seeded union of random rectangles intersected with `support`, resampled
/// until its share of the support lands in [rho/2, min(1, 2 rho)].
Mask gen_error_mask(const Mask& support, const SesParams& params);

/// conditioned <- e_tgt * m_error + conditioned * (1 - m_error).
TrainingPair ses_inject(const TrainingPair& tpa, const Image& e_tgt, const Mask& m_error);

/// Full error-simulation pipeline on top of tpa_pair.
TrainingPair ses_pair(const Image& x_src, const Image& x_tgt, const FlowField& flow,
                      const ImportanceMap& importance, const SesParams& params,
                      double tau = kDefaultTau);

/// Classical texture corruption used in place of a generative degradation
/// pass: patchwise colour jitter plus Gaussian blur inside random rectangles.
Image degrade_texture(const Image& x_tgt, double strength, std::uint64_t seed);

struct Composite {
  Image image;
  Mask mask;
};

/// Two-view composition: the better-covered view is primary and the other
/// fills its holes through a blurred blending mask. Ties favour `a`.
Composite compose_sparse(const SplatResult& a, const SplatResult& b, double sigma);

}  // namespace splatkit
