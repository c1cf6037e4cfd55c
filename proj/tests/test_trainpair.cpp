#include <cmath>

#include "doctest.h"
#include "splatkit/errors.hpp"
#include "splatkit/trainpair.hpp"
#include "support.hpp"

using namespace splatkit;
using splatkit::testing::random_image;
using splatkit::testing::shift_flow;
using splatkit::testing::synthetic_scene;

namespace {

SesParams ses_params(std::uint64_t seed, int blobs = 24, double coverage = 0.3) {
  SesParams p;
  p.seed = seed;
  p.blob_count = blobs;
  p.coverage = coverage;
  return p;
}

// A smooth-plus-noise image with enough structure for blur to matter.
Image textured(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = 0.5 + 0.3 * std::sin(0.7 * x + c) * std::cos(0.5 * y) +
                         0.15 * (rng.uniform() - 0.5);
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

double mean_abs_dev(const Image& a, const Image& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) acc += std::abs(a.data()[i] - b.data()[i]);
  return acc / a.data().size();
}

}  // namespace

TEST_CASE("tpa_pair: identity flow conditions on the full target") {
  Rng rng(1);
  const Image src = random_image(12, 9, 3, rng);
  const Image tgt = random_image(12, 9, 3, rng);
  const TrainingPair p = tpa_pair(src, tgt, FlowField(12, 9), ImportanceMap(12, 9));
  CHECK(p.conditioned == tgt);
  CHECK(p.target == tgt);
  for (float v : p.splat_mask.data()) CHECK(v == 1.0f);
  for (float v : p.error_mask.data()) CHECK(v == 0.0f);
  CHECK(p.provenance.mode == "tpa");
}

TEST_CASE("tpa_pair: integer shift keeps the target on covered columns only") {
  Rng rng(2);
  const int w = 14, h = 6, k = 5;
  const Image src = random_image(w, h, 3, rng);
  const Image tgt = random_image(w, h, 3, rng);
  const TrainingPair p = tpa_pair(src, tgt, shift_flow(w, h, k), ImportanceMap(w, h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        CHECK(p.conditioned.at(x, y, c) == (x >= k ? tgt.at(x, y, c) : 0.0f));
      }
    }
  }
}

TEST_CASE("tpa_pair: masking is idempotent and exact on random scenes") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = synthetic_scene(40, 30, rng);
    const TrainingPair p = tpa_pair(s.x_src, s.x_tgt, s.flow, s.importance);
    CHECK(apply_mask(p.conditioned, p.splat_mask) == p.conditioned);
    CHECK(p.splat_mask.is_binary());
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x)
        for (int c = 0; c < 3; ++c)
          CHECK(p.conditioned.at(x, y, c) ==
                (p.splat_mask.at(x, y) == 1.0f ? s.x_tgt.at(x, y, c) : 0.0f));
  }
  CHECK_THROWS_AS(tpa_pair(Image(4, 4, 3), Image(4, 5, 3), FlowField(4, 4), ImportanceMap(4, 4)),
                  ShapeError);
}

TEST_CASE("edge_mask_from_flow: constant flow has no edges") {
  const Mask m = edge_mask_from_flow(shift_flow(10, 8, 3.5, -1.0), 0.0);
  for (float v : m.data()) CHECK(v == 0.0f);
}

TEST_CASE("edge_mask_from_flow: a 10 px step fires below 40 and is silent above 40*sqrt(2)") {
  FlowField flow(12, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 6; x < 12; ++x) flow.du[static_cast<std::size_t>(y) * 12 + x] = 10.0;
  const Mask low = edge_mask_from_flow(flow, 39.0);
  for (int y = 1; y < 7; ++y) {
    CHECK(low.at(5, y) == 1.0f);
    CHECK(low.at(6, y) == 1.0f);
    CHECK(low.at(4, y) == 0.0f);
    CHECK(low.at(7, y) == 0.0f);
  }
  const Mask high = edge_mask_from_flow(flow, 40.0 * std::sqrt(2.0) + 0.01);
  for (float v : high.data()) CHECK(v == 0.0f);
  CHECK(low.is_binary());
  CHECK_THROWS_AS(edge_mask_from_flow(flow, -1.0), ParameterError);
}

TEST_CASE("splat_edges: empty mask, identity flow and subset coverage") {
  Rng rng(4);
  const Image src = random_image(16, 12, 3, rng);
  const auto empty = splat_edges(src, Mask(16, 12), FlowField(16, 12), ImportanceMap(16, 12));
  for (float v : empty.image.data()) CHECK(v == 0.0f);
  for (float v : empty.support.data()) CHECK(v == 0.0f);

  Mask edges(16, 12);
  for (int y = 3; y < 9; ++y) edges.at(7, y) = 1.0f;
  const auto ident = splat_edges(src, edges, FlowField(16, 12), ImportanceMap(16, 12));
  CHECK(ident.image == apply_mask(src, edges));
  CHECK(ident.support == edges);

  for (int trial = 0; trial < 5; ++trial) {
    const auto s = synthetic_scene(48, 32, rng);
    const Mask m_edge = edge_mask_from_flow(s.flow, kDefaultEdgeThreshold);
    const auto e = splat_edges(s.x_src, m_edge, s.flow, s.importance);
    const Mask all = splat_ones_mask(s.flow, s.importance);
    for (std::size_t i = 0; i < all.pixel_count(); ++i) {
      if (e.support[i] == 1.0f) CHECK(all[i] == 1.0f);
    }
  }
}

TEST_CASE("gen_error_mask: empty support, determinism, subset of support") {
  CHECK(gen_error_mask(Mask(20, 20), ses_params(1)) == Mask(20, 20));
  Mask support(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 32; ++x) support.at(x, y) = 1.0f;
  const Mask a = gen_error_mask(support, ses_params(99));
  const Mask b = gen_error_mask(support, ses_params(99));
  CHECK(a == b);
  CHECK(a.is_binary());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (a[i] == 1.0f) CHECK(support[i] == 1.0f);
  }
  CHECK(gen_error_mask(support, ses_params(99, 0)) == Mask(64, 64));
  SesParams bad = ses_params(1);
  bad.coverage = 1.5;
  CHECK_THROWS_AS(gen_error_mask(support, bad), ParameterError);
}

TEST_CASE("gen_error_mask: coverage stays in band over 100 seeds") {
  Mask support(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 32; ++x) support.at(x, y) = 1.0f;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Mask m = gen_error_mask(support, ses_params(seed, 50, 0.4));
    double on = 0;
    for (float v : m.data()) on += v;
    const double frac = on / (64.0 * 32.0);
    CHECK(frac >= 0.2);
    CHECK(frac <= 0.8);
  }
}

TEST_CASE("ses_inject: empty, full and local perturbation") {
  Rng rng(5);
  const auto s = synthetic_scene(32, 24, rng);
  const TrainingPair tpa = tpa_pair(s.x_src, s.x_tgt, s.flow, s.importance);
  const Image e_tgt = random_image(32, 24, 3, rng);

  const TrainingPair none = ses_inject(tpa, e_tgt, Mask(32, 24));
  CHECK(none.conditioned == tpa.conditioned);
  CHECK(none.target == tpa.target);
  CHECK(none.splat_mask == tpa.splat_mask);

  CHECK(ses_inject(tpa, e_tgt, Mask(32, 24, 1.0f)).conditioned == e_tgt);

  Mask partial(32, 24);
  for (int y = 5; y < 15; ++y)
    for (int x = 3; x < 20; ++x) partial.at(x, y) = 1.0f;
  const TrainingPair p = ses_inject(tpa, e_tgt, partial);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(p.conditioned.at(x, y, c) ==
              (partial.at(x, y) == 1.0f ? e_tgt.at(x, y, c) : tpa.conditioned.at(x, y, c)));
  CHECK(p.error_mask == partial);
}

TEST_CASE("ses_pair: K=0 equals TPA, fixed seed reproduces, differences stay in m_error") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = synthetic_scene(64, 48, rng);
    const TrainingPair tpa = tpa_pair(s.x_src, s.x_tgt, s.flow, s.importance);
    const TrainingPair zero = ses_pair(s.x_src, s.x_tgt, s.flow, s.importance, ses_params(trial, 0));
    CHECK(zero.conditioned == tpa.conditioned);

    const TrainingPair a = ses_pair(s.x_src, s.x_tgt, s.flow, s.importance, ses_params(trial));
    const TrainingPair b = ses_pair(s.x_src, s.x_tgt, s.flow, s.importance, ses_params(trial));
    CHECK(a.conditioned == b.conditioned);
    CHECK(a.error_mask == b.error_mask);
    CHECK(a.provenance.mode == "ses");
    CHECK(a.provenance.ses.seed == static_cast<std::uint64_t>(trial));

    std::size_t errors = 0;
    for (std::size_t i = 0; i < a.error_mask.pixel_count(); ++i) {
      errors += a.error_mask[i] == 1.0f;
      for (int c = 0; c < 3; ++c) {
        if (a.conditioned.data()[i * 3 + c] != tpa.conditioned.data()[i * 3 + c]) {
          CHECK(a.error_mask[i] == 1.0f);
        }
      }
      if (a.splat_mask[i] == 0.0f && a.error_mask[i] == 0.0f) {
        for (int c = 0; c < 3; ++c) CHECK(a.conditioned.data()[i * 3 + c] == 0.0f);
      }
    }
    CHECK(errors > 0);  // the scene has depth edges, so SES must inject something
  }
}

TEST_CASE("degrade_texture: identity at zero strength, seeded, monotone in strength") {
  const Image img = textured(64, 64, 1);
  CHECK(degrade_texture(img, 0.0, 5) == img);
  CHECK(degrade_texture(img, 0.7, 5) == degrade_texture(img, 0.7, 5));
  CHECK_THROWS_AS(degrade_texture(img, 1.5, 5), ParameterError);

  double mad_half = 0, mad_full = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    mad_half += mean_abs_dev(img, degrade_texture(img, 0.5, seed));
    mad_full += mean_abs_dev(img, degrade_texture(img, 1.0, seed));
  }
  CHECK(mad_half > 0.0);
  CHECK(mad_full > mad_half);
  const Image d = degrade_texture(img, 1.0, 3);
  for (float v : d.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("compose_sparse: full primary, complementary union, coverage rule") {
  Rng rng(7);
  const int w = 10, h = 10;
  auto make = [&](const Mask& mask) {
    SplatResult r{random_image(w, h, 3, rng), Raster(w, h), mask};
    r.image = apply_mask(r.image, mask);
    return r;
  };

  const SplatResult full = make(Mask(w, h, 1.0f));
  Mask half(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < 5; ++x) half.at(x, y) = 1.0f;
  const SplatResult partial = make(half);
  const Composite c1 = compose_sparse(full, partial, 2.0);
  CHECK(c1.image == full.image);
  for (float v : c1.mask.data()) CHECK(v == 1.0f);

  Mask other(w, h);
  for (std::size_t i = 0; i < other.pixel_count(); ++i) other[i] = 1.0f - half[i];
  const SplatResult complement = make(other);
  const Composite c2 = compose_sparse(partial, complement, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(c2.image.at(x, y, c) ==
              (x < 5 ? partial.image.at(x, y, c) : complement.image.at(x, y, c)));

  // a covers 90 pixels, b covers 95; they overlap on 85.
  Mask ma(w, h, 1.0f), mb(w, h, 1.0f);
  for (int x = 0; x < 10; ++x) ma.at(x, 0) = 0.0f;
  for (int x = 0; x < 5; ++x) mb.at(x, 9) = 0.0f;
  const SplatResult a = make(ma);
  const SplatResult b = make(mb);
  const Composite c3 = compose_sparse(a, b, 0.0);
  CHECK(c3.image.at(4, 4, 0) == b.image.at(4, 4, 0));
  CHECK(c3.image.at(4, 4, 0) != a.image.at(4, 4, 0));
  for (std::size_t i = 0; i < c3.mask.pixel_count(); ++i) {
    CHECK(c3.mask[i] == ((ma[i] == 1.0f || mb[i] == 1.0f) ? 1.0f : 0.0f));
  }

  // Neither valid: black and masked out.
  Mask ha(w, h, 1.0f), hb(w, h, 1.0f);
  ha.at(3, 3) = 0.0f;
  hb.at(3, 3) = 0.0f;
  const Composite c4 = compose_sparse(make(ha), make(hb), 1.5);
  CHECK(c4.mask.at(3, 3) == 0.0f);
  for (int c = 0; c < 3; ++c) CHECK(c4.image.at(3, 3, c) == 0.0f);
  CHECK_THROWS_AS(compose_sparse(make(ha), SplatResult{Image(4, 4, 3), Raster(4, 4), Mask(4, 4)}, 1.0),
                  ShapeError);
}
