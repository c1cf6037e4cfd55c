// splatkit command-line tool.
//
// Exit codes: 0 success, 1 invalid input (bad flags, parameters, shapes,
// malformed files), 2 I/O failure, 3 internal error.

#include <exception>
#include <iostream>
#include <new>

#include "CLI11.hpp"
#include "commands.hpp"
#include "splatkit/errors.hpp"
#include "splatkit/parallel.hpp"

using namespace splatkit;
using namespace splatkit::cli;

namespace {

void add_splat_options(CLI::App* cmd, SplatOptions& s) {
  cmd->add_option("--beta", s.beta, "Softmax importance sharpness")->capture_default_str();
  cmd->add_option("--tau", s.tau, "Minimum splat weight for a valid pixel")->capture_default_str();
  cmd->add_option("--lo-pct", s.lo_pct, "Lower depth percentile for importance")
      ->capture_default_str();
  cmd->add_option("--hi-pct", s.hi_pct, "Upper depth percentile for importance")
      ->capture_default_str();
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "splatkit: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-weighted softmax splatting toolkit"};
  app.require_subcommand(1);
  int jobs = 0;

  RenderOptions render;
  auto* c_render = app.add_subcommand("render", "Warp one trajectory frame into another");
  c_render->add_option("--image", render.image, "Source PNG")->required();
  c_render->add_option("--depth", render.depth, "Source depth PFM")->required();
  c_render->add_option("--trajectory", render.trajectory, "Camera trajectory file")->required();
  c_render->add_option("--src", render.src, "Source frame index")->required();
  c_render->add_option("--tgt", render.tgt, "Target frame index")->required();
  c_render->add_option("--axes", render.axes, "Camera axis convention")->capture_default_str();
  add_splat_options(c_render, render.splat);
  c_render->add_flag("--fill", render.fill, "Fill holes with push-pull");
  c_render->add_flag("--dump-flow", render.dump_flow, "Also write flow.flo");
  c_render->add_option("--out", render.out, "Output directory")->required();

  PairsOptions pairs;
  auto* c_pairs = app.add_subcommand("pairs", "Generate training pairs from a manifest");
  c_pairs->add_option("--manifest", pairs.manifest, "Manifest JSON")->required();
  c_pairs->add_option("--out", pairs.out, "Output directory")->required();
  c_pairs->add_flag("--strict", pairs.strict, "Fail on the first bad entry");

  StereoOptions stereo;
  auto* c_stereo = app.add_subcommand("stereo", "Synthesize right-eye views from disparity");
  c_stereo->add_option("--left", stereo.left, "Left-eye PNG frames")->required();
  c_stereo->add_option("--disparity", stereo.disparity, "Disparity PFM per frame")->required();
  add_splat_options(c_stereo, stereo.splat);
  c_stereo->add_option("--out", stereo.out, "Output directory")->required();

  ComposeOptions compose;
  auto* c_compose = app.add_subcommand("compose", "Merge two splatted views");
  c_compose->add_option("--view-a", compose.view_a)->required();
  c_compose->add_option("--mask-a", compose.mask_a)->required();
  c_compose->add_option("--view-b", compose.view_b)->required();
  c_compose->add_option("--mask-b", compose.mask_b)->required();
  c_compose->add_option("--sigma", compose.sigma, "Blending mask blur")->capture_default_str();
  c_compose->add_option("--out", compose.out, "Output PNG")->required();
  c_compose->add_option("--out-mask", compose.out_mask, "Output combined mask PNG");

  MetricsOptions metrics;
  auto* c_metrics = app.add_subcommand("metrics", "PSNR and SSIM between two images");
  c_metrics->add_option("--ref", metrics.ref, "Reference PNG or PFM")->required();
  c_metrics->add_option("--test", metrics.test, "Test PNG or PFM")->required();
  c_metrics->add_option("--mask", metrics.mask, "Valid-pixel mask");
  c_metrics->add_option("--diff", metrics.diff, "Write the difference map here");
  c_metrics->add_option("--out", metrics.out, "Write the JSON report here");

  EvalsetOptions evalset;
  auto* c_evalset = app.add_subcommand("evalset", "List evaluation frame pairs");
  c_evalset->add_option("--frames", evalset.frames, "Number of frames")->required();
  auto* o_skip = c_evalset->add_option("--skip", evalset.skip, "Fixed frame gap");
  auto* o_rand = c_evalset->add_option("--rand", evalset.rand, "Random offset radius");
  o_skip->excludes(o_rand);
  c_evalset->add_option("--seed", evalset.seed, "Seed for --rand");

  for (auto* cmd : {c_render, c_pairs, c_stereo, c_compose, c_metrics, c_evalset}) {
    cmd->add_option("--jobs", jobs, "Worker threads (0: all)")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    ScopedThreadCount threads(jobs > 0 ? jobs : omp_get_max_threads());
    pairs.jobs = jobs;
    stereo.jobs = jobs;
    if (*c_render) return cmd_render(render);
    if (*c_pairs) return cmd_pairs(pairs);
    if (*c_stereo) return cmd_stereo(stereo);
    if (*c_compose) return cmd_compose(compose);
    if (*c_metrics) return cmd_metrics(metrics);
    if (*c_evalset) return cmd_evalset(evalset);
    return 3;
  } catch (const IoError& e) {
    return report("i/o error", e, 2);
  } catch (const ParseError& e) {
    return report("parse error", e, 1);
  } catch (const Error& e) {
    return report("error", e, 1);
  } catch (const std::bad_alloc& e) {
    return report("out of memory", e, 3);
  } catch (const std::exception& e) {
    return report("internal error", e, 3);
  }
}
