#include "commands.hpp"

#include <omp.h>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "splatkit/errors.hpp"
#include "splatkit/geometry.hpp"
#include "splatkit/imaging.hpp"
#include "splatkit/metrics.hpp"
#include "splatkit/refine.hpp"
#include "splatkit/storage.hpp"
#include "splatkit/trainpair.hpp"

namespace splatkit::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kManifestSchema = 1;

Image mask_image(const Mask& m) {
  return Image(m.width(), m.height(), 1, std::vector<float>(m.data().begin(), m.data().end()));
}

bool is_pfm(const fs::path& p) {
  std::string ext = p.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".pfm";
}

// PNG, or a single-channel PFM holding values in [0,1].
Image load_any(const fs::path& p, int* bit_depth = nullptr) {
  if (!is_pfm(p)) return read_image(p, bit_depth);
  const Raster r = read_pfm(p);
  std::vector<float> values(r.pixel_count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(r[i]);
  if (bit_depth) *bit_depth = 16;
  try {
    return Image(r.width(), r.height(), 1, std::move(values));
  } catch (const ValidationError& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

Mask load_mask(const fs::path& p) {
  const Image img = load_any(p);
  std::vector<float> values(img.pixel_count());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      values[static_cast<std::size_t>(y) * img.width() + x] = img.at(x, y, 0);
  return Mask(img.width(), img.height(), std::move(values));
}

void write_json(const fs::path& p, const json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void check_same_dims(int w, int h, const Image& img, const std::string& what) {
  if (img.width() != w || img.height() != h) {
    throw ShapeError(what + " is " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()) + ", expected " + std::to_string(w) + "x" +
                     std::to_string(h));
  }
}

void check_raster_dims(const Raster& r, const Image& img, const std::string& what) {
  if (r.width() != img.width() || r.height() != img.height()) {
    throw ShapeError(what + " is " + std::to_string(r.width()) + "x" + std::to_string(r.height()) +
                     " but the image is " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()));
  }
}

const CameraFrame& frame_at(const TrajectoryFile& traj, int index, const char* which) {
  if (index < 0 || index >= static_cast<int>(traj.frames.size())) {
    throw ParameterError(std::string(which) + " index " + std::to_string(index) +
                         " out of range, trajectory has " + std::to_string(traj.frames.size()) +
                         " frames");
  }
  return traj.frames[static_cast<std::size_t>(index)].camera;
}

json splat_json(const SplatOptions& s) {
  return {{"beta", s.beta}, {"tau", s.tau}, {"lo_pct", s.lo_pct}, {"hi_pct", s.hi_pct}};
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04zu%s", stem, i, ext);
  return buf;
}

// Runs `body(i)` for every item across `jobs` threads. The exception from
// the lowest failing index is rethrown, so failures are reported the same
// way regardless of scheduling.
template <typename Body>
std::vector<std::exception_ptr> for_each_item(std::size_t count, int jobs, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  return errors;
}

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

// --- pairs manifest ----------------------------------------------------------

struct PairEntry {
  fs::path src_image;
  fs::path tgt_image;
  fs::path flow;
  fs::path depth;
  fs::path trajectory;
  std::string axes = "x,y,z";
  int src_idx = 0;
  int tgt_idx = 0;
  std::string mode;
  SplatOptions splat;
  SesParams ses;
  bool has_seed = false;
  std::string out_prefix;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

PairEntry parse_entry(const json& e, std::size_t index, const fs::path& base) {
  if (!e.is_object()) throw ValidationError("entry is not an object");
  PairEntry out;
  out.src_image = resolve(base, e.at("src_image").get<std::string>());
  out.tgt_image = resolve(base, e.at("tgt_image").get<std::string>());
  if (e.contains("flow")) {
    out.flow = resolve(base, e.at("flow").get<std::string>());
    if (e.contains("depth")) out.depth = resolve(base, e.at("depth").get<std::string>());
  } else if (e.contains("depth") && e.contains("trajectory")) {
    out.depth = resolve(base, e.at("depth").get<std::string>());
    out.trajectory = resolve(base, e.at("trajectory").get<std::string>());
    out.src_idx = e.at("src_idx").get<int>();
    out.tgt_idx = e.at("tgt_idx").get<int>();
    out.axes = e.value("axes", out.axes);
  } else {
    throw ValidationError("entry needs either 'flow' or 'depth' with 'trajectory'");
  }
  out.mode = e.value("mode", std::string("tpa"));
  if (out.mode != "tpa" && out.mode != "ses") {
    throw ValidationError("mode must be 'tpa' or 'ses', got '" + out.mode + "'");
  }
  const json params = e.value("params", json::object());
  if (!params.is_object()) throw ValidationError("'params' must be an object");
  out.splat.beta = params.value("beta", out.splat.beta);
  out.splat.tau = params.value("tau", out.splat.tau);
  out.splat.lo_pct = params.value("lo_pct", out.splat.lo_pct);
  out.splat.hi_pct = params.value("hi_pct", out.splat.hi_pct);
  out.ses.edge_threshold = params.value("theta", out.ses.edge_threshold);
  out.ses.coverage = params.value("rho", out.ses.coverage);
  out.ses.blob_count = params.value("K", out.ses.blob_count);
  if (e.contains("seed")) {
    out.ses.seed = e.at("seed").get<std::uint64_t>();
    out.has_seed = true;
  } else if (out.mode == "ses") {
    throw ValidationError("ses entries need an explicit 'seed'");
  }
  out.ses.validate();
  out.out_prefix = e.value("out_prefix", numbered("", index, ""));
  if (out.out_prefix.empty() || fs::path(out.out_prefix).is_absolute()) {
    throw ValidationError("'out_prefix' must be a non-empty relative path");
  }
  return out;
}

void run_entry(const PairEntry& entry, const fs::path& out_root) {
  int bit_depth = 8;
  const Image x_src = read_image(entry.src_image);
  const Image x_tgt = read_image(entry.tgt_image, &bit_depth);
  if (!x_src.same_shape(x_tgt)) throw ShapeError("source and target images differ in shape");

  FlowField flow;
  ImportanceMap importance(x_src.width(), x_src.height());
  json provenance;
  if (!entry.trajectory.empty()) {
    const Raster depth = read_pfm(entry.depth);
    check_raster_dims(depth, x_src, "depth map");
    const TrajectoryFile traj = read_trajectory(entry.trajectory, x_src.width(), x_src.height(),
                                                AxisConvention::parse(entry.axes));
    flow = flow_from_depth(DepthMap(depth), frame_at(traj, entry.src_idx, "source"),
                           frame_at(traj, entry.tgt_idx, "target"));
    const Raster tgt_depth = flow.tgt_depth_raster();
    const DepthBounds b =
        depth_percentile_bounds(tgt_depth, flow.valid, entry.splat.lo_pct, entry.splat.hi_pct);
    importance = importance_from_depth(tgt_depth, entry.splat.beta, b, flow.valid);
    provenance = {{"flow", "depth+trajectory"},
                  {"importance", "depth"},
                  {"src_idx", entry.src_idx},
                  {"tgt_idx", entry.tgt_idx},
                  {"axes", entry.axes},
                  {"depth_bounds", {b.lo, b.hi}}};
  } else {
    flow = read_flo(entry.flow);
    if (flow.width != x_src.width() || flow.height != x_src.height()) {
      throw ShapeError("flow field does not match the image size");
    }
    provenance = {{"flow", "file"}};
    if (!entry.depth.empty()) {
      const Raster depth = read_pfm(entry.depth);
      check_raster_dims(depth, x_src, "depth map");
      const DepthMap dm(depth);
      const DepthBounds b =
          depth_percentile_bounds(dm.depth(), dm.valid(), entry.splat.lo_pct, entry.splat.hi_pct);
      importance = importance_from_depth(dm.depth(), entry.splat.beta, b, dm.valid());
      provenance["importance"] = "depth";
      provenance["depth_bounds"] = {b.lo, b.hi};
    } else {
      provenance["importance"] = "uniform";
    }
  }

  const TrainingPair pair =
      entry.mode == "ses"
          ? ses_pair(x_src, x_tgt, flow, importance, entry.ses, entry.splat.tau)
          : tpa_pair(x_src, x_tgt, flow, importance, entry.splat.tau);

  const fs::path dir = out_root / entry.out_prefix;
  make_dirs(dir);
  write_image(dir / "cond.png", pair.conditioned, bit_depth);
  write_image(dir / "target.png", pair.target, bit_depth);
  write_image(dir / "splat_mask.png", mask_image(pair.splat_mask));
  write_image(dir / "error_mask.png", mask_image(pair.error_mask));

  json meta = {{"schema", kManifestSchema},
               {"mode", entry.mode},
               {"src_image", entry.src_image.string()},
               {"tgt_image", entry.tgt_image.string()},
               {"splat", splat_json(entry.splat)},
               {"source", provenance},
               {"splat_coverage", pair.splat_mask.coverage()}};
  if (entry.has_seed) meta["seed"] = entry.ses.seed;
  if (entry.mode == "ses") {
    meta["ses"] = {{"theta", entry.ses.edge_threshold},
                   {"rho", entry.ses.coverage},
                   {"K", entry.ses.blob_count},
                   {"achieved_error_coverage", pair.provenance.achieved_error_coverage}};
  }
  write_json(dir / "meta.json", meta);
}

}  // namespace

int cmd_render(const RenderOptions& opt) {
  int bit_depth = 8;
  const Image image = read_image(opt.image, &bit_depth);
  const Raster depth = read_pfm(opt.depth);
  check_raster_dims(depth, image, "depth map");
  const TrajectoryFile traj = read_trajectory(opt.trajectory, image.width(), image.height(),
                                              AxisConvention::parse(opt.axes));
  const CameraFrame& src = frame_at(traj, opt.src, "source");
  const CameraFrame& tgt = frame_at(traj, opt.tgt, "target");

  const FlowField flow = flow_from_depth(DepthMap(depth), src, tgt);
  const Raster tgt_depth = flow.tgt_depth_raster();
  const DepthBounds bounds =
      depth_percentile_bounds(tgt_depth, flow.valid, opt.splat.lo_pct, opt.splat.hi_pct);
  const ImportanceMap importance =
      importance_from_depth(tgt_depth, opt.splat.beta, bounds, flow.valid);
  const SplatResult splat = softmax_splat(image, flow, importance, opt.splat.tau);
  const Image view = opt.fill ? fill_pushpull(splat.image, splat.mask) : splat.image;

  const fs::path out(opt.out);
  make_dirs(out);
  write_image(out / "view.png", view, bit_depth);
  write_image(out / "mask.png", mask_image(splat.mask));
  write_pfm(out / "weight.pfm", splat.weight);
  if (opt.dump_flow) write_flo(out / "flow.flo", flow);

  json sidecar = {{"image", opt.image},
                  {"depth", opt.depth},
                  {"trajectory", opt.trajectory},
                  {"src", opt.src},
                  {"tgt", opt.tgt},
                  {"axes", opt.axes},
                  {"splat", splat_json(opt.splat)},
                  {"depth_bounds", {bounds.lo, bounds.hi}},
                  {"fill", opt.fill ? "pushpull" : "none"},
                  {"bit_depth", bit_depth},
                  {"coverage", splat.mask.coverage()}};
  write_json(out / "render.json", sidecar);
  return 0;
}

int cmd_pairs(const PairsOptions& opt) {
  const fs::path manifest_path(opt.manifest);
  const auto bytes = read_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(manifest_path.string() + ": invalid JSON", ParseError::Location::kByte,
                     e.byte);
  }
  if (!manifest.is_object() || !manifest.contains("schema") ||
      !manifest["schema"].is_number_integer() || manifest["schema"].get<int>() != kManifestSchema) {
    throw ValidationError(manifest_path.string() + ": expected \"schema\": 1");
  }
  if (!manifest.contains("entries") || !manifest["entries"].is_array()) {
    throw ValidationError(manifest_path.string() + ": missing \"entries\" array");
  }
  const json& entries = manifest["entries"];
  const fs::path base = manifest_path.parent_path();
  const fs::path out_root(opt.out);
  make_dirs(out_root);

  const auto errors = for_each_item(entries.size(), opt.jobs, [&](std::size_t i) {
    PairEntry entry;
    try {
      entry = parse_entry(entries[i], i, base);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed entry: ") + e.what());
    }
    run_entry(entry, out_root);
  });

  std::size_t failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    ++failed;
    if (opt.strict) {
      std::cerr << "splatkit: entry " << i << " failed\n";
      std::rethrow_exception(errors[i]);
    }
    std::cerr << "splatkit: skipping entry " << i << ": " << describe(errors[i]) << "\n";
  }
  std::cerr << "splatkit: wrote " << entries.size() - failed << " of " << entries.size()
            << " pairs\n";
  return 0;
}

int cmd_stereo(const StereoOptions& opt) {
  if (opt.left.size() != opt.disparity.size()) {
    throw ParameterError("got " + std::to_string(opt.left.size()) + " left images but " +
                         std::to_string(opt.disparity.size()) + " disparity maps");
  }
  if (opt.left.empty()) throw ParameterError("no frames given");
  const fs::path out(opt.out);
  make_dirs(out);

  std::vector<double> coverage(opt.left.size());
  const auto errors = for_each_item(opt.left.size(), opt.jobs, [&](std::size_t i) {
    int bit_depth = 8;
    const Image left = read_image(opt.left[i], &bit_depth);
    const Raster disparity = read_pfm(opt.disparity[i]);
    check_raster_dims(disparity, left, "disparity map " + opt.disparity[i]);
    const FlowField flow = disparity_to_flow(disparity, StereoDirection::kLeftToRight);
    const ImportanceMap importance =
        importance_from_disparity(disparity, opt.splat.beta, opt.splat.lo_pct, opt.splat.hi_pct);
    const SplatResult splat = softmax_splat(left, flow, importance, opt.splat.tau);
    write_image(out / numbered("right_", i, ".png"), fill_pushpull(splat.image, splat.mask),
                bit_depth);
    coverage[i] = splat.mask.coverage();
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json frames = json::array();
  for (std::size_t i = 0; i < opt.left.size(); ++i) {
    frames.push_back({{"left", opt.left[i]},
                      {"disparity", opt.disparity[i]},
                      {"right", numbered("right_", i, ".png")},
                      {"coverage", coverage[i]}});
  }
  write_json(out / "stereo.json", {{"direction", "left_to_right"},
                                   {"importance", "disparity"},
                                   {"splat", splat_json(opt.splat)},
                                   {"fill", "pushpull"},
                                   {"frames", frames}});
  return 0;
}

int cmd_compose(const ComposeOptions& opt) {
  int bit_depth = 8;
  const Image view_a = read_image(opt.view_a, &bit_depth);
  const Image view_b = read_image(opt.view_b);
  const Mask mask_a = load_mask(opt.mask_a);
  const Mask mask_b = load_mask(opt.mask_b);
  check_same_dims(view_a.width(), view_a.height(), view_b, "view b");
  const SplatResult a{view_a, Raster(view_a.width(), view_a.height()), mask_a};
  const SplatResult b{view_b, Raster(view_b.width(), view_b.height()), mask_b};
  const Composite c = compose_sparse(a, b, opt.sigma);

  write_image(opt.out, c.image, bit_depth);
  if (!opt.out_mask.empty()) write_image(opt.out_mask, mask_image(c.mask));
  const json report = {{"primary", mask_a.coverage() >= mask_b.coverage() ? "a" : "b"},
                       {"coverage_a", mask_a.coverage()},
                       {"coverage_b", mask_b.coverage()},
                       {"sigma", opt.sigma},
                       {"coverage", c.mask.coverage()}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_metrics(const MetricsOptions& opt) {
  const Image ref = load_any(opt.ref);
  const Image test = load_any(opt.test);
  std::optional<Mask> mask;
  if (!opt.mask.empty()) mask = load_mask(opt.mask);
  const MetricReport r = evaluate(ref, test, mask ? &*mask : nullptr);
  const json report = {{"psnr_db", r.psnr_db}, {"ssim", r.ssim}, {"valid_fraction", r.valid_fraction}};
  if (!opt.diff.empty()) write_image(opt.diff, diff_map(ref, test));
  if (!opt.out.empty()) write_json(opt.out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_evalset(const EvalsetOptions& opt) {
  std::vector<EvalPairSpec> pairs;
  if (opt.skip) {
    pairs = make_eval_pairs(opt.frames, EvalPairMode::skip(*opt.skip));
  } else if (opt.rand) {
    if (!opt.seed) throw ParameterError("--rand needs an explicit --seed");
    pairs = make_eval_pairs(opt.frames, EvalPairMode::random(*opt.rand), *opt.seed);
  } else {
    throw ParameterError("one of --skip or --rand is required");
  }
  for (const auto& p : pairs) std::cout << p.src_index << " " << p.tgt_index << "\n";
  return 0;
}

}  // namespace splatkit::cli
