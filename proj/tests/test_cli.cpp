#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "splatkit/storage.hpp"
#include "support.hpp"

using namespace splatkit;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static const fs::path logs = testing::scratch_dir("cli_logs");
  const std::string cmd = std::string(SPLATKIT_CLI_PATH) + " " + args + " >" +
                          (logs / "out").string() + " 2>" + (logs / "err").string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(logs / "out");
  r.err = slurp(logs / "err");
  return r;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Two-frame trajectory: identity, then a camera moved +baseline along x.
std::string stereo_trajectory(double baseline) {
  return "0 0.5 0.5 0.5 0.5 0 0 1 0 0 0 0 1 0 0 0 0 1 0\n"
         "1 0.5 0.5 0.5 0.5 0 0 1 0 0 " +
         std::to_string(-baseline) + " 0 1 0 0 0 0 1 0\n";
}

Image quantized(int w, int h, int c, Rng& rng) {
  Image img(w, h, c);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform_int(0, 255) / 255.0);
  return img;
}

// Image, depth and trajectory for a 64x48 render.
struct RenderFixture {
  fs::path dir;
  Image image;
  Raster depth;
};

RenderFixture render_fixture(const std::string& name) {
  Rng rng(42);
  RenderFixture f{testing::scratch_dir(name), quantized(64, 48, 3, rng), Raster(64, 48)};
  for (double& d : f.depth.data()) d = rng.uniform(2.0, 8.0);
  write_image(f.dir / "image.png", f.image);
  write_pfm(f.dir / "depth.pfm", f.depth);
  write_text(f.dir / "traj.txt", stereo_trajectory(0.25));
  return f;
}

std::string render_args(const RenderFixture& f, int src, int tgt, const fs::path& out) {
  return "render --image " + (f.dir / "image.png").string() + " --depth " +
         (f.dir / "depth.pfm").string() + " --trajectory " + (f.dir / "traj.txt").string() +
         " --src " + std::to_string(src) + " --tgt " + std::to_string(tgt) + " --out " +
         out.string();
}

bool same_bytes(const fs::path& a, const fs::path& b) { return read_file(a) == read_file(b); }

}  // namespace

TEST_CASE("cli render: identical frames reproduce the input") {
  const auto f = render_fixture("cli_render_identity");
  const RunResult r = run_cli(render_args(f, 1, 1, f.dir / "out"));
  REQUIRE(r.code == 0);
  CHECK(read_image(f.dir / "out" / "view.png") == f.image);
  const Image mask = read_image(f.dir / "out" / "mask.png");
  for (float v : mask.data()) CHECK(v == 1.0f);
  const auto sidecar = nlohmann::json::parse(slurp(f.dir / "out" / "render.json"));
  CHECK(sidecar["splat"]["beta"] == 20.0);
  CHECK(sidecar["splat"]["tau"] == 1e-4);
  CHECK(sidecar["fill"] == "none");
  CHECK(fs::exists(f.dir / "out" / "weight.pfm"));
}

TEST_CASE("cli render: flow dump matches the stereo closed form") {
  const auto f = render_fixture("cli_render_stereo");
  const RunResult r = run_cli(render_args(f, 0, 1, f.dir / "out") + " --dump-flow --fill");
  REQUIRE(r.code == 0);
  const FlowField flow = read_flo(f.dir / "out" / "flow.flo");
  const double fx = 0.5 * 64;
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    CHECK(std::abs(flow.du[i] + fx * 0.25 / f.depth[i]) <= 1e-3);
    CHECK(std::abs(flow.dv[i]) <= 1e-3);
  }
  const Image weight_mask = read_image(f.dir / "out" / "mask.png");
  const Raster weight = read_pfm(f.dir / "out" / "weight.pfm");
  for (std::size_t i = 0; i < weight.pixel_count(); ++i) {
    CHECK((weight[i] >= 1e-4) == (weight_mask.data()[i] == 1.0f));
  }
}

TEST_CASE("cli render: reruns and thread counts give identical files") {
  const auto f = render_fixture("cli_render_determinism");
  REQUIRE(run_cli(render_args(f, 0, 1, f.dir / "a") + " --fill --jobs 1").code == 0);
  REQUIRE(run_cli(render_args(f, 0, 1, f.dir / "b") + " --fill --jobs 1").code == 0);
  REQUIRE(run_cli(render_args(f, 0, 1, f.dir / "c") + " --fill --jobs 4").code == 0);
  for (const char* name : {"view.png", "mask.png", "weight.pfm", "render.json"}) {
    CHECK(same_bytes(f.dir / "a" / name, f.dir / "b" / name));
    CHECK(same_bytes(f.dir / "a" / name, f.dir / "c" / name));
  }
}

TEST_CASE("cli render: error exit codes") {
  const auto f = render_fixture("cli_render_errors");
  const std::string missing = (f.dir / "nope.txt").string();
  RunResult r = run_cli("render --image " + (f.dir / "image.png").string() + " --depth " +
                        (f.dir / "depth.pfm").string() + " --trajectory " + missing +
                        " --src 0 --tgt 1 --out " + (f.dir / "out").string());
  CHECK(r.code == 2);
  CHECK(r.err.find(missing) != std::string::npos);

  CHECK(run_cli(render_args(f, 0, 7, f.dir / "out")).code == 1);
  CHECK(run_cli(render_args(f, 0, 1, f.dir / "out") + " --beta -1").code == 1);

  write_text(f.dir / "bad.txt", stereo_trajectory(0.1) + "2 0.5 0.5\n");
  r = run_cli("render --image " + (f.dir / "image.png").string() + " --depth " +
              (f.dir / "depth.pfm").string() + " --trajectory " + (f.dir / "bad.txt").string() +
              " --src 0 --tgt 1 --out " + (f.dir / "out").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("line 3") != std::string::npos);

  write_text(f.dir / "broken.png", "\x89PNG\r\n\x1a\nnot really");
  r = run_cli("render --image " + (f.dir / "broken.png").string() + " --depth " +
              (f.dir / "depth.pfm").string() + " --trajectory " + (f.dir / "traj.txt").string() +
              " --src 0 --tgt 1 --out " + (f.dir / "out").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("broken.png") != std::string::npos);

  CHECK(run_cli("render --image x.png").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("cli pairs: manifest entries, determinism and strictness") {
  const fs::path dir = testing::scratch_dir("cli_pairs");
  Rng rng(7);
  write_image(dir / "src.png", quantized(48, 32, 3, rng));
  write_image(dir / "tgt.png", quantized(48, 32, 3, rng));
  FlowField flow(48, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 48; ++x) flow.du[static_cast<std::size_t>(y) * 48 + x] = x < 24 ? -2 : -6;
  write_flo(dir / "flow.flo", flow);
  Raster depth(48, 32, 9.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 24; x < 48; ++x) depth.at(x, y) = 3.0;
  write_pfm(dir / "depth.pfm", depth);
  write_text(dir / "traj.txt", stereo_trajectory(0.3));

  nlohmann::json manifest = {
      {"schema", 1},
      {"entries",
       {{{"src_image", "src.png"}, {"tgt_image", "tgt.png"}, {"flow", "flow.flo"},
         {"mode", "tpa"}, {"out_prefix", "p0"}},
        {{"src_image", "src.png"}, {"tgt_image", "tgt.png"}, {"flow", "flow.flo"},
         {"depth", "depth.pfm"}, {"mode", "tpa"}, {"seed", 3}, {"out_prefix", "p1"}},
        {{"src_image", "src.png"}, {"tgt_image", "tgt.png"}, {"depth", "depth.pfm"},
         {"trajectory", "traj.txt"}, {"src_idx", 0}, {"tgt_idx", 1}, {"mode", "tpa"},
         {"out_prefix", "p2"}},
        {{"src_image", "src.png"}, {"tgt_image", "tgt.png"}, {"flow", "flow.flo"},
         {"depth", "depth.pfm"}, {"mode", "ses"}, {"seed", 3}, {"params", {{"K", 0}}},
         {"out_prefix", "p3"}},
        {{"src_image", "src.png"}, {"tgt_image", "tgt.png"}, {"flow", "flow.flo"},
         {"depth", "depth.pfm"}, {"mode", "ses"}, {"seed", 3},
         {"params", {{"K", 24}, {"rho", 0.3}}}, {"out_prefix", "p4"}}}}};
  write_text(dir / "manifest.json", manifest.dump());

  REQUIRE(run_cli("pairs --manifest " + (dir / "manifest.json").string() + " --out " +
                  (dir / "a").string() + " --jobs 1")
              .code == 0);
  REQUIRE(run_cli("pairs --manifest " + (dir / "manifest.json").string() + " --out " +
                  (dir / "b").string() + " --jobs 3")
              .code == 0);
  for (const char* p : {"p0", "p1", "p2", "p3", "p4"}) {
    for (const char* name : {"cond.png", "target.png", "splat_mask.png", "error_mask.png",
                             "meta.json"}) {
      REQUIRE(fs::exists(dir / "a" / p / name));
      CHECK(same_bytes(dir / "a" / p / name, dir / "b" / p / name));
    }
  }
  CHECK(same_bytes(dir / "a" / "p3" / "cond.png", dir / "a" / "p1" / "cond.png"));
  CHECK_FALSE(same_bytes(dir / "a" / "p4" / "cond.png", dir / "a" / "p1" / "cond.png"));
  const auto meta = nlohmann::json::parse(slurp(dir / "a" / "p4" / "meta.json"));
  CHECK(meta["ses"]["K"] == 24);
  CHECK(meta["ses"]["theta"] == 1.0);
  CHECK(meta["seed"] == 3);

  // Entry 1 lacks a seed for SES: skipped normally, fatal with --strict.
  manifest["entries"][1]["mode"] = "ses";
  manifest["entries"][1].erase("seed");
  write_text(dir / "bad.json", manifest.dump());
  RunResult r = run_cli("pairs --manifest " + (dir / "bad.json").string() + " --out " +
                        (dir / "c").string());
  CHECK(r.code == 0);
  CHECK(r.err.find("entry 1") != std::string::npos);
  CHECK(fs::exists(dir / "c" / "p0" / "cond.png"));
  CHECK_FALSE(fs::exists(dir / "c" / "p1"));
  r = run_cli("pairs --strict --manifest " + (dir / "bad.json").string() + " --out " +
              (dir / "d").string());
  CHECK(r.code == 1);

  write_text(dir / "schema.json", R"({"schema": 2, "entries": []})");
  CHECK(run_cli("pairs --manifest " + (dir / "schema.json").string() + " --out " +
                (dir / "e").string())
            .code == 1);
  write_text(dir / "garbage.json", "{\"schema\": 1, \"entries\": [");
  r = run_cli("pairs --manifest " + (dir / "garbage.json").string() + " --out " +
              (dir / "e").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("byte offset") != std::string::npos);
}

TEST_CASE("cli stereo: zero disparity is the identity and constant disparity shifts") {
  const fs::path dir = testing::scratch_dir("cli_stereo");
  Rng rng(9);
  const Image left = quantized(40, 20, 3, rng);
  write_image(dir / "left0.png", left);
  write_image(dir / "left1.png", left);
  write_pfm(dir / "zero.pfm", Raster(40, 20, 0.0));
  write_pfm(dir / "five.pfm", Raster(40, 20, 5.0));

  REQUIRE(run_cli("stereo --left " + (dir / "left0.png").string() + " " +
                  (dir / "left1.png").string() + " --disparity " + (dir / "zero.pfm").string() +
                  " " + (dir / "five.pfm").string() + " --out " + (dir / "out").string())
              .code == 0);
  CHECK(read_image(dir / "out" / "right_0000.png") == left);
  const Image shifted = read_image(dir / "out" / "right_0001.png");
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 35; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(shifted.at(x, y, c) == left.at(x + 5, y, c));
    }
  }
  const auto sidecar = nlohmann::json::parse(slurp(dir / "out" / "stereo.json"));
  CHECK(sidecar["frames"][1]["coverage"].get<double>() == doctest::Approx(35.0 / 40.0));

  REQUIRE(run_cli("stereo --left " + (dir / "left0.png").string() + " --disparity " +
                  (dir / "five.pfm").string() + " --out " + (dir / "single").string())
              .code == 0);
  CHECK(same_bytes(dir / "single" / "right_0000.png", dir / "out" / "right_0001.png"));

  CHECK(run_cli("stereo --left " + (dir / "left0.png").string() + " " +
                (dir / "left1.png").string() + " --disparity " + (dir / "zero.pfm").string() +
                " --out " + (dir / "bad").string())
            .code == 1);
}

TEST_CASE("cli compose: primary selection and union mask") {
  const fs::path dir = testing::scratch_dir("cli_compose");
  Rng rng(11);
  const Image a = quantized(16, 16, 3, rng);
  const Image b = quantized(16, 16, 3, rng);
  write_image(dir / "a.png", a);
  write_image(dir / "b.png", b);
  Image full(16, 16, 1, 1.0f), left(16, 16, 1, 0.0f), right(16, 16, 1, 0.0f), most(16, 16, 1, 1.0f);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) (x < 8 ? left : right).at(x, y, 0) = 1.0f;
  for (int x = 0; x < 16; ++x) most.at(x, 0, 0) = 0.0f;
  write_image(dir / "full.png", full);
  write_image(dir / "left.png", left);
  write_image(dir / "right.png", right);
  write_image(dir / "most.png", most);
  auto args = [&](const char* ma, const char* mb, const char* out, const char* sigma) {
    return "compose --view-a " + (dir / "a.png").string() + " --mask-a " + (dir / ma).string() +
           " --view-b " + (dir / "b.png").string() + " --mask-b " + (dir / mb).string() +
           " --sigma " + sigma + " --out " + (dir / out).string() + " --out-mask " +
           (dir / (std::string(out) + ".mask.png")).string();
  };

  REQUIRE(run_cli(args("full.png", "left.png", "c1.png", "2")).code == 0);
  CHECK(same_bytes(dir / "c1.png", dir / "a.png"));

  RunResult r = run_cli(args("left.png", "right.png", "c2.png", "0"));
  REQUIRE(r.code == 0);
  const Image c2 = read_image(dir / "c2.png");
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) CHECK(c2.at(x, y, c) == (x < 8 ? a : b).at(x, y, c));
  const Image c2_mask = read_image(dir / "c2.png.mask.png");
  for (float v : c2_mask.data()) CHECK(v == 1.0f);

  r = run_cli(args("left.png", "most.png", "c3.png", "0"));
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["primary"] == "b");
  CHECK(read_image(dir / "c3.png").at(3, 5, 0) == b.at(3, 5, 0));

  write_image(dir / "small.png", Image(8, 8, 1, 1.0f));
  CHECK(run_cli(args("small.png", "most.png", "c4.png", "0")).code == 1);
}

TEST_CASE("cli metrics: closed forms, masks and diff maps") {
  const fs::path dir = testing::scratch_dir("cli_metrics");
  write_pfm(dir / "zero.pfm", Raster(16, 16, 0.0));
  write_pfm(dir / "tenth.pfm", Raster(16, 16, 0.1));
  RunResult r = run_cli("metrics --ref " + (dir / "zero.pfm").string() + " --test " +
                        (dir / "tenth.pfm").string());
  REQUIRE(r.code == 0);
  auto report = nlohmann::json::parse(r.out);
  CHECK(std::abs(report["psnr_db"].get<double>() - 20.0) <= 1e-6);

  Rng rng(13);
  write_image(dir / "img.png", quantized(20, 20, 3, rng));
  r = run_cli("metrics --ref " + (dir / "img.png").string() + " --test " +
              (dir / "img.png").string() + " --diff " + (dir / "diff.png").string() + " --out " +
              (dir / "report.json").string());
  REQUIRE(r.code == 0);
  report = nlohmann::json::parse(r.out);
  CHECK(report["psnr_db"] == 99.0);
  CHECK(report["ssim"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report["valid_fraction"] == 1.0);
  CHECK(nlohmann::json::parse(slurp(dir / "report.json")) == report);
  const Image diff = read_image(dir / "diff.png");
  for (float v : diff.data()) CHECK(v == 0.0f);

  Image half(20, 20, 1, 0.0f);
  for (int x = 0; x < 20; ++x)
    for (int y = 0; y < 10; ++y) half.at(x, y, 0) = 1.0f;
  write_image(dir / "half.png", half);
  r = run_cli("metrics --ref " + (dir / "img.png").string() + " --test " +
              (dir / "img.png").string() + " --mask " + (dir / "half.png").string());
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["valid_fraction"] == 0.5);

  CHECK(run_cli("metrics --ref " + (dir / "img.png").string() + " --test " +
                (dir / "zero.pfm").string())
            .code == 1);
  write_pfm(dir / "big.pfm", Raster(16, 16, 2.0));
  CHECK(run_cli("metrics --ref " + (dir / "zero.pfm").string() + " --test " +
                (dir / "big.pfm").string())
            .code == 1);
}

TEST_CASE("cli evalset: skip and random listings") {
  RunResult r = run_cli("evalset --frames 10 --skip 5");
  REQUIRE(r.code == 0);
  CHECK(r.out == "0 5\n1 6\n2 7\n3 8\n4 9\n");

  CHECK(run_cli("evalset --frames 100 --rand 30").code == 1);
  CHECK(run_cli("evalset --frames 100 --skip 3 --rand 30 --seed 1").code == 1);
  r = run_cli("evalset --frames 100 --rand 30 --seed 17");
  REQUIRE(r.code == 0);
  CHECK(run_cli("evalset --frames 100 --rand 30 --seed 17").out == r.out);
  std::istringstream lines(r.out);
  int src = 0, tgt = 0, count = 0;
  while (lines >> src >> tgt) {
    CHECK(src == count);
    CHECK(tgt != src);
    CHECK(std::abs(tgt - src) <= 30);
    ++count;
  }
  CHECK(count == 100);
}
