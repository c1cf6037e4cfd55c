#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splatkit/splatting.hpp"

namespace splatkit::cli {

struct SplatOptions {
  double beta = kDefaultBeta;
  double tau = kDefaultTau;
  double lo_pct = kDefaultLowPercentile;
  double hi_pct = kDefaultHighPercentile;
};

struct RenderOptions {
  std::string image;
  std::string depth;
  std::string trajectory;
  int src = 0;
  int tgt = 0;
  std::string axes = "x,y,z";
  SplatOptions splat;
  bool fill = false;
  bool dump_flow = false;
  std::string out;
};

struct PairsOptions {
  std::string manifest;
  std::string out;
  bool strict = false;
  int jobs = 0;
};

struct StereoOptions {
  std::vector<std::string> left;
  std::vector<std::string> disparity;
  SplatOptions splat;
  std::string out;
  int jobs = 0;
};

struct ComposeOptions {
  std::string view_a;
  std::string mask_a;
  std::string view_b;
  std::string mask_b;
  double sigma = 2.0;
  std::string out;
  std::string out_mask;
};

struct MetricsOptions {
  std::string ref;
  std::string test;
  std::string mask;
  std::string diff;
  std::string out;
};

struct EvalsetOptions {
  int frames = 0;
  std::optional<int> skip;
  std::optional<int> rand;
  std::optional<std::uint64_t> seed;
};

// Each command returns the process exit code on success paths and throws
// splatkit::Error subclasses otherwise.
int cmd_render(const RenderOptions& opt);
int cmd_pairs(const PairsOptions& opt);
int cmd_stereo(const StereoOptions& opt);
int cmd_compose(const ComposeOptions& opt);
int cmd_metrics(const MetricsOptions& opt);
int cmd_evalset(const EvalsetOptions& opt);

}  // namespace splatkit::cli
