// Times the parallel softmax splat against the sequential reference.
//
//   bench_splat [--sizes 256x256,1920x1080] [--threads 1,2,4,8] [--reps 5]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "splatkit/parallel.hpp"
#include "splatkit/random.hpp"
#include "splatkit/splatting.hpp"

using namespace splatkit;

namespace {

struct Instance {
  Image src;
  FlowField flow;
  ImportanceMap importance;
};

Instance make_instance(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Instance in{Image(w, h, 3), FlowField(w, h), ImportanceMap(w, h)};
  for (float& v : in.src.data()) v = static_cast<float>(rng.uniform());
  // Smooth forward motion with a few pixels of jitter, like a small camera move.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      in.flow.du[i] = -8.0 + 4.0 * x / w + rng.uniform(-1.5, 1.5);
      in.flow.dv[i] = 2.0 * y / h + rng.uniform(-1.5, 1.5);
      in.importance.z[i] = rng.uniform(0.0, kDefaultBeta);
    }
  }
  return in;
}

template <typename F>
double best_ms(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softmax splat benchmark"};
  std::vector<std::string> sizes{"256x256", "1920x1080"};
  std::vector<int> threads{1, 2, 4, 8};
  int reps = 5;
  app.add_option("--sizes", sizes)->delimiter(',');
  app.add_option("--threads", threads)->delimiter(',');
  app.add_option("--reps", reps)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::printf("hardware threads: %d\n", omp_get_num_procs());
  std::printf("%-11s %-10s %8s %12s\n", "size", "kernel", "threads", "best ms");
  for (const std::string& size : sizes) {
    int w = 0, h = 0;
    if (std::sscanf(size.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1) {
      std::fprintf(stderr, "bad size '%s'\n", size.c_str());
      return 1;
    }
    const Instance in = make_instance(w, h, 1);
    const double oracle = best_ms(std::max(1, reps / 2), [&] {
      volatile auto r = splat_oracle(in.src, in.flow, in.importance).mask.coverage();
      (void)r;
    });
    std::printf("%-11s %-10s %8d %12.2f\n", size.c_str(), "reference", 1, oracle);
    for (int t : threads) {
      ScopedThreadCount scope(t);
      const double ms = best_ms(reps, [&] {
        volatile auto r = softmax_splat(in.src, in.flow, in.importance).mask.coverage();
        (void)r;
      });
      std::printf("%-11s %-10s %8d %12.2f\n", size.c_str(), "parallel", t, ms);
    }
  }
  return 0;
}
