#include "splatkit/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "splatkit/errors.hpp"

namespace splatkit {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> ssim_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Rows are reduced independently and then summed in row order, which keeps
// results identical for every thread count.
double sum_in_row_order(const std::vector<double>& row_sums) {
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total;
}

}  // namespace

double psnr(const Image& a, const Image& b, const Mask* mask) {
  if (!a.same_shape(b)) throw ShapeError("psnr operands differ in shape");
  if (mask && !same_dims(a, *mask)) throw ShapeError("psnr mask differs in shape");
  const int w = a.width();
  const int h = a.height();
  const int ch = a.channels();
  std::vector<double> row_err(h, 0.0);
  std::vector<std::size_t> row_count(h, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double err = 0.0;
    std::size_t count = 0;
    for (int x = 0; x < w; ++x) {
      if (mask && mask->at(x, y) < 0.5f) continue;
      for (int c = 0; c < ch; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        err += d * d;
      }
      count += ch;
    }
    row_err[y] = err;
    row_count[y] = count;
  }
  const std::size_t count = std::accumulate(row_count.begin(), row_count.end(), std::size_t{0});
  if (count == 0) throw DegenerateInputError("psnr: no pixels selected");
  const double mse = sum_in_row_order(row_err) / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim operands differ in shape");
  const int w = a.width();
  const int h = a.height();
  const int ch = a.channels();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw DegenerateInputError("ssim needs at least 11x11 pixels");
  }
  const auto taps = ssim_taps();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;

  double total = 0.0;
  for (int c = 0; c < ch; ++c) {
    // Horizontal pass of the five moments: x, y, x^2, y^2, xy.
    std::vector<std::array<double, 5>> horiz(static_cast<std::size_t>(h) * ow);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < ow; ++x) {
        std::array<double, 5> m{};
        for (int k = 0; k < kSsimWindow; ++k) {
          const double va = a.at(x + k, y, c);
          const double vb = b.at(x + k, y, c);
          m[0] += taps[k] * va;
          m[1] += taps[k] * vb;
          m[2] += taps[k] * va * va;
          m[3] += taps[k] * vb * vb;
          m[4] += taps[k] * va * vb;
        }
        horiz[static_cast<std::size_t>(y) * ow + x] = m;
      }
    }

    std::vector<double> row_sums(oh, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < oh; ++y) {
      double row = 0.0;
      for (int x = 0; x < ow; ++x) {
        std::array<double, 5> m{};
        for (int k = 0; k < kSsimWindow; ++k) {
          const auto& hm = horiz[static_cast<std::size_t>(y + k) * ow + x];
          for (int j = 0; j < 5; ++j) m[j] += taps[k] * hm[j];
        }
        const double mu_a = m[0];
        const double mu_b = m[1];
        const double var_a = m[2] - mu_a * mu_a;
        const double var_b = m[3] - mu_b * mu_b;
        const double cov = m[4] - mu_a * mu_b;
        const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
        const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
        row += num / den;
      }
      row_sums[y] = row;
    }
    total += sum_in_row_order(row_sums);
  }
  const double count = static_cast<double>(ow) * oh * ch;
  return std::clamp(total / count, -1.0, 1.0);
}

Image diff_map(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ShapeError("diff_map operands differ in shape");
  Image out(a.width(), a.height(), 1);
  const int ch = a.channels();
  const auto pa = a.data();
  const auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    double acc = 0.0;
    for (int c = 0; c < ch; ++c) {
      acc += std::abs(static_cast<double>(pa[i * ch + c]) - pb[i * ch + c]);
    }
    po[i] = static_cast<float>(std::min(1.0, acc / ch));
  }
  return out;
}

MetricReport evaluate(const Image& reference, const Image& test, const Mask* mask) {
  MetricReport r;
  r.psnr_db = psnr(reference, test, mask);
  r.ssim = ssim(reference, test);
  r.valid_fraction = mask ? mask->coverage() : 1.0;
  return r;
}

}  // namespace splatkit
