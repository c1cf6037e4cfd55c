#include "splatkit/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splatkit/errors.hpp"

namespace splatkit {

namespace {

void check_dims(int width, int height) {
  if (width < 0 || height < 0) {
    throw ShapeError("negative raster dimensions " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
}

void check_unit_range(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ValidationError(std::string(what) + " value " + std::to_string(v) +
                            " outside [0,1]");
    }
  }
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  }
  return taps;
}

// Separable blur of `channels` interleaved planes. Each output sample is
// sum(w_i x_i) / sum(w_i), which keeps a constant input exactly constant.
std::vector<double> blur_planes(std::span<const float> in, int width, int height, int channels,
                                double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  double tap_sum = 0.0;
  for (double t : taps) tap_sum += t;

  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> horizontal(n);
  std::vector<double> out(n);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int xx = std::clamp(x + k, 0, width - 1);
          acc += taps[k + radius] * in[(static_cast<std::size_t>(y) * width + xx) * channels + c];
        }
        horizontal[(static_cast<std::size_t>(y) * width + x) * channels + c] = acc / tap_sum;
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int yy = std::clamp(y + k, 0, height - 1);
          acc += taps[k + radius] * horizontal[(static_cast<std::size_t>(yy) * width + x) * channels + c];
        }
        out[(static_cast<std::size_t>(y) * width + x) * channels + c] = acc / tap_sum;
      }
    }
  }
  return out;
}

float to_unit_float(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels < 1 || channels > 4) {
    throw ShapeError("image channel count must be 1..4, got " + std::to_string(channels));
  }
  if (!std::isfinite(fill) || fill < 0.0f || fill > 1.0f) {
    throw ValidationError("image fill value outside [0,1]");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels < 1 || channels > 4) {
    throw ShapeError("image channel count must be 1..4, got " + std::to_string(channels));
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ShapeError("image data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(width) + "x" + std::to_string(height) + "x" +
                     std::to_string(channels));
  }
  check_unit_range(data_, "image");
}

Mask::Mask(int width, int height, float fill) : width_(width), height_(height) {
  check_dims(width, height);
  if (!std::isfinite(fill) || fill < 0.0f || fill > 1.0f) {
    throw ValidationError("mask fill value outside [0,1]");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Mask::Mask(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("mask data length does not match its dimensions");
  }
  check_unit_range(data_, "mask");
}

double Mask::coverage() const noexcept {
  if (data_.empty()) return 0.0;
  std::size_t on = 0;
  for (float v : data_) on += v >= 0.5f;
  return static_cast<double>(on) / static_cast<double>(data_.size());
}

bool Mask::is_binary() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 0.0f || v == 1.0f; });
}

Raster::Raster(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Raster::Raster(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("raster data length does not match its dimensions");
  }
}

Raster sobel_magnitude(const Raster& field) {
  const int w = field.width();
  const int h = field.height();
  if (w < 3 || h < 3) {
    throw DegenerateInputError("sobel_magnitude needs at least 3x3, got " + std::to_string(w) +
                               "x" + std::to_string(h));
  }
  Raster out(w, h);
  auto px = [&](int x, int y) {
    return field.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

Mask gaussian_blur(const Mask& mask, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian_blur sigma must be >= 0, got " + std::to_string(sigma));
  }
  if (sigma == 0.0 || mask.pixel_count() == 0) return mask;
  const auto blurred = blur_planes(mask.data(), mask.width(), mask.height(), 1, sigma);
  Mask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < blurred.size(); ++i) out[i] = to_unit_float(blurred[i]);
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian_blur sigma must be >= 0, got " + std::to_string(sigma));
  }
  if (sigma == 0.0 || image.empty()) return image;
  const auto blurred =
      blur_planes(image.data(), image.width(), image.height(), image.channels(), sigma);
  Image out(image.width(), image.height(), image.channels());
  auto dst = out.data();
  for (std::size_t i = 0; i < blurred.size(); ++i) dst[i] = to_unit_float(blurred[i]);
  return out;
}

Image blend(const Image& a, const Image& b, const Mask& w) {
  if (!a.same_shape(b) || !same_dims(a, w)) {
    throw ShapeError("blend operands differ in shape");
  }
  Image out(a.width(), a.height(), a.channels());
  const int ch = a.channels();
  const auto pa = a.data();
  const auto pb = b.data();
  auto po = out.data();
  const auto n = static_cast<std::ptrdiff_t>(a.pixel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = static_cast<std::size_t>(i) * ch + c;
      po[k] = to_unit_float(pa[k] * wi + pb[k] * (1.0 - wi));
    }
  }
  return out;
}

Image apply_mask(const Image& image, const Mask& mask) {
  if (!same_dims(image, mask)) throw ShapeError("apply_mask operands differ in shape");
  Image out = image;
  const int ch = image.channels();
  auto po = out.data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    for (int c = 0; c < ch; ++c) po[i * ch + c] *= mask[i];
  }
  return out;
}

Raster channel_raster(const Image& image, int c) {
  if (c < 0 || c >= image.channels()) throw ShapeError("channel index out of range");
  Raster out(image.width(), image.height());
  const auto src = image.data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    out[i] = src[i * image.channels() + c];
  }
  return out;
}

}  // namespace splatkit
