#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace splatkit {

/// Row-major, channel-interleaved raster of values in [0,1], stored in
/// single precision. Channel count is 1..4 and fixed per image.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  /// Takes ownership of `data`; throws ShapeError on a length mismatch and
  /// ValidationError on values that are non-finite or outside [0,1].
  Image(int width, int height, int channels, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  float at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }
  float& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Single-channel gating raster with values in [0,1]. Binary masks hold only
/// 0 and 1; blurred masks are soft.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, float fill = 0.0f);
  Mask(int width, int height, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  float at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  /// Fraction of pixels with value >= 0.5.
  double coverage() const noexcept;
  bool is_binary() const noexcept;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Unbounded single-channel scalar field in double precision: depth,
/// disparity, flow components, accumulated splat weights.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double fill = 0.0);
  Raster(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  double at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

template <typename A, typename B>
bool same_dims(const A& a, const B& b) noexcept {
  return a.width() == b.width() && a.height() == b.height();
}

// Filters. Borders use edge replication throughout.

/// Gradient magnitude sqrt(Gx^2 + Gy^2) with the 3x3 Sobel kernels.
/// Throws DegenerateInputError below 3x3.
Raster sobel_magnitude(const Raster& field);

/// Separable Gaussian, radius ceil(3*sigma), taps normalised by their sum.
/// sigma == 0 returns the input unchanged.
Mask gaussian_blur(const Mask& mask, double sigma);

/// Per-channel Gaussian blur of an image; same kernel as the mask overload.
Image gaussian_blur(const Image& image, double sigma);

/// out = a*w + b*(1-w) per pixel and channel.
Image blend(const Image& a, const Image& b, const Mask& w);

/// Elementwise product with a mask (broadcast over channels).
Image apply_mask(const Image& image, const Mask& mask);

/// Extracts channel `c` of an image as a raster.
Raster channel_raster(const Image& image, int c);

}  // namespace splatkit
