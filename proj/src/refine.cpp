#include "splatkit/refine.hpp"

#include <algorithm>
#include <vector>

#include "splatkit/errors.hpp"

namespace splatkit {

namespace {

struct Level {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> color;   // weighted mean colour, meaningful where weight > 0
  std::vector<double> weight;  // number of valid level-0 pixels under the cell

  double* px(int x, int y) { return &color[(static_cast<std::size_t>(y) * width + x) * channels]; }
};

Level downsample(const Level& fine) {
  Level coarse;
  coarse.width = (fine.width + 1) / 2;
  coarse.height = (fine.height + 1) / 2;
  coarse.channels = fine.channels;
  const int ch = fine.channels;
  coarse.color.assign(static_cast<std::size_t>(coarse.width) * coarse.height * ch, 0.0);
  coarse.weight.assign(static_cast<std::size_t>(coarse.width) * coarse.height, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < coarse.height; ++y) {
    for (int x = 0; x < coarse.width; ++x) {
      const std::size_t ci = static_cast<std::size_t>(y) * coarse.width + x;
      double wsum = 0.0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int fx = 2 * x + dx;
          const int fy = 2 * y + dy;
          if (fx >= fine.width || fy >= fine.height) continue;
          const std::size_t fi = static_cast<std::size_t>(fy) * fine.width + fx;
          const double fw = fine.weight[fi];
          if (fw <= 0.0) continue;
          wsum += fw;
          for (int c = 0; c < ch; ++c) coarse.color[ci * ch + c] += fw * fine.color[fi * ch + c];
        }
      }
      coarse.weight[ci] = wsum;
      if (wsum > 0.0) {
        for (int c = 0; c < ch; ++c) coarse.color[ci * ch + c] /= wsum;
      }
    }
  }
  return coarse;
}

// Fills weight-0 cells of `fine` by bilinear interpolation of the (already
// complete) coarse level. Interpolation weights are convex, so filled values
// stay inside the range of the valid input.
void pull(Level& fine, Level& coarse) {
  const int ch = fine.channels;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < fine.height; ++y) {
    for (int x = 0; x < fine.width; ++x) {
      const std::size_t fi = static_cast<std::size_t>(y) * fine.width + x;
      if (fine.weight[fi] > 0.0) continue;
      // Fine pixel centre in coarse pixel coordinates.
      const double cx = std::clamp((x + 0.5) / 2.0 - 0.5, 0.0, coarse.width - 1.0);
      const double cy = std::clamp((y + 0.5) / 2.0 - 0.5, 0.0, coarse.height - 1.0);
      const int x0 = static_cast<int>(cx);
      const int y0 = static_cast<int>(cy);
      const int x1 = std::min(x0 + 1, coarse.width - 1);
      const int y1 = std::min(y0 + 1, coarse.height - 1);
      const double ax = cx - x0;
      const double ay = cy - y0;
      const double* c00 = coarse.px(x0, y0);
      const double* c10 = coarse.px(x1, y0);
      const double* c01 = coarse.px(x0, y1);
      const double* c11 = coarse.px(x1, y1);
      for (int c = 0; c < ch; ++c) {
        fine.color[fi * ch + c] = (1 - ay) * ((1 - ax) * c00[c] + ax * c10[c]) +
                                  ay * ((1 - ax) * c01[c] + ax * c11[c]);
      }
    }
  }
}

}  // namespace

Image fill_pushpull(const Image& image, const Mask& mask) {
  if (!same_dims(image, mask)) throw ShapeError("fill_pushpull operands differ in shape");
  if (image.empty()) return image;

  const int ch = image.channels();
  std::vector<Level> pyramid(1);
  Level& base = pyramid[0];
  base.width = image.width();
  base.height = image.height();
  base.channels = ch;
  base.color.assign(image.data().begin(), image.data().end());
  base.weight.resize(image.pixel_count());
  bool any_valid = false;
  bool any_hole = false;
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    base.weight[i] = mask[i] >= 0.5f ? 1.0 : 0.0;
    any_valid |= base.weight[i] > 0.0;
    any_hole |= base.weight[i] == 0.0;
  }
  if (!any_hole) return image;

  Image out = image;
  auto dst = out.data();
  if (!any_valid) {
    std::vector<double> mean(ch, 0.0);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
      for (int c = 0; c < ch; ++c) mean[c] += image.data()[i * ch + c];
    }
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
      for (int c = 0; c < ch; ++c) {
        dst[i * ch + c] = static_cast<float>(mean[c] / static_cast<double>(image.pixel_count()));
      }
    }
    return out;
  }

  while (pyramid.back().width > 1 || pyramid.back().height > 1) {
    pyramid.push_back(downsample(pyramid.back()));
  }
  for (std::size_t level = pyramid.size() - 1; level > 0; --level) {
    pull(pyramid[level - 1], pyramid[level]);
  }

  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    if (mask[i] >= 0.5f) continue;
    for (int c = 0; c < ch; ++c) {
      dst[i * ch + c] = static_cast<float>(std::clamp(pyramid[0].color[i * ch + c], 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace splatkit
