#pragma once

#include "splatkit/imaging.hpp"

namespace splatkit {

/// Turns a splatted view with holes into a complete view.
///
/// Implementations must return an image of the input's shape with no
/// invalid pixels, and must leave every pixel with mask >= 0.5 untouched.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual Image refine(const Image& splatted, const Mask& valid) const = 0;
};

/// Pyramid push-pull hole filling. Valid pixels are copied through
/// bit-exactly; an all-invalid mask yields the image's global mean colour.
Image fill_pushpull(const Image& image, const Mask& mask);

class PushPullRefiner final : public Refiner {
 public:
  Image refine(const Image& splatted, const Mask& valid) const override {
    return fill_pushpull(splatted, valid);
  }
};

}  // namespace splatkit
