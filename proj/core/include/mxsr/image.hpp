#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mxsr/tensor.hpp"

namespace mxsr {

enum class ColorSpace { gray, rgb, ycbcr };

// Planar image (channel, row, column) with values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(std::size_t h, std::size_t w, ColorSpace space, double fill = 0.0);

  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  std::size_t channels() const noexcept { return space_ == ColorSpace::gray ? 1 : 3; }
  ColorSpace space() const noexcept { return space_; }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) noexcept { return data_[(c * h_ + y) * w_ + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * h_ + y) * w_ + x];
  }
  std::span<double> plane(std::size_t c) noexcept {
    return std::span<double>(data_).subspan(c * h_ * w_, h_ * w_);
  }
  std::span<const double> plane(std::size_t c) const noexcept {
    return std::span<const double>(data_).subspan(c * h_ * w_, h_ * w_);
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  // Clamps every value into [0, 1].
  void clamp();

  bool operator==(const Image&) const = default;

 private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  ColorSpace space_ = ColorSpace::gray;
  std::vector<double> data_;
};

// Studio-swing BT.601 conversion on [0, 1] values:
//   Y  = (16  +  65.481 R + 128.553 G +  24.966 B) / 255
//   Cb = (128 -  37.797 R -  74.203 G + 112.0   B) / 255
//   Cr = (128 + 112.0   R -  93.786 G -  18.214 B) / 255
Image rgb_to_ycbcr(const Image& rgb);
Image ycbcr_to_rgb(const Image& ycbcr);

// Luma plane as a gray image. Gray input is returned as is.
Image luma(const Image& img);
// One channel of a multi-channel image as a gray image.
Image channel(const Image& img, std::size_t c);

enum class ResampleMethod { nearest, bicubic };

// Pixel-center aligned resampling. Nearest picks src = floor((dst + 0.5) * in / out).
// Bicubic uses the Keys kernel (a = -0.5) with edge clamping; when shrinking,
// the kernel is stretched by the scale factor to integrate over the source
// footprint. Output is clamped to [0, 1].
Image resample(const Image& img, std::size_t out_h, std::size_t out_w, ResampleMethod method);

// Rounds every value to the nearest 8-bit level k/255.
Image quantize8(const Image& img);

Image crop(const Image& img, std::size_t y, std::size_t x, std::size_t h, std::size_t w);
// Center crop so both sides are multiples of r.
Image crop_to_multiple(const Image& img, std::size_t r);

// Gray image <-> (1, 1, h, w) tensor.
Tensor4 to_tensor(const Image& gray);
Image to_image(const Tensor4& t, std::size_t batch = 0);

}  // namespace mxsr
