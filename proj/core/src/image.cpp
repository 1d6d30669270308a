#include "mxsr/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mxsr/error.hpp"

namespace mxsr {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Mat3 kRgbToYcc{{{65.481, 128.553, 24.966}, {-37.797, -74.203, 112.0}, {112.0, -93.786, -18.214}}};
constexpr std::array<double, 3> kYccOffset{16.0, 128.0, 128.0};

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

const Mat3& ycc_to_rgb_matrix() {
  static const Mat3 inv = invert(kRgbToYcc);
  return inv;
}

double keys_cubic(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0;
  if (ax <= 2.0) return a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::vector<std::size_t> index;  // taps per output sample, flattened
  std::vector<double> weight;
  std::size_t per_output = 0;
};

Taps bicubic_taps(std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(out) / static_cast<double>(in);
  const double kernel_scale = std::min(scale, 1.0);
  const double width = 4.0 / kernel_scale;
  Taps t;
  t.per_output = static_cast<std::size_t>(std::ceil(width)) + 2;
  t.index.resize(out * t.per_output);
  t.weight.resize(out * t.per_output);
  for (std::size_t o = 0; o < out; ++o) {
    const double center = (static_cast<double>(o) + 0.5) / scale - 0.5;
    const double left = std::floor(center - width / 2.0);
    double total = 0.0;
    for (std::size_t k = 0; k < t.per_output; ++k) {
      const double pos = left + static_cast<double>(k);
      const double wgt = kernel_scale * keys_cubic(kernel_scale * (center - pos));
      const auto clamped = std::clamp<double>(pos, 0.0, static_cast<double>(in - 1));
      t.index[o * t.per_output + k] = static_cast<std::size_t>(clamped);
      t.weight[o * t.per_output + k] = wgt;
      total += wgt;
    }
    for (std::size_t k = 0; k < t.per_output; ++k) t.weight[o * t.per_output + k] /= total;
  }
  return t;
}

std::vector<std::size_t> nearest_index(std::size_t in, std::size_t out) {
  std::vector<std::size_t> idx(out);
  for (std::size_t o = 0; o < out; ++o) {
    // Integer form of floor((o + 0.5) * in / out).
    const std::size_t src = ((2 * o + 1) * in) / (2 * out);
    idx[o] = std::min(src, in - 1);
  }
  return idx;
}

void require_rgb(const Image& img, const char* what) {
  if (img.space() != ColorSpace::rgb) throw DimensionError(std::string(what) + ": expected an RGB image");
}

}  // namespace

Image::Image(std::size_t h, std::size_t w, ColorSpace space, double fill) : h_(h), w_(w), space_(space) {
  if (h == 0 || w == 0) throw DimensionError("image dimensions must be >= 1");
  data_.assign(channels() * h * w, fill);
}

void Image::clamp() {
  for (double& v : data_) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
}

Image rgb_to_ycbcr(const Image& rgb) {
  require_rgb(rgb, "rgb_to_ycbcr");
  Image out(rgb.h(), rgb.w(), ColorSpace::ycbcr);
  const std::size_t n = rgb.h() * rgb.w();
  auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  for (std::size_t c = 0; c < 3; ++c) {
    auto dst = out.plane(c);
    const auto& m = kRgbToYcc[c];
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = (kYccOffset[c] + m[0] * r[i] + m[1] * g[i] + m[2] * b[i]) / 255.0;
    }
  }
  out.clamp();
  return out;
}

Image ycbcr_to_rgb(const Image& ycc) {
  if (ycc.space() != ColorSpace::ycbcr) throw DimensionError("ycbcr_to_rgb: expected a YCbCr image");
  const Mat3& inv = ycc_to_rgb_matrix();
  Image out(ycc.h(), ycc.w(), ColorSpace::rgb);
  const std::size_t n = ycc.h() * ycc.w();
  auto y = ycc.plane(0), cb = ycc.plane(1), cr = ycc.plane(2);
  for (std::size_t c = 0; c < 3; ++c) {
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 255.0 * y[i] - kYccOffset[0];
      const double b = 255.0 * cb[i] - kYccOffset[1];
      const double d = 255.0 * cr[i] - kYccOffset[2];
      dst[i] = inv[c][0] * a + inv[c][1] * b + inv[c][2] * d;
    }
  }
  out.clamp();
  return out;
}

Image channel(const Image& img, std::size_t c) {
  if (c >= img.channels()) throw DimensionError("channel index out of range");
  Image out(img.h(), img.w(), ColorSpace::gray);
  auto src = img.plane(c);
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

Image luma(const Image& img) {
  switch (img.space()) {
    case ColorSpace::gray: return img;
    case ColorSpace::ycbcr: return channel(img, 0);
    case ColorSpace::rgb: return channel(rgb_to_ycbcr(img), 0);
  }
  return img;
}

Image resample(const Image& img, std::size_t out_h, std::size_t out_w, ResampleMethod method) {
  if (img.empty()) throw DimensionError("resample: empty image");
  if (out_h == 0 || out_w == 0) throw DimensionError("resample: output dimensions must be >= 1");
  Image out(out_h, out_w, img.space());
  const std::size_t in_h = img.h(), in_w = img.w();

  if (method == ResampleMethod::nearest) {
    const auto ys = nearest_index(in_h, out_h);
    const auto xs = nearest_index(in_w, out_w);
    for (std::size_t c = 0; c < img.channels(); ++c) {
      for (std::size_t y = 0; y < out_h; ++y) {
        for (std::size_t x = 0; x < out_w; ++x) out.at(c, y, x) = img.at(c, ys[y], xs[x]);
      }
    }
    return out;
  }

  // Rows first, then columns.
  const Taps ty = bicubic_taps(in_h, out_h);
  const Taps tx = bicubic_taps(in_w, out_w);
  std::vector<double> tmp(out_h * in_w);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t y = 0; y < out_h; ++y) {
      double* row = tmp.data() + y * in_w;
      std::fill(row, row + in_w, 0.0);
      for (std::size_t k = 0; k < ty.per_output; ++k) {
        const double wgt = ty.weight[y * ty.per_output + k];
        if (wgt == 0.0) continue;
        auto src = img.plane(c).subspan(ty.index[y * ty.per_output + k] * in_w, in_w);
        for (std::size_t x = 0; x < in_w; ++x) row[x] += wgt * src[x];
      }
    }
    for (std::size_t y = 0; y < out_h; ++y) {
      const double* row = tmp.data() + y * in_w;
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < tx.per_output; ++k) {
          acc += tx.weight[x * tx.per_output + k] * row[tx.index[x * tx.per_output + k]];
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  out.clamp();
  return out;
}

Image quantize8(const Image& img) {
  Image out = img;
  for (double& v : out.values()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

Image crop(const Image& img, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  if (h == 0 || w == 0 || y + h > img.h() || x + w > img.w()) {
    throw DimensionError("crop window outside the image");
  }
  Image out(h, w, img.space());
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t k = 0; k < w; ++k) out.at(c, r, k) = img.at(c, y + r, x + k);
    }
  }
  return out;
}

Image crop_to_multiple(const Image& img, std::size_t r) {
  if (r == 0) throw ConfigurationError("crop_to_multiple: r must be >= 1");
  const std::size_t h = img.h() - img.h() % r;
  const std::size_t w = img.w() - img.w() % r;
  if (h == 0 || w == 0) throw DimensionError("image smaller than the scale factor");
  if (h == img.h() && w == img.w()) return img;
  return crop(img, (img.h() - h) / 2, (img.w() - w) / 2, h, w);
}

Tensor4 to_tensor(const Image& gray) {
  if (gray.channels() != 1) throw DimensionError("to_tensor: expected a single-channel image");
  Tensor4 t(Shape4{1, 1, gray.h(), gray.w()});
  std::copy(gray.values().begin(), gray.values().end(), t.values().begin());
  return t;
}

Image to_image(const Tensor4& t, std::size_t batch) {
  if (t.c() != 1 || batch >= t.n()) throw DimensionError("to_image: expected a single-channel tensor");
  Image out(t.h(), t.w(), ColorSpace::gray);
  auto src = t.plane(batch, 0);
  std::copy(src.begin(), src.end(), out.values().begin());
  out.clamp();
  return out;
}

}  // namespace mxsr
