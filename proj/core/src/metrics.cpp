#include "mxsr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mxsr/error.hpp"

namespace mxsr {

namespace {

void check_pair(const Image& a, const Image& b, std::size_t shave, const char* what) {
  if (a.h() != b.h() || a.w() != b.w() || a.channels() != b.channels()) {
    throw DimensionError(std::string(what) + ": image sizes differ");
  }
  if (a.channels() != 1) throw DimensionError(std::string(what) + ": expected single-channel images");
  if (2 * shave >= a.h() || 2 * shave >= a.w()) {
    throw DimensionError(std::string(what) + ": shave " + std::to_string(shave) + " leaves no pixels");
  }
}

// Separable valid-mode filtering of an (h, w) plane with a 1-D kernel.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(oh * w, 0.0);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = src.data() + (y + i) * w;
      double* dst = tmp.data() + y * w;
      for (std::size_t x = 0; x < w; ++x) dst[x] += k[i] * row[x];
    }
  }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y) {
    const double* row = tmp.data() + y * w;
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += k[i] * row[x + i];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, std::size_t shave) {
  check_pair(a, b, shave, "psnr");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = shave; y < a.h() - shave; ++y) {
    for (std::size_t x = shave; x < a.w() - shave; ++x) {
      const double d = a.at(0, y, x) - b.at(0, y, x);
      sum += d * d;
      ++count;
    }
  }
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, std::size_t shave, const SsimParams& p) {
  check_pair(a, b, shave, "ssim");
  const std::size_t h = a.h() - 2 * shave, w = a.w() - 2 * shave;
  if (h < p.window || w < p.window) {
    throw DimensionError("ssim: image of " + std::to_string(h) + "x" + std::to_string(w) +
                         " is smaller than the " + std::to_string(p.window) + "px window");
  }
  std::vector<double> kernel(p.window);
  const double center = (static_cast<double>(p.window) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < p.window; ++i) {
    const double d = static_cast<double>(i) - center;
    kernel[i] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
    total += kernel[i];
  }
  for (double& v : kernel) v /= total;

  std::vector<double> x(h * w), y(h * w), xx(h * w), yy(h * w), xy(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double u = a.at(0, r + shave, c + shave), v = b.at(0, r + shave, c + shave);
      const std::size_t i = r * w + c;
      x[i] = u;
      y[i] = v;
      xx[i] = u * u;
      yy[i] = v * v;
      xy[i] = u * v;
    }
  }
  const auto mx = filter_valid(x, h, w, kernel);
  const auto my = filter_valid(y, h, w, kernel);
  const auto sxx = filter_valid(xx, h, w, kernel);
  const auto syy = filter_valid(yy, h, w, kernel);
  const auto sxy = filter_valid(xy, h, w, kernel);

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double mu_x = mx[i], mu_y = my[i];
    const double var_x = sxx[i] - mu_x * mu_x;
    const double var_y = syy[i] - mu_y * mu_y;
    const double cov = sxy[i] - mu_x * mu_y;
    acc += ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) /
           ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
  }
  return acc / static_cast<double>(mx.size());
}

}  // namespace mxsr
