#pragma once

#include <cstddef>

#include "mxsr/image.hpp"

namespace mxsr {

// 10 log10(1 / MSE) over the images with `shave` pixels removed from every
// border. Returns +infinity when the images are identical.
double psnr(const Image& a, const Image& b, std::size_t shave = 0);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Single-scale SSIM with a normalized Gaussian window, averaged over every
// window position that lies fully inside the (shaved) images.
double ssim(const Image& a, const Image& b, std::size_t shave = 0, const SsimParams& params = {});

}  // namespace mxsr
