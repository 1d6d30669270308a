#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mxsr/dataset.hpp"
#include "mxsr/image.hpp"
#include "mxsr/network.hpp"

namespace mxsr {

struct ImageScore {
  std::string name;
  double psnr;
  double ssim;
};

struct EvalFailure {
  std::string name;
  std::string message;
};

struct EvalReport {
  std::string dataset;
  std::size_t scale = 0;
  std::size_t shave = 0;
  std::vector<ImageScore> images;
  std::vector<EvalFailure> failures;
  double mean_psnr = 0.0;  // +inf if any image was reproduced exactly
  double mean_ssim = 0.0;

  std::string to_text() const;
  std::string to_csv() const;
};

struct EvalOptions {
  std::optional<std::size_t> shave;  // defaults to the scale factor
  bool quantize_output = true;       // round the prediction to 8-bit levels
};

// Clamped base + residual for one pair, as an HR-sized luma image.
Image super_resolve(Network& net, const ImagePair& pair, bool quantize_output = true);

// Scores every pair of an already loaded dataset.
EvalReport evaluate(Network& net, const Dataset& data, const EvalOptions& options = {});

// Loads images one at a time; files that fail to load or degrade are
// reported in `failures` and skipped.
EvalReport evaluate(Network& net, const std::filesystem::path& source, std::size_t r,
                    const PairOptions& pairs = {}, const EvalOptions& options = {});

// Interpolation baseline: the LR luma resampled back to HR size.
EvalReport evaluate_interpolation(const Dataset& data, ResampleMethod method, const EvalOptions& options = {});

// Full-color upscale of a low-resolution image: the network handles luma,
// chroma is upscaled bicubically. Gray input yields gray output.
Image upscale_image(Network& net, const Image& lr);

// Mean of finite scores, or +inf when any PSNR is infinite.
void summarize(EvalReport& report);

}  // namespace mxsr
