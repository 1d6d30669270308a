#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mxsr/image.hpp"
#include "mxsr/random.hpp"
#include "mxsr/tensor.hpp"

namespace mxsr {

enum class Degradation { bicubic, nearest };

std::string to_string(Degradation d);
Degradation parse_degradation(const std::string& name);

struct PairOptions {
  Degradation degradation = Degradation::bicubic;
  // Round the luma and the LR plane to 8-bit levels, as if each stage had
  // been stored as an 8-bit image.
  bool quantize = true;
};

// HR luma, its downscaled LR luma, and the nearest-neighbor upscale of the
// LR luma back to HR size (the residual base). hr = r x lr exactly.
struct ImagePair {
  std::string name;
  std::size_t scale = 0;
  Image hr_y;
  Image lr_y;
  Image base_hr_y;
};

// Center-crops `hr` to multiples of r, extracts luma, degrades and builds
// the base. DataError when a side is shorter than r.
ImagePair make_pair(const Image& hr, std::size_t r, const PairOptions& options = {});

// A directory (globbed for supported image files, sorted by name) or a
// manifest file listing paths one per line ('#' starts a comment). Relative
// entries resolve against the manifest's directory; directory entries expand
// to their images.
std::vector<std::filesystem::path> list_dataset(const std::filesystem::path& source);

struct Dataset {
  std::string name;
  std::size_t scale = 0;
  std::vector<ImagePair> pairs;
};

Dataset load_dataset(const std::filesystem::path& source, std::size_t r, const PairOptions& options = {},
                     std::string name = {});

struct AugmentConfig {
  bool flip_rotate = true;  // uniform over the 8 flips/rotations of the square
  bool intensity = false;   // multiply by u ~ U(lo, hi), then clamp
  double intensity_lo = 0.8;
  double intensity_hi = 1.2;
};

struct BatchConfig {
  std::size_t batch = 2;
  std::size_t crop_hr = 40;
  AugmentConfig augment;
};

// lr_input is the LR crop shifted by -0.5; base and hr are HR-sized.
struct Batch {
  Tensor4 lr_input;
  Tensor4 base;
  Tensor4 hr;
  std::vector<unsigned> transforms;
  std::vector<double> intensity;
};

// Draws `batch` aligned crops. The LR crop starts at the HR coordinates
// divided by r and every augmentation is applied identically to LR, base
// and HR. ConfigurationError if crop_hr is not a multiple of r or exceeds
// an image; DataError on an empty dataset.
Batch sample_batch(const Dataset& data, const BatchConfig& cfg, Rng& rng);

// Applies dihedral transform t in [0, 8) to a square plane in place:
// bit 0 mirrors columns, bit 1 mirrors rows, bit 2 transposes (applied last).
void apply_dihedral(std::span<double> square, std::size_t side, unsigned t);

}  // namespace mxsr
