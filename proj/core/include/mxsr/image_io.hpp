#pragma once

#include <filesystem>

#include "mxsr/image.hpp"

namespace mxsr {

// PNG, BMP and binary/ASCII PGM/PPM. Color files load as RGB, single-channel
// files as gray; 8-bit samples map to k/255. Alpha is discarded.
Image load_image(const std::filesystem::path& path);

// Format from the extension (.png, .bmp, .pgm, .ppm). Values are rounded to
// 8 bits. YCbCr images are converted to RGB first.
void save_image(const Image& img, const std::filesystem::path& path);

bool is_supported_image(const std::filesystem::path& path);

}  // namespace mxsr
