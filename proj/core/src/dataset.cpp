#include "mxsr/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "mxsr/error.hpp"
#include "mxsr/image_io.hpp"

namespace mxsr {

std::string to_string(Degradation d) { return d == Degradation::bicubic ? "bicubic" : "nearest"; }

Degradation parse_degradation(const std::string& name) {
  if (name == "bicubic") return Degradation::bicubic;
  if (name == "nearest") return Degradation::nearest;
  throw ConfigurationError("unknown degradation '" + name + "' (expected bicubic or nearest)");
}

ImagePair make_pair(const Image& hr, std::size_t r, const PairOptions& options) {
  if (r == 0) throw ConfigurationError("make_pair: scale must be >= 1");
  if (hr.h() < r || hr.w() < r) {
    throw DataError("image of " + std::to_string(hr.h()) + "x" + std::to_string(hr.w()) +
                    " is smaller than the scale factor " + std::to_string(r));
  }
  const Image cropped = crop_to_multiple(hr, r);
  ImagePair p;
  p.scale = r;
  p.hr_y = luma(cropped);
  if (options.quantize) p.hr_y = quantize8(p.hr_y);
  const ResampleMethod down =
      options.degradation == Degradation::bicubic ? ResampleMethod::bicubic : ResampleMethod::nearest;
  p.lr_y = resample(p.hr_y, p.hr_y.h() / r, p.hr_y.w() / r, down);
  if (options.quantize) p.lr_y = quantize8(p.lr_y);
  p.base_hr_y = resample(p.lr_y, p.hr_y.h(), p.hr_y.w(), ResampleMethod::nearest);
  return p;
}

std::vector<std::filesystem::path> list_dataset(const std::filesystem::path& source) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(source)) {
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.is_regular_file() && is_supported_image(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
  }
  std::ifstream in(source);
  if (!in) throw IoError(source.string(), "dataset source is neither a directory nor a readable manifest");
  const fs::path root = source.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    fs::path p = line.substr(first, last - first + 1);
    if (!p.is_absolute()) p = root / p;
    if (fs::is_directory(p)) {
      const auto inner = list_dataset(p);
      files.insert(files.end(), inner.begin(), inner.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

Dataset load_dataset(const std::filesystem::path& source, std::size_t r, const PairOptions& options,
                     std::string name) {
  Dataset d;
  d.name = name.empty() ? source.filename().string() : std::move(name);
  d.scale = r;
  for (const auto& file : list_dataset(source)) {
    ImagePair p = make_pair(load_image(file), r, options);
    p.name = file.stem().string();
    d.pairs.push_back(std::move(p));
  }
  if (d.pairs.empty()) throw DataError("dataset '" + source.string() + "' contains no images");
  return d;
}

void apply_dihedral(std::span<double> sq, std::size_t side, unsigned t) {
  if (t & 1u) {
    for (std::size_t y = 0; y < side; ++y) std::reverse(sq.begin() + y * side, sq.begin() + (y + 1) * side);
  }
  if (t & 2u) {
    for (std::size_t y = 0; y < side / 2; ++y) {
      std::swap_ranges(sq.begin() + y * side, sq.begin() + (y + 1) * side, sq.begin() + (side - 1 - y) * side);
    }
  }
  if (t & 4u) {
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = y + 1; x < side; ++x) std::swap(sq[y * side + x], sq[x * side + y]);
    }
  }
}

namespace {

void copy_crop(const Image& src, std::size_t y, std::size_t x, std::size_t side, std::span<double> dst) {
  for (std::size_t r = 0; r < side; ++r) {
    auto row = src.plane(0).subspan((y + r) * src.w() + x, side);
    std::copy(row.begin(), row.end(), dst.begin() + r * side);
  }
}

void scale_clamp(std::span<double> v, double u) {
  for (double& x : v) x = std::clamp(x * u, 0.0, 1.0);
}

}  // namespace

Batch sample_batch(const Dataset& data, const BatchConfig& cfg, Rng& rng) {
  if (data.pairs.empty()) throw DataError("sample_batch: dataset '" + data.name + "' is empty");
  const std::size_t r = data.scale;
  if (cfg.batch == 0) throw ConfigurationError("sample_batch: batch must be >= 1");
  if (cfg.crop_hr == 0 || cfg.crop_hr % r != 0) {
    throw ConfigurationError("crop size " + std::to_string(cfg.crop_hr) + " is not a multiple of scale " +
                             std::to_string(r));
  }
  for (const auto& p : data.pairs) {
    if (p.hr_y.h() < cfg.crop_hr || p.hr_y.w() < cfg.crop_hr) {
      throw ConfigurationError("crop size " + std::to_string(cfg.crop_hr) + " exceeds image '" + p.name + "'");
    }
  }
  const std::size_t crop_lr = cfg.crop_hr / r;
  Batch b{Tensor4(Shape4{cfg.batch, 1, crop_lr, crop_lr}), Tensor4(Shape4{cfg.batch, 1, cfg.crop_hr, cfg.crop_hr}),
          Tensor4(Shape4{cfg.batch, 1, cfg.crop_hr, cfg.crop_hr}), {}, {}};

  for (std::size_t i = 0; i < cfg.batch; ++i) {
    const ImagePair& p = data.pairs[rng.below(data.pairs.size())];
    const std::size_t ly = rng.below(p.lr_y.h() - crop_lr + 1);
    const std::size_t lx = rng.below(p.lr_y.w() - crop_lr + 1);
    const unsigned t = cfg.augment.flip_rotate ? static_cast<unsigned>(rng.below(8)) : 0u;
    const double u =
        cfg.augment.intensity ? rng.uniform(cfg.augment.intensity_lo, cfg.augment.intensity_hi) : 1.0;

    auto lr = b.lr_input.plane(i, 0);
    auto base = b.base.plane(i, 0);
    auto hr = b.hr.plane(i, 0);
    copy_crop(p.lr_y, ly, lx, crop_lr, lr);
    copy_crop(p.base_hr_y, ly * r, lx * r, cfg.crop_hr, base);
    copy_crop(p.hr_y, ly * r, lx * r, cfg.crop_hr, hr);
    for (auto plane : {lr, base, hr}) {
      apply_dihedral(plane, plane.size() == lr.size() ? crop_lr : cfg.crop_hr, t);
      if (u != 1.0) scale_clamp(plane, u);
    }
    for (double& v : lr) v -= 0.5;
    b.transforms.push_back(t);
    b.intensity.push_back(u);
  }
  return b;
}

}  // namespace mxsr
