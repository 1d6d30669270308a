#include "mxsr/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mxsr/error.hpp"
#include "mxsr/image_io.hpp"
#include "mxsr/metrics.hpp"

namespace mxsr {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Tensor4 shifted(const Image& lr_y) {
  Tensor4 t = to_tensor(lr_y);
  for (double& v : t.values()) v -= 0.5;
  return t;
}

ImageScore score(const std::string& name, const Image& pred, const Image& hr, std::size_t shave) {
  return {name, psnr(pred, hr, shave), ssim(pred, hr, shave)};
}

}  // namespace

void summarize(EvalReport& report) {
  report.mean_psnr = 0.0;
  report.mean_ssim = 0.0;
  if (report.images.empty()) return;
  bool infinite = false;
  for (const auto& s : report.images) {
    if (std::isinf(s.psnr)) infinite = true;
    report.mean_psnr += s.psnr;
    report.mean_ssim += s.ssim;
  }
  const double n = static_cast<double>(report.images.size());
  report.mean_psnr = infinite ? std::numeric_limits<double>::infinity() : report.mean_psnr / n;
  report.mean_ssim /= n;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "dataset " << dataset << " scale " << scale << " shave " << shave << "\n";
  for (const auto& s : images) out << "  " << s.name << "  psnr " << fmt(s.psnr) << "  ssim " << fmt(s.ssim) << "\n";
  for (const auto& f : failures) out << "  " << f.name << "  FAILED: " << f.message << "\n";
  out << "mean psnr " << fmt(mean_psnr) << " ssim " << fmt(mean_ssim) << " over " << images.size() << " images";
  if (!failures.empty()) out << " (" << failures.size() << " failed)";
  out << "\n";
  return out.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "dataset,image,psnr,ssim\n";
  for (const auto& s : images) out << dataset << "," << s.name << "," << fmt(s.psnr) << "," << fmt(s.ssim) << "\n";
  out << dataset << ",mean," << fmt(mean_psnr) << "," << fmt(mean_ssim) << "\n";
  return out.str();
}

Image super_resolve(Network& net, const ImagePair& pair, bool quantize_output) {
  if (pair.scale != net.scale()) {
    throw ConfigurationError("image pair has scale " + std::to_string(pair.scale) + " but the network upscales by " +
                             std::to_string(net.scale()));
  }
  const Tensor4 out = net.forward(shifted(pair.lr_y), to_tensor(pair.base_hr_y));
  Image sr = to_image(out);
  return quantize_output ? quantize8(sr) : sr;
}

EvalReport evaluate(Network& net, const Dataset& data, const EvalOptions& options) {
  EvalReport report;
  report.dataset = data.name;
  report.scale = data.scale;
  report.shave = options.shave.value_or(data.scale);
  for (const auto& p : data.pairs) {
    report.images.push_back(score(p.name, super_resolve(net, p, options.quantize_output), p.hr_y, report.shave));
  }
  summarize(report);
  return report;
}

EvalReport evaluate(Network& net, const std::filesystem::path& source, std::size_t r, const PairOptions& pairs,
                    const EvalOptions& options) {
  EvalReport report;
  report.dataset = source.filename().string();
  report.scale = r;
  report.shave = options.shave.value_or(r);
  for (const auto& file : list_dataset(source)) {
    const std::string name = file.stem().string();
    try {
      ImagePair p = make_pair(load_image(file), r, pairs);
      p.name = name;
      report.images.push_back(score(name, super_resolve(net, p, options.quantize_output), p.hr_y, report.shave));
    } catch (const Error& e) {
      report.failures.push_back({name, e.what()});
    }
  }
  summarize(report);
  return report;
}

EvalReport evaluate_interpolation(const Dataset& data, ResampleMethod method, const EvalOptions& options) {
  EvalReport report;
  report.dataset = data.name;
  report.scale = data.scale;
  report.shave = options.shave.value_or(data.scale);
  for (const auto& p : data.pairs) {
    Image up = resample(p.lr_y, p.hr_y.h(), p.hr_y.w(), method);
    if (options.quantize_output) up = quantize8(up);
    report.images.push_back(score(p.name, up, p.hr_y, report.shave));
  }
  summarize(report);
  return report;
}

Image upscale_image(Network& net, const Image& lr) {
  const std::size_t r = net.scale();
  const std::size_t oh = lr.h() * r, ow = lr.w() * r;
  const Image ycc = lr.space() == ColorSpace::rgb ? rgb_to_ycbcr(lr) : lr;
  const Image y = channel(ycc, 0);
  const Image base = resample(y, oh, ow, ResampleMethod::nearest);
  const Image sr_y = to_image(net.forward(shifted(y), to_tensor(base)));
  if (lr.space() == ColorSpace::gray) return sr_y;

  Image out(oh, ow, ColorSpace::ycbcr);
  auto dst = out.plane(0);
  auto src = sr_y.plane(0);
  std::copy(src.begin(), src.end(), dst.begin());
  for (std::size_t c = 1; c < 3; ++c) {
    const Image up = resample(channel(ycc, c), oh, ow, ResampleMethod::bicubic);
    auto s = up.plane(0);
    auto d = out.plane(c);
    std::copy(s.begin(), s.end(), d.begin());
  }
  if (lr.space() == ColorSpace::ycbcr) return out;
  Image rgb = ycbcr_to_rgb(out);
  rgb.clamp();
  return rgb;
}

}  // namespace mxsr
