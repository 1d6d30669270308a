#include "mxsr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mxsr/error.hpp"

namespace mxsr {

std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " + std::to_string(s.h) +
         ", " + std::to_string(s.w) + ")";
}

namespace {

void require_positive(const Shape4& s) {
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw DimensionError("tensor dimensions must be >= 1, got " + to_string(s));
  }
}

void require_same(const Tensor4& a, const Tensor4& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

}  // namespace

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape) {
  require_positive(shape_);
  data_.assign(shape_.size(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  require_positive(shape_);
  if (data_.size() != shape_.size()) {
    throw DimensionError("tensor of shape " + to_string(shape_) + " needs " +
                         std::to_string(shape_.size()) + " values, got " +
                         std::to_string(data_.size()));
  }
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor4::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor4 elementwise(ElementwiseOp op, const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "elementwise");
  Tensor4 out(a.shape());
  auto o = out.values();
  auto x = a.values();
  auto y = b.values();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
      break;
    case ElementwiseOp::max:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] >= y[i] ? x[i] : y[i];
      break;
    case ElementwiseOp::min:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] <= y[i] ? x[i] : y[i];
      break;
    case ElementwiseOp::mul_scalar:
      throw ConfigurationError("mul_scalar takes a scalar operand");
  }
  return out;
}

Tensor4 elementwise(ElementwiseOp op, const Tensor4& a, double s) {
  Tensor4 out(a.shape());
  auto o = out.values();
  auto x = a.values();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + s;
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - s;
      break;
    case ElementwiseOp::mul_scalar:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * s;
      break;
    case ElementwiseOp::max:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] >= s ? x[i] : s;
      break;
    case ElementwiseOp::min:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] <= s ? x[i] : s;
      break;
  }
  return out;
}

void accumulate(Tensor4& dst, const Tensor4& src) {
  require_same(dst, src, "accumulate");
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double dot(const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "dot");
  double acc = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

std::vector<Tensor4> split_channels(const Tensor4& x, std::size_t parts) {
  if (parts == 0 || x.c() % parts != 0) {
    throw ArityError("split_channels: " + std::to_string(x.c()) + " channels not divisible into " +
                     std::to_string(parts) + " parts");
  }
  const std::size_t cp = x.c() / parts;
  const std::size_t block = cp * x.h() * x.w();
  std::vector<Tensor4> out;
  out.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    Tensor4 t(Shape4{x.n(), cp, x.h(), x.w()});
    for (std::size_t b = 0; b < x.n(); ++b) {
      auto src = x.values().subspan(x.index(b, p * cp, 0, 0), block);
      std::copy(src.begin(), src.end(), t.values().begin() + t.index(b, 0, 0, 0));
    }
    out.push_back(std::move(t));
  }
  return out;
}

Tensor4 concat_channels(std::span<const Tensor4> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  const Shape4 first = parts.front().shape();
  std::size_t channels = 0;
  for (const auto& p : parts) {
    if (p.n() != first.n || p.h() != first.h || p.w() != first.w) {
      throw DimensionError("concat_channels: incompatible part " + to_string(p.shape()));
    }
    channels += p.c();
  }
  Tensor4 out(Shape4{first.n, channels, first.h, first.w});
  for (std::size_t b = 0; b < first.n; ++b) {
    std::size_t ch = 0;
    for (const auto& p : parts) {
      auto src = p.values().subspan(p.index(b, 0, 0, 0), p.c() * p.h() * p.w());
      std::copy(src.begin(), src.end(), out.values().begin() + out.index(b, ch, 0, 0));
      ch += p.c();
    }
  }
  return out;
}

}  // namespace mxsr
