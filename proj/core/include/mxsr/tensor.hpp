#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mxsr {

struct Shape4 {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const noexcept { return n * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }
  bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

// Dense rank-4 array in batch, channel, row, column order (column fastest).
// Checkpoints, oracles and kernels all rely on this layout.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : Tensor4(Shape4{n, c, h, w}, fill) {}
  Tensor4(Shape4 shape, std::vector<double> values);

  const Shape4& shape() const noexcept { return shape_; }
  std::size_t n() const noexcept { return shape_.n; }
  std::size_t c() const noexcept { return shape_.c; }
  std::size_t h() const noexcept { return shape_.h; }
  std::size_t w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const noexcept {
    return ((b * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  double& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) noexcept {
    return data_[index(b, ch, y, x)];
  }
  double at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const noexcept {
    return data_[index(b, ch, y, x)];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  // One (h, w) plane of sample b, channel ch.
  std::span<double> plane(std::size_t b, std::size_t ch) noexcept {
    return std::span<double>(data_).subspan(index(b, ch, 0, 0), shape_.plane());
  }
  std::span<const double> plane(std::size_t b, std::size_t ch) const noexcept {
    return std::span<const double>(data_).subspan(index(b, ch, 0, 0), shape_.plane());
  }

  void fill(double v);
  bool all_finite() const noexcept;

  bool operator==(const Tensor4&) const = default;

 private:
  Shape4 shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

enum class ElementwiseOp { add, sub, mul_scalar, max, min };

// Binary tensor form; shapes must be identical. mul_scalar is rejected here.
Tensor4 elementwise(ElementwiseOp op, const Tensor4& a, const Tensor4& b);
// Scalar form: applies `op` between every element of `a` and `s`.
Tensor4 elementwise(ElementwiseOp op, const Tensor4& a, double s);

inline Tensor4 add(const Tensor4& a, const Tensor4& b) { return elementwise(ElementwiseOp::add, a, b); }
inline Tensor4 sub(const Tensor4& a, const Tensor4& b) { return elementwise(ElementwiseOp::sub, a, b); }
inline Tensor4 scale(const Tensor4& a, double s) { return elementwise(ElementwiseOp::mul_scalar, a, s); }
inline Tensor4 maximum(const Tensor4& a, const Tensor4& b) { return elementwise(ElementwiseOp::max, a, b); }
inline Tensor4 minimum(const Tensor4& a, const Tensor4& b) { return elementwise(ElementwiseOp::min, a, b); }

// In-place accumulate: dst += src.
void accumulate(Tensor4& dst, const Tensor4& src);

double dot(const Tensor4& a, const Tensor4& b);

// Part i holds channels [i*c/parts, (i+1)*c/parts).
std::vector<Tensor4> split_channels(const Tensor4& x, std::size_t parts);
Tensor4 concat_channels(std::span<const Tensor4> parts);

}  // namespace mxsr
