#include "mxsr/conv.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "mxsr/error.hpp"
#include "mxsr/parallel.hpp"

namespace mxsr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

// Lowers one sample to a (c_in*k*k) x (h*w) patch matrix. Row r = (i, dy, dx)
// holds the zero-padded input shifted by (dy - pad, dx - pad).
void im2col(const double* in, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            std::size_t pad, double* col) {
  const auto ih = static_cast<std::ptrdiff_t>(h);
  const auto iw = static_cast<std::ptrdiff_t>(w);
  const auto p = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    const double* plane = in + ch * h * w;
    for (std::size_t dy = 0; dy < k; ++dy) {
      for (std::size_t dx = 0; dx < k; ++dx) {
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - p;
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - p;
        const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -ox);
        const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(iw, iw - ox);
        for (std::ptrdiff_t y = 0; y < ih; ++y) {
          double* row = col + y * iw;
          const std::ptrdiff_t sy = y + oy;
          if (sy < 0 || sy >= ih || x_lo >= x_hi) {
            std::fill(row, row + iw, 0.0);
            continue;
          }
          const double* src = plane + sy * iw;
          std::fill(row, row + x_lo, 0.0);
          for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) row[x] = src[x + ox];
          std::fill(row + x_hi, row + iw, 0.0);
        }
        col += h * w;
      }
    }
  }
}

// Adjoint of im2col: scatters patch-matrix gradients back into the input.
void col2im(const double* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            std::size_t pad, double* out) {
  const auto ih = static_cast<std::ptrdiff_t>(h);
  const auto iw = static_cast<std::ptrdiff_t>(w);
  const auto p = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    double* plane = out + ch * h * w;
    for (std::size_t dy = 0; dy < k; ++dy) {
      for (std::size_t dx = 0; dx < k; ++dx) {
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - p;
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - p;
        const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -ox);
        const std::ptrdiff_t x_hi = std::min<std::ptrdiff_t>(iw, iw - ox);
        for (std::ptrdiff_t y = 0; y < ih; ++y) {
          const std::ptrdiff_t sy = y + oy;
          if (sy < 0 || sy >= ih) continue;
          const double* row = col + y * iw;
          double* dst = plane + sy * iw;
          for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) dst[x + ox] += row[x];
        }
        col += h * w;
      }
    }
  }
}

void check_input(const Tensor4& input, const ConvParams& p) {
  p.validate();
  if (input.c() != p.c_in()) {
    throw DimensionError("conv2d: input has " + std::to_string(input.c()) +
                         " channels, weights expect " + std::to_string(p.c_in()));
  }
}

}  // namespace

ConvParams::ConvParams(std::size_t c_out, std::size_t c_in, std::size_t k)
    : weights(Shape4{c_out, c_in, k, k}), bias(c_out, 0.0), pad((k - 1) / 2) {
  validate();
}

ConvParams::ConvParams(Tensor4 w, std::vector<double> b, std::size_t padding)
    : weights(std::move(w)), bias(std::move(b)), pad(padding) {
  validate();
}

void ConvParams::validate() const {
  if (weights.empty()) throw ConfigurationError("conv: empty weights");
  if (weights.h() != weights.w()) {
    throw ConfigurationError("conv: kernel must be square, got " + std::to_string(weights.h()) +
                             "x" + std::to_string(weights.w()));
  }
  if (weights.h() % 2 == 0) throw ConfigurationError("conv: kernel size must be odd");
  if (pad != (weights.h() - 1) / 2) {
    throw ConfigurationError("conv: pad " + std::to_string(pad) + " does not preserve size for k=" +
                             std::to_string(weights.h()));
  }
  if (bias.size() != weights.n()) {
    throw ConfigurationError("conv: bias length " + std::to_string(bias.size()) +
                             " != c_out " + std::to_string(weights.n()));
  }
}

Tensor4 conv2d_forward(const Tensor4& input, const ConvParams& p) {
  check_input(input, p);
  const std::size_t h = input.h(), w = input.w(), k = p.kernel();
  const std::size_t rows = p.fan_in();
  const std::size_t hw = h * w;
  Tensor4 out(Shape4{input.n(), p.c_out(), h, w});
  ConstMapMatrix wmat(p.weights.values().data(), static_cast<Eigen::Index>(p.c_out()),
                      static_cast<Eigen::Index>(rows));
  Eigen::Map<const Eigen::VectorXd> bias(p.bias.data(), static_cast<Eigen::Index>(p.c_out()));

  parallel_for(0, input.n(), [&](std::size_t b) {
    RowMatrix col(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw));
    im2col(input.values().data() + input.index(b, 0, 0, 0), p.c_in(), h, w, k, p.pad, col.data());
    MapMatrix dst(out.values().data() + out.index(b, 0, 0, 0),
                  static_cast<Eigen::Index>(p.c_out()), static_cast<Eigen::Index>(hw));
    dst.noalias() = wmat * col;
    dst.colwise() += bias;
  });
  return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const ConvParams& p, const Tensor4& grad_out) {
  check_input(input, p);
  const Shape4 expected{input.n(), p.c_out(), input.h(), input.w()};
  if (grad_out.shape() != expected) {
    throw DimensionError("conv2d_backward: grad_out shape " + to_string(grad_out.shape()) +
                         " != forward output shape " + to_string(expected));
  }
  const std::size_t h = input.h(), w = input.w(), k = p.kernel();
  const std::size_t rows = p.fan_in();
  const std::size_t hw = h * w;
  const auto c_out = static_cast<Eigen::Index>(p.c_out());

  ConvGrads g{Tensor4(input.shape()), Tensor4(p.weights.shape()), std::vector<double>(p.c_out(), 0.0)};
  ConstMapMatrix wmat(p.weights.values().data(), c_out, static_cast<Eigen::Index>(rows));

  // Per-sample weight gradients are reduced afterwards in batch order so the
  // result does not depend on the worker count.
  std::vector<RowMatrix> per_sample(input.n());
  parallel_for(0, input.n(), [&](std::size_t b) {
    RowMatrix col(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw));
    im2col(input.values().data() + input.index(b, 0, 0, 0), p.c_in(), h, w, k, p.pad, col.data());
    ConstMapMatrix gout(grad_out.values().data() + grad_out.index(b, 0, 0, 0), c_out,
                        static_cast<Eigen::Index>(hw));
    per_sample[b].noalias() = gout * col.transpose();
    col.noalias() = wmat.transpose() * gout;
    col2im(col.data(), p.c_in(), h, w, k, p.pad, g.input.values().data() + g.input.index(b, 0, 0, 0));
  });

  MapMatrix gw(g.weights.values().data(), c_out, static_cast<Eigen::Index>(rows));
  gw.setZero();
  for (const auto& m : per_sample) gw += m;

  for (std::size_t b = 0; b < input.n(); ++b) {
    for (std::size_t o = 0; o < p.c_out(); ++o) {
      double acc = 0.0;
      for (double v : grad_out.plane(b, o)) acc += v;
      g.bias[o] += acc;
    }
  }
  return g;
}

}  // namespace mxsr
