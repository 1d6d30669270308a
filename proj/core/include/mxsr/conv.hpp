#pragma once

#include <cstddef>
#include <vector>

#include "mxsr/tensor.hpp"

namespace mxsr {

// Weights are (c_out, c_in, k, k); padding is zero-valued and must equal
// (k - 1) / 2 so the spatial size is preserved.
struct ConvParams {
  Tensor4 weights;
  std::vector<double> bias;
  std::size_t pad = 0;

  ConvParams() = default;
  ConvParams(std::size_t c_out, std::size_t c_in, std::size_t k);
  ConvParams(Tensor4 weights, std::vector<double> bias, std::size_t pad);

  std::size_t c_out() const noexcept { return weights.n(); }
  std::size_t c_in() const noexcept { return weights.c(); }
  std::size_t kernel() const noexcept { return weights.h(); }
  std::size_t fan_in() const noexcept { return c_in() * kernel() * kernel(); }
  std::size_t param_count() const noexcept { return weights.size() + bias.size(); }

  // Throws ConfigurationError unless the kernel is square and odd with
  // matching padding and bias length.
  void validate() const;
};

struct ConvGrads {
  Tensor4 input;
  Tensor4 weights;
  std::vector<double> bias;
};

Tensor4 conv2d_forward(const Tensor4& input, const ConvParams& p);

// Exact gradients of a scalar loss given dL/d(output) = grad_out.
ConvGrads conv2d_backward(const Tensor4& input, const ConvParams& p, const Tensor4& grad_out);

}  // namespace mxsr
