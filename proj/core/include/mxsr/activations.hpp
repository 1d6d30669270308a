#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mxsr/tensor.hpp"

namespace mxsr {

enum class ActivationType : std::uint8_t {
  relu = 0,
  lrelu = 1,
  elu = 2,
  mu = 3,    // max(x1, x2)
  mu_d = 4,  // max(x1, x2) - max(x3, x4)
  mu_m = 5,  // min(x1, x2)
  mu_s = 6,  // cat(max(x1, x2), min(x1, x2))
  mu_r = 7,  // MU applied `depth` times
};

// One activation unit with its parameters. Channel groups x1, x2, ... are
// contiguous channel blocks in order (x1 is the first half or quarter).
struct Activation {
  ActivationType type = ActivationType::relu;
  double slope = 0.01;     // LReLU negative-branch slope
  double alpha = 1.0;      // ELU saturation
  std::uint32_t depth = 1; // MU-R recursion count

  static Activation relu() { return {ActivationType::relu}; }
  static Activation lrelu(double slope = 0.01) { return {ActivationType::lrelu, slope}; }
  static Activation elu(double alpha = 1.0) { return {ActivationType::elu, 0.01, alpha}; }
  static Activation mu() { return {ActivationType::mu}; }
  static Activation mu_d() { return {ActivationType::mu_d}; }
  static Activation mu_m() { return {ActivationType::mu_m}; }
  static Activation mu_s() { return {ActivationType::mu_s}; }
  static Activation mu_r(std::uint32_t depth);

  bool operator==(const Activation&) const = default;
};

// Canonical names: relu, lrelu, elu, mu, mu-d, mu-m, mu-s, mu-r:<n>.
std::string to_string(const Activation& a);
Activation parse_activation(std::string_view name);

// The eight units in canonical order (MU-R with depth 2).
std::vector<Activation> all_activation_kinds();

// Output channel count, or ArityError if `c_in` cannot be split as needed.
std::size_t act_output_channels(const Activation& a, std::size_t c_in);

// Selection masks recorded by the forward pass. For comparison units each
// mask byte is 1 where the first operand won (ties go to the first operand);
// MU-R stores one mask per recursion level. The ReLU family keeps its input.
struct ActivationTrace {
  Activation kind;
  Shape4 input_shape{0, 0, 0, 0};
  Shape4 output_shape{0, 0, 0, 0};
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<Shape4> mask_shapes;
  Tensor4 input;  // ReLU, LReLU, ELU only

  bool valid() const noexcept { return input_shape.size() != 0; }
};

struct ActivationResult {
  Tensor4 output;
  ActivationTrace trace;
};

ActivationResult act_forward(const Activation& a, const Tensor4& x);

// Routes grad_a back through the recorded selections. StateError if the
// trace is missing or was produced by a different unit.
Tensor4 act_backward(const Activation& a, const ActivationTrace& trace, const Tensor4& grad_a);

}  // namespace mxsr
