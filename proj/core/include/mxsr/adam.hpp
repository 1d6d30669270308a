#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mxsr/network.hpp"

namespace mxsr {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments per parameter buffer. For a network, buffer 2i is
// the weight tensor of conv i and buffer 2i+1 its bias.
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState for_network(const Network& net, AdamHyper hyper = {});
  static AdamState for_buffers(std::span<const std::size_t> sizes, AdamHyper hyper = {});
};

// Bias-corrected update of one buffer at step t (t >= 1):
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::uint64_t t, const AdamHyper& hyper, double lr);

// Advances state.step by one and updates every buffer. StateError if the
// state does not mirror the parameter shapes.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, double lr);
void adam_step(Network& net, const NetworkGrads& grads, AdamState& state, double lr);

}  // namespace mxsr
