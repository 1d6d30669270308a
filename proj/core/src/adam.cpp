#include "mxsr/adam.hpp"

#include <cmath>
#include <string>

#include "mxsr/error.hpp"

namespace mxsr {

AdamState AdamState::for_buffers(std::span<const std::size_t> sizes, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (std::size_t n : sizes) {
    s.m.emplace_back(n, 0.0);
    s.v.emplace_back(n, 0.0);
  }
  return s;
}

AdamState AdamState::for_network(const Network& net, AdamHyper hyper) {
  std::vector<std::size_t> sizes;
  for (const auto& p : net.params()) {
    sizes.push_back(p.weights.size());
    sizes.push_back(p.bias.size());
  }
  return for_buffers(sizes, hyper);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::uint64_t t, const AdamHyper& h, double lr) {
  const double td = static_cast<double>(t);
  const double c1 = 1.0 - std::pow(h.beta1, td);
  const double c2 = 1.0 - std::pow(h.beta2, td);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw StateError("adam_step: state tracks " + std::to_string(state.m.size()) + " buffers, got " +
                     std::to_string(params.size()) + " parameters and " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size() ||
        params[i].size() != state.v[i].size()) {
      throw StateError("adam_step: buffer " + std::to_string(i) + " size mismatch");
    }
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i], grads[i], state.m[i], state.v[i], state.step, state.hyper, lr);
  }
}

void adam_step(Network& net, const NetworkGrads& grads, AdamState& state, double lr) {
  if (grads.layers.size() != net.params().size()) {
    throw StateError("adam_step: gradient set does not match the network");
  }
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> g;
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    auto& p = net.params()[i];
    params.emplace_back(p.weights.values());
    params.emplace_back(p.bias);
    g.emplace_back(grads.layers[i].weights.values());
    g.emplace_back(grads.layers[i].bias);
  }
  adam_step(params, g, state, lr);
}

}  // namespace mxsr
