#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mxsr/activations.hpp"
#include "mxsr/conv.hpp"
#include "mxsr/tensor.hpp"

namespace mxsr {

// out[b, c, y, x] = in[b, c*r*r + (y % r)*r + (x % r), y / r, x / r]
Tensor4 pixel_shuffle(const Tensor4& x, std::size_t r);
// Exact inverse of pixel_shuffle; also its adjoint, since both are permutations.
Tensor4 pixel_unshuffle(const Tensor4& x, std::size_t r);

enum class Preset : std::uint8_t { toy = 0, espcn_mu = 1, vdsr_mu = 2, dnsr = 3 };

std::string to_string(Preset p);
Preset parse_preset(std::string_view name);

struct ConvLayer {
  std::size_t kernel;
  std::size_t c_in;
  std::size_t c_out;
};
struct ActivationLayer {
  Activation activation;
};
struct ShuffleLayer {
  std::size_t scale;
};
using LayerDesc = std::variant<ConvLayer, ActivationLayer, ShuffleLayer>;

// Identity skip: the input of layer `first` is added to the output of layer
// `last` (inclusive indices into NetworkSpec::layers).
struct ResidualUnit {
  std::size_t first;
  std::size_t last;
};

struct NetworkSpec {
  Preset preset = Preset::toy;
  Activation activation = Activation::mu();
  std::size_t scale = 4;
  std::vector<LayerDesc> layers;
  std::vector<ResidualUnit> residual_units;

  std::size_t conv_count() const;
  std::vector<ConvLayer> convs() const;
  // Throws SpecificationError (ArityError for channel splits) on any
  // violated structural rule.
  void validate() const;
};

struct PresetOptions {
  Preset preset = Preset::toy;
  Activation activation = Activation::mu();  // toy only; other presets use MU
  std::size_t width = 0;                     // toy filter count; 0 picks the default for the unit
  std::size_t depth = 6;                     // toy conv count
  std::size_t scale = 4;
};

// Toy width giving roughly equal parameter budgets across units:
// 12 for the ReLU family and MU-S, 16 for MU/MU-M, 24 for MU-D/MU-R.
std::size_t default_toy_width(const Activation& a);

NetworkSpec make_spec(const PresetOptions& options);

// Checkpoint preset id: family in bits 0-7, activation type in bits 8-15,
// MU-R depth in bits 16-23.
std::uint32_t preset_id(const NetworkSpec& spec);
// Rebuilds a spec from a checkpoint header; the toy width comes from the
// first conv layer and the depth from the conv count.
NetworkSpec spec_from_preset_id(std::uint32_t id, std::size_t scale, std::size_t conv_count,
                                std::size_t first_width);

struct ParamGrads {
  Tensor4 weights;
  std::vector<double> bias;
};

struct NetworkGrads {
  std::vector<ParamGrads> layers;
  Tensor4 input;
};

struct ForwardOptions {
  bool training = false;  // keep caches for backward
  bool clamp = true;      // clamp base + residual to [0, 1]
  bool capture_activations = false;
};

class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::vector<ConvParams>& params() noexcept { return params_; }
  const std::vector<ConvParams>& params() const noexcept { return params_; }
  std::size_t scale() const noexcept { return spec_.scale; }

  // Uniform in [-sqrt(3/fan_in), sqrt(3/fan_in)], zero biases.
  void initialize(std::uint64_t seed);
  void zero_parameters();

  // lr_y: (n, 1, h, w) mean-shifted luma. base_hr_y: (n, 1, r*h, r*w).
  Tensor4 forward(const Tensor4& lr_y, const Tensor4& base_hr_y, const ForwardOptions& options = {});
  // Residual after the pixel shuffle, without the base.
  Tensor4 residual(const Tensor4& lr_y, const ForwardOptions& options = {});

  // Gradients with respect to every parameter and to lr_y, given the gradient
  // of the loss with respect to the forward output. If that forward clamped,
  // only positions strictly inside (0, 1) pass gradient.
  NetworkGrads backward(const Tensor4& grad_out);

  bool has_training_state() const noexcept { return has_cache_; }
  void clear_cache();

  // Post-activation tensors from the last forward with capture_activations.
  const std::vector<Tensor4>& activation_outputs() const noexcept { return activation_outputs_; }
  const std::vector<ActivationTrace>& activation_traces() const noexcept { return traces_; }

  // Every comparison outcome recorded by the last training forward
  // (selection masks and ReLU-family signs). Two forwards with equal
  // signatures lie on the same linear piece of the network.
  std::vector<std::uint8_t> activation_signature() const;

 private:
  Tensor4 run_layers(const Tensor4& lr_y, const ForwardOptions& options);

  NetworkSpec spec_;
  std::vector<ConvParams> params_;

  bool has_cache_ = false;
  std::vector<Tensor4> conv_inputs_;         // indexed by conv number
  std::vector<ActivationTrace> traces_;      // indexed by activation number
  std::vector<Tensor4> activation_outputs_;  // idem, when captured
  std::optional<std::vector<std::uint8_t>> clamp_mask_;
};

Network build_network(const PresetOptions& options, std::uint64_t seed);

std::size_t count_params(const Network& net);
std::size_t count_params(const NetworkSpec& spec);

// Elementwise clamp to [0, 1].
Tensor4 clamp01(const Tensor4& x);

}  // namespace mxsr
