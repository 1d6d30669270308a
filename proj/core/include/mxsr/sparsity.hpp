#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mxsr/dataset.hpp"
#include "mxsr/image.hpp"
#include "mxsr/network.hpp"

namespace mxsr {

struct SparsityLayer {
  Activation kind;
  std::vector<double> ratios;  // per output channel, fraction of strictly nonzero values
  double mean_ratio = 0.0;
  // Comparison units only: fraction of comparisons won by the first operand.
  std::optional<double> first_operand_share;
};

struct SparsityMap {
  std::vector<SparsityLayer> layers;

  std::size_t max_channels() const;
  // Grid with one column per layer and one row per channel, each cell
  // `cell` pixels wide: white = always active, black = never. Cells below a
  // layer's channel count stay black.
  Image render(std::size_t cell = 8) const;
  std::string to_csv() const;
  std::string to_text() const;
};

// Activation ratios over every sample of `lr_input` (mean-shifted luma, HR
// base is not needed because only the activations are inspected).
SparsityMap sparsity_map(Network& net, const Tensor4& lr_input);
SparsityMap sparsity_map(Network& net, const ImagePair& pair);

}  // namespace mxsr
