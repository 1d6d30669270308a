#include "mxsr/sparsity.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "mxsr/error.hpp"

namespace mxsr {

std::size_t SparsityMap::max_channels() const {
  std::size_t m = 0;
  for (const auto& l : layers) m = std::max(m, l.ratios.size());
  return m;
}

Image SparsityMap::render(std::size_t cell) const {
  if (cell == 0) throw ConfigurationError("sparsity grid cell size must be >= 1");
  const std::size_t rows = std::max<std::size_t>(max_channels(), 1);
  const std::size_t cols = std::max<std::size_t>(layers.size(), 1);
  Image img(rows * cell, cols * cell, ColorSpace::gray, 0.0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t c = 0; c < layers[l].ratios.size(); ++c) {
      for (std::size_t y = 0; y < cell; ++y) {
        for (std::size_t x = 0; x < cell; ++x) img.at(0, c * cell + y, l * cell + x) = layers[l].ratios[c];
      }
    }
  }
  return img;
}

std::string SparsityMap::to_csv() const {
  std::ostringstream out;
  out << "layer,kind,channel,ratio\n";
  char buf[32];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t c = 0; c < layers[l].ratios.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.6f", layers[l].ratios[c]);
      out << l << "," << to_string(layers[l].kind) << "," << c << "," << buf << "\n";
    }
  }
  return out.str();
}

std::string SparsityMap::to_text() const {
  std::ostringstream out;
  char buf[128];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    std::snprintf(buf, sizeof buf, "layer %zu %-8s channels %3zu mean ratio %.4f", l, to_string(L.kind).c_str(),
                  L.ratios.size(), L.mean_ratio);
    out << buf;
    if (L.first_operand_share) {
      std::snprintf(buf, sizeof buf, " first-operand wins %.4f", *L.first_operand_share);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

SparsityMap sparsity_map(Network& net, const Tensor4& lr_input) {
  const std::size_t r = net.scale();
  const Tensor4 base(Shape4{lr_input.n(), 1, lr_input.h() * r, lr_input.w() * r});
  net.forward(lr_input, base, {.training = true, .clamp = false, .capture_activations = true});

  SparsityMap map;
  const auto& outs = net.activation_outputs();
  const auto& traces = net.activation_traces();
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const Tensor4& t = outs[i];
    SparsityLayer layer;
    layer.kind = traces[i].kind;
    layer.ratios.assign(t.c(), 0.0);
    const double per_channel = static_cast<double>(t.n() * t.h() * t.w());
    for (std::size_t b = 0; b < t.n(); ++b) {
      for (std::size_t c = 0; c < t.c(); ++c) {
        const auto p = t.plane(b, c);
        layer.ratios[c] += static_cast<double>(std::count_if(p.begin(), p.end(), [](double v) { return v != 0.0; }));
      }
    }
    for (double& v : layer.ratios) v /= per_channel;
    double sum = 0.0;
    for (double v : layer.ratios) sum += v;
    layer.mean_ratio = layer.ratios.empty() ? 0.0 : sum / static_cast<double>(layer.ratios.size());

    if (!traces[i].masks.empty()) {
      std::size_t wins = 0, total = 0;
      for (const auto& m : traces[i].masks) {
        wins += static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
        total += m.size();
      }
      layer.first_operand_share = total ? static_cast<double>(wins) / static_cast<double>(total) : 0.0;
    }
    map.layers.push_back(std::move(layer));
  }
  net.clear_cache();
  return map;
}

SparsityMap sparsity_map(Network& net, const ImagePair& pair) {
  Tensor4 x = to_tensor(pair.lr_y);
  for (double& v : x.values()) v -= 0.5;
  return sparsity_map(net, x);
}

}  // namespace mxsr
