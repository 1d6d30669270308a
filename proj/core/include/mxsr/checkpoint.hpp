#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mxsr/adam.hpp"
#include "mxsr/network.hpp"

namespace mxsr {

// Binary layout, all integers little-endian:
//   "MXSR1"
//   u32 preset id, u32 scale, u32 conv layer count
//   per conv layer: u32 c_out, u32 c_in, u32 k,
//                   f64 weights in (c_out, c_in, k, k) order, f64 biases
//   optional optimizer block:
//   "ADAM1", u64 step, f64 beta1, f64 beta2, f64 epsilon,
//   per conv layer: f64 m_w, f64 v_w, f64 m_b, f64 v_b
struct Checkpoint {
  Network network;
  std::optional<AdamState> optimizer;
};

std::vector<std::uint8_t> serialize_checkpoint(const Network& net, const AdamState* optimizer = nullptr);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mxsr
