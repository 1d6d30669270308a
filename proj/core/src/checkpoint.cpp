#include "mxsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mxsr/error.hpp"

namespace mxsr {

namespace {

constexpr char kMagic[] = "MXSR1";
constexpr char kAdamMagic[] = "ADAM1";
constexpr std::size_t kMagicLen = 5;

class Writer {
 public:
  void magic(const char* m) { bytes_.insert(bytes_.end(), m, m + kMagicLen); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  template <typename Range>
  void f64s(const Range& r) {
    for (double v : r) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  bool at_end() const { return pos_ == bytes_.size(); }
  bool magic(const char* m) {
    need(kMagicLen);
    const bool ok = std::memcmp(bytes_.data() + pos_, m, kMagicLen) == 0;
    if (ok) pos_ += kMagicLen;
    return ok;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::span<double> out) {
    need(out.size() * 8);
    for (double& v : out) v = f64();
  }
  [[noreturn]] void fail(const std::string& what) const { throw IoError(origin_, what); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated checkpoint");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network& net, const AdamState* optimizer) {
  Writer w;
  w.magic(kMagic);
  w.u32(preset_id(net.spec()));
  w.u32(static_cast<std::uint32_t>(net.scale()));
  w.u32(static_cast<std::uint32_t>(net.params().size()));
  for (const auto& p : net.params()) {
    w.u32(static_cast<std::uint32_t>(p.c_out()));
    w.u32(static_cast<std::uint32_t>(p.c_in()));
    w.u32(static_cast<std::uint32_t>(p.kernel()));
    w.f64s(p.weights.values());
    w.f64s(p.bias);
  }
  if (optimizer != nullptr) {
    if (optimizer->m.size() != 2 * net.params().size()) {
      throw StateError("checkpoint: optimizer state does not match the network");
    }
    w.magic(kAdamMagic);
    w.u64(optimizer->step);
    w.f64(optimizer->hyper.beta1);
    w.f64(optimizer->hyper.beta2);
    w.f64(optimizer->hyper.epsilon);
    for (std::size_t i = 0; i < optimizer->m.size(); i += 2) {
      w.f64s(optimizer->m[i]);
      w.f64s(optimizer->v[i]);
      w.f64s(optimizer->m[i + 1]);
      w.f64s(optimizer->v[i + 1]);
    }
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (!r.magic(kMagic)) r.fail("not a checkpoint (bad magic)");
  const std::uint32_t id = r.u32();
  const std::uint32_t scale = r.u32();
  const std::uint32_t layers = r.u32();
  if (scale < 1 || scale > 16 || layers == 0 || layers > 4096) r.fail("implausible header");

  struct Layer {
    std::uint32_t c_out, c_in, k;
    std::vector<double> weights, bias;
  };
  std::vector<Layer> read;
  for (std::uint32_t i = 0; i < layers; ++i) {
    Layer l{r.u32(), r.u32(), r.u32(), {}, {}};
    const std::uint64_t count = std::uint64_t{l.c_out} * l.c_in * l.k * l.k;
    if (l.c_out == 0 || l.c_in == 0 || l.k == 0 || count > (std::uint64_t{1} << 28)) {
      r.fail("implausible layer shape");
    }
    l.weights.resize(count);
    l.bias.resize(l.c_out);
    r.f64s(l.weights);
    r.f64s(l.bias);
    read.push_back(std::move(l));
  }

  NetworkSpec spec;
  try {
    spec = spec_from_preset_id(id, scale, layers, read.front().c_out);
  } catch (const Error& e) {
    r.fail(std::string("header does not describe a known network: ") + e.what());
  }
  Checkpoint ck{Network(spec), std::nullopt};
  for (std::uint32_t i = 0; i < layers; ++i) {
    auto& p = ck.network.params()[i];
    const auto& l = read[i];
    if (p.c_out() != l.c_out || p.c_in() != l.c_in || p.kernel() != l.k) {
      r.fail("layer " + std::to_string(i) + " shape does not match preset " + to_string(spec.preset));
    }
    std::copy(l.weights.begin(), l.weights.end(), p.weights.values().begin());
    p.bias = l.bias;
  }

  if (!r.at_end()) {
    if (!r.magic(kAdamMagic)) r.fail("unexpected trailing data");
    AdamState s = AdamState::for_network(ck.network);
    s.step = r.u64();
    s.hyper.beta1 = r.f64();
    s.hyper.beta2 = r.f64();
    s.hyper.epsilon = r.f64();
    for (std::size_t i = 0; i < s.m.size(); i += 2) {
      r.f64s(s.m[i]);
      r.f64s(s.v[i]);
      r.f64s(s.m[i + 1]);
      r.f64s(s.v[i + 1]);
    }
    if (!r.at_end()) r.fail("unexpected trailing data after optimizer block");
    ck.optimizer = std::move(s);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const AdamState* optimizer) {
  const auto bytes = serialize_checkpoint(net, optimizer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open checkpoint");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.string());
}

}  // namespace mxsr
