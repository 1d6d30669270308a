#include <benchmark/benchmark.h>

#include "mxsr/adam.hpp"
#include "mxsr/conv.hpp"
#include "mxsr/network.hpp"
#include "mxsr/random.hpp"
#include "mxsr/training.hpp"

using namespace mxsr;

namespace {

Tensor4 filled(Shape4 s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor4 t(s);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

ConvParams conv(std::size_t c_out, std::size_t c_in, std::size_t k) {
  ConvParams p(c_out, c_in, k);
  Rng rng(3);
  for (double& v : p.weights.values()) v = rng.uniform(-0.1, 0.1);
  return p;
}

// args: channels, spatial side
void BM_ConvForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  const ConvParams p = conv(c, c, 3);
  const Tensor4 x = filled(Shape4{4, c, side, side}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, p));
  state.SetItemsProcessed(state.iterations() * 4 * static_cast<std::int64_t>(side * side * c * c * 9));
}
BENCHMARK(BM_ConvForward)->Args({16, 10})->Args({32, 19})->Args({64, 19})->Args({64, 64});

void BM_ConvBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  const ConvParams p = conv(c, c, 3);
  const Tensor4 x = filled(Shape4{4, c, side, side}, 1);
  const Tensor4 g = filled(Shape4{4, c, side, side}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(x, p, g));
  state.SetItemsProcessed(state.iterations() * 4 * static_cast<std::int64_t>(side * side * c * c * 9));
}
BENCHMARK(BM_ConvBackward)->Args({16, 10})->Args({32, 19})->Args({64, 19});

PresetOptions preset(int id) {
  PresetOptions p;
  p.preset = static_cast<Preset>(id);
  return p;
}

// arg: preset id (0 toy MU, 1 espcn-mu, 2 vdsr-mu, 3 dnsr), LR side 64
void BM_NetworkForward(benchmark::State& state) {
  Network net = build_network(preset(static_cast<int>(state.range(0))), 1);
  const Tensor4 lr = filled(Shape4{1, 1, 64, 64}, 4);
  const Tensor4 base(Shape4{1, 1, 256, 256});
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(lr, base));
  state.SetLabel(to_string(net.spec().preset));
}
BENCHMARK(BM_NetworkForward)->Arg(0)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

// One optimizer step at the training crop sizes: batch 2 of 10x10 LR for
// the toy net, batch 4 of 19x19 otherwise.
void BM_TrainStep(benchmark::State& state) {
  const int id = static_cast<int>(state.range(0));
  Network net = build_network(preset(id), 1);
  const std::size_t b = id == 0 ? 2 : 4, side = id == 0 ? 10 : 19;
  const Tensor4 lr = filled(Shape4{b, 1, side, side}, 5);
  const Tensor4 base = filled(Shape4{b, 1, 4 * side, 4 * side}, 6);
  const Tensor4 hr = filled(Shape4{b, 1, 4 * side, 4 * side}, 7);
  AdamState adam = AdamState::for_network(net);
  ForwardOptions fo;
  fo.training = true;
  fo.clamp = false;
  for (auto _ : state) {
    const Tensor4 out = net.forward(lr, base, fo);
    const LossResult loss = mse_loss(out, hr);
    const NetworkGrads g = net.backward(loss.grad);
    adam_step(net, g, adam, 1e-4);
    net.clear_cache();
  }
  state.SetLabel(to_string(net.spec().preset));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
