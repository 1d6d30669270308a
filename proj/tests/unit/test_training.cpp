#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mxsr/checkpoint.hpp"
#include "mxsr/error.hpp"
#include "mxsr/image_io.hpp"
#include "mxsr/training.hpp"
#include "test_support.hpp"

using namespace mxsr;

namespace {

Dataset synthetic_set(std::size_t count, std::size_t side, std::size_t r, std::uint64_t seed) {
  Dataset d;
  d.name = "synthetic";
  d.scale = r;
  for (std::size_t i = 0; i < count; ++i) {
    ImagePair p = make_pair(test::synthetic_photo(side, side + 4, seed + i), r);
    p.name = "img" + std::to_string(i);
    d.pairs.push_back(std::move(p));
  }
  return d;
}

TrainConfig quick_config(std::size_t iters) {
  TrainConfig c = TrainConfig::toy(Activation::mu(), 4);
  c.iterations = iters;
  c.lr_initial = 1e-3;
  c.lr_drop_at = iters;
  c.batch.crop_hr = 24;
  c.log_every = 0;
  c.checkpoint_every = 0;
  return c;
}

}  // namespace

TEST(Mse, Examples) {
  const Tensor4 a = test::random_tensor({2, 1, 3, 3}, 1);
  const LossResult same = mse_loss(a, a);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(test::max_abs(same.grad.values()), 0.0);
  const LossResult one = mse_loss(elementwise(ElementwiseOp::add, a, 1.0), a);
  EXPECT_NEAR(one.loss, 1.0, 1e-15);
  for (double g : one.grad.values()) EXPECT_NEAR(g, 2.0 / 18.0, 1e-15);
  EXPECT_THROW(mse_loss(a, Tensor4(2, 1, 3, 4)), DimensionError);
}

TEST(Mse, GradientMatchesFiniteDifferences) {
  Tensor4 p = test::random_tensor({1, 2, 4, 4}, 2);
  const Tensor4 t = test::random_tensor({1, 2, 4, 4}, 3);
  const auto numeric = test::numeric_gradient(p.values(), [&] { return mse_loss(p, t).loss; });
  EXPECT_LT(test::rel_error(mse_loss(p, t).grad.values(), numeric), 1e-8);
}

TEST(Schedule, LearningRate) {
  const TrainConfig toy = TrainConfig::toy(Activation::mu());
  EXPECT_EQ(lr_at(0, toy), 1e-4);
  EXPECT_EQ(lr_at(49999, toy), 1e-4);
  EXPECT_NEAR(lr_at(50000, toy), 1e-5, 1e-20);
  const TrainConfig full = TrainConfig::full(Preset::vdsr_mu, 3);
  EXPECT_EQ(lr_at(499999, full), 1e-4);
  EXPECT_NEAR(lr_at(500000, full), 1e-5, 1e-20);
}

TEST(Config, Protocols) {
  const TrainConfig toy = TrainConfig::toy(Activation::relu());
  EXPECT_EQ(toy.iterations, 100000u);
  EXPECT_EQ(toy.batch.batch, 2u);
  EXPECT_EQ(toy.batch.crop_hr, 40u);
  EXPECT_FALSE(toy.batch.augment.intensity);
  const TrainConfig x3 = TrainConfig::full(Preset::dnsr, 3);
  EXPECT_EQ(x3.iterations, 1000000u);
  EXPECT_EQ(x3.batch.batch, 4u);
  EXPECT_EQ(x3.batch.crop_hr, 75u);
  EXPECT_TRUE(x3.batch.augment.intensity);
  EXPECT_EQ(TrainConfig::full(Preset::espcn_mu, 4).batch.crop_hr, 76u);
}

TEST(Config, Validation) {
  TrainConfig c = TrainConfig::toy(Activation::mu());
  c.batch.crop_hr = 42;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = TrainConfig::toy(Activation::mu());
  c.batch.batch = 0;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = TrainConfig::toy(Activation::mu());
  c.lr_initial = 0.0;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = TrainConfig::toy(Activation::mu_d());
  c.model.width = 10;
  EXPECT_THROW(c.validate(), SpecificationError);
}

TEST(Adam, ZeroGradientFirstStepKeepsParameters) {
  std::vector<double> p{0.3, -0.7};
  AdamState s = AdamState::for_buffers(std::vector<std::size_t>{2});
  std::vector<std::span<double>> params{p};
  std::vector<std::span<const double>> grads{std::span<const double>(std::vector<double>{0.0, 0.0})};
  const std::vector<double> zeros{0.0, 0.0};
  grads[0] = zeros;
  adam_step(params, grads, s, 1e-4);
  EXPECT_EQ(p, (std::vector<double>{0.3, -0.7}));
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepMagnitude) {
  for (double g : {3.0, -0.02, 1e-3}) {
    std::vector<double> p{0.0};
    const std::vector<double> grad{g};
    AdamState s = AdamState::for_buffers(std::vector<std::size_t>{1});
    std::vector<std::span<double>> params{p};
    std::vector<std::span<const double>> grads{grad};
    adam_step(params, grads, s, 1e-4);
    EXPECT_NEAR(p[0], -1e-4 * g / (std::abs(g) + 1e-8), 1e-18);
  }
}

TEST(Adam, ScalarTrajectory) {
  // hand-run scalar recurrence, lr 1e-3, p0 0.5, gradients 1, -1, 1
  const double expect[] = {0.49900000001, 0.49905263158842106, 0.49871683823384544};
  double p_ref = 0.5, m = 0.0, v = 0.0;
  std::vector<double> p{0.5};
  AdamState s = AdamState::for_buffers(std::vector<std::size_t>{1});
  const double gs[] = {1.0, -1.0, 1.0};
  for (int t = 1; t <= 3; ++t) {
    const double g = gs[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    p_ref -= 1e-3 * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.999, t))) + 1e-8);

    const std::vector<double> grad{g};
    std::vector<std::span<double>> params{p};
    std::vector<std::span<const double>> grads{grad};
    adam_step(params, grads, s, 1e-3);
    EXPECT_NEAR(p[0], p_ref, 1e-12);
    EXPECT_NEAR(p[0], expect[t - 1], 1e-12);
    EXPECT_GE(s.v[0][0], 0.0);
  }
  EXPECT_EQ(s.step, 3u);
}

TEST(Adam, StepBoundedByTwiceLearningRate) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> d(0.0, 10.0);
  std::vector<double> p(50, 0.0);
  AdamState s = AdamState::for_buffers(std::vector<std::size_t>{50});
  for (int t = 0; t < 200; ++t) {
    std::vector<double> g(50);
    for (double& x : g) x = d(gen);
    const std::vector<double> before = p;
    std::vector<std::span<double>> params{p};
    std::vector<std::span<const double>> grads{g};
    adam_step(params, grads, s, 1e-4);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LE(std::abs(p[i] - before[i]), 2e-4);
  }
}

TEST(Adam, ShapeMismatchIsStateError) {
  std::vector<double> p(3), g(3);
  AdamState s = AdamState::for_buffers(std::vector<std::size_t>{2});
  std::vector<std::span<double>> params{p};
  std::vector<std::span<const double>> grads{g};
  EXPECT_THROW(adam_step(params, grads, s, 1e-4), StateError);
}

TEST(Checkpoint, RoundTripWithOptimizer) {
  PresetOptions o;
  o.activation = Activation::mu_r(2);
  Network net = build_network(o, 3);
  AdamState s = AdamState::for_network(net);
  s.step = 17;
  s.m[3][1] = 0.25;
  s.v[0][0] = 2.5;
  const auto bytes = serialize_checkpoint(net, &s);
  const Checkpoint back = deserialize_checkpoint(bytes);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, 17u);
  EXPECT_EQ(back.optimizer->m, s.m);
  EXPECT_EQ(back.optimizer->v, s.v);
  EXPECT_EQ(back.network.spec().activation, Activation::mu_r(2));
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    EXPECT_EQ(back.network.params()[i].weights, net.params()[i].weights);
    EXPECT_EQ(back.network.params()[i].bias, net.params()[i].bias);
  }
  EXPECT_EQ(serialize_checkpoint(back.network, &*back.optimizer), bytes);
}

TEST(Checkpoint, ByteLayout) {
  PresetOptions o;
  o.preset = Preset::espcn_mu;
  o.scale = 3;
  Network net = build_network(o, 1);
  net.params()[0].weights[0] = 0.5;
  const auto b = serialize_checkpoint(net);
  ASSERT_EQ(std::string(b.begin(), b.begin() + 5), "MXSR1");
  auto u32 = [&](std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
  };
  EXPECT_EQ(u32(5), preset_id(net.spec()));
  EXPECT_EQ(u32(9), 3u);
  EXPECT_EQ(u32(13), 3u);
  EXPECT_EQ(u32(17), 64u);
  EXPECT_EQ(u32(21), 1u);
  EXPECT_EQ(u32(25), 5u);
  double w0;
  std::memcpy(&w0, b.data() + 29, 8);  // host is little-endian
  EXPECT_EQ(w0, 0.5);
  std::size_t expect = 5 + 12;
  for (const auto& p : net.params()) expect += 12 + 8 * p.param_count();
  EXPECT_EQ(b.size(), expect);
}

TEST(Checkpoint, CorruptInputs) {
  Network net = build_network(PresetOptions{}, 1);
  auto bytes = serialize_checkpoint(net);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_checkpoint(truncated), IoError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(magic), IoError);
  auto shape = bytes;
  shape[17] = 13;  // first conv c_out no longer matches the preset
  EXPECT_THROW(deserialize_checkpoint(shape), IoError);
  EXPECT_THROW(load_checkpoint("/nonexistent/net.mxsr"), IoError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = test::temp_dir("ckpt");
  Network net = build_network(PresetOptions{}, 5);
  save_checkpoint(dir / "a.mxsr", net);
  const Checkpoint c = load_checkpoint(dir / "a.mxsr");
  EXPECT_FALSE(c.optimizer.has_value());
  EXPECT_EQ(serialize_checkpoint(c.network), serialize_checkpoint(net));
}

TEST(Train, ZeroIterationsReturnsInitialization) {
  const Dataset d = synthetic_set(2, 40, 4, 1);
  TrainConfig c = quick_config(0);
  std::vector<std::uint8_t> saved;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const CheckpointEvent& ev, const Network& n, const AdamState& s) {
    EXPECT_EQ(ev.kind, CheckpointKind::final);
    saved = serialize_checkpoint(n, &s);
  };
  const TrainResult r = train(c, d, nullptr, hooks);
  EXPECT_TRUE(r.losses.empty());
  EXPECT_EQ(serialize_checkpoint(r.network), serialize_checkpoint(build_network(c.model, c.seed)));
  EXPECT_FALSE(saved.empty());
}

TEST(Train, LossDecreasesOnSmallSet) {
  const Dataset d = synthetic_set(4, 48, 4, 10);
  const TrainResult r = train(quick_config(200), d);
  ASSERT_EQ(r.losses.size(), 200u);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    first += r.losses[i].loss;
    last += r.losses[180 + i].loss;
  }
  EXPECT_LT(last, first);
}

TEST(Train, BitwiseReproducible) {
  const Dataset d = synthetic_set(3, 40, 4, 20);
  TrainConfig c = quick_config(30);
  c.batch.augment.intensity = true;
  const TrainResult a = train(c, d);
  const TrainResult b = train(c, d);
  EXPECT_EQ(serialize_checkpoint(a.network, &a.optimizer), serialize_checkpoint(b.network, &b.optimizer));
  c.seed = 2;
  const TrainResult other = train(c, d);
  EXPECT_NE(serialize_checkpoint(a.network), serialize_checkpoint(other.network));
}

TEST(Train, LogAndCheckpointCadence) {
  const Dataset d = synthetic_set(2, 40, 4, 30);
  TrainConfig c = quick_config(25);
  c.log_every = 10;
  c.checkpoint_every = 10;
  c.eval_every = 20;
  std::ostringstream log;
  std::vector<std::size_t> periodic;
  std::size_t finals = 0;
  TrainHooks hooks;
  hooks.log = &log;
  hooks.on_checkpoint = [&](const CheckpointEvent& ev, const Network&, const AdamState& s) {
    if (ev.kind == CheckpointKind::periodic) periodic.push_back(ev.iter);
    if (ev.kind == CheckpointKind::final) {
      ++finals;
      EXPECT_EQ(s.step, 25u);
    }
  };
  const TrainResult r = train(c, d, &d, hooks);
  EXPECT_EQ(periodic, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(finals, 1u);
  ASSERT_EQ(r.evals.size(), 2u);
  EXPECT_EQ(r.evals[0].iter, 20u);
  EXPECT_EQ(r.evals[1].iter, 25u);

  std::istringstream lines(log.str());
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_GE(all.size(), 5u);
  EXPECT_EQ(all[0].rfind("iter 1 loss ", 0), 0u);
  EXPECT_NE(all[0].find(" lr 0.001"), std::string::npos);
  EXPECT_EQ(all.back().rfind("eval iter 25 set synthetic psnr ", 0), 0u);
  EXPECT_NE(all.back().find(" ssim "), std::string::npos);
}

TEST(Train, FormatLines) {
  EXPECT_EQ(format_loss_line({12, 0.5, 1e-4}), "iter 12 loss 0.5 lr 0.0001");
  EXPECT_EQ(format_eval_line({3, "Set5", 30.25, 0.875}), "eval iter 3 set Set5 psnr 30.25 ssim 0.875");
}

TEST(Train, EmptyDatasetIsDataError) {
  Dataset empty;
  empty.name = "none";
  empty.scale = 4;
  EXPECT_THROW(train(quick_config(5), empty), DataError);
}

TEST(Train, DivergenceAbortsWithLastGoodParameters) {
  const Dataset d = synthetic_set(2, 40, 4, 40);
  TrainConfig c = quick_config(200);
  c.lr_initial = 1e200;
  c.lr_drop_at = 1000;
  bool dumped = false;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const CheckpointEvent& ev, const Network& n, const AdamState&) {
    EXPECT_EQ(ev.kind, CheckpointKind::diverged);
    for (const auto& p : n.params()) EXPECT_TRUE(p.weights.all_finite());
    dumped = true;
  };
  EXPECT_THROW(train(c, d, nullptr, hooks), DataError);
  EXPECT_TRUE(dumped);
}

TEST(Train, FileDrivenRunWritesLayout) {
  const auto dir = test::temp_dir("train_files");
  std::filesystem::create_directories(dir / "train");
  for (int i = 0; i < 3; ++i) save_image(test::synthetic_photo(40, 44, 50 + i), dir / "train" / ("t" + std::to_string(i) + ".png"));
  TrainConfig c = quick_config(12);
  c.train_dir = dir / "train";
  c.test_dir = dir / "train";
  c.out_dir = dir / "out";
  c.checkpoint_every = 5;
  c.log_every = 4;
  train(c);
  EXPECT_TRUE(std::filesystem::exists(dir / "out/checkpoints/iter_00000005.mxsr"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out/checkpoints/iter_00000010.mxsr"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out/checkpoints/final.mxsr"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out/logs/train.log"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out/reports/final_eval.csv"));
  const Checkpoint ck = load_checkpoint(dir / "out/checkpoints/final.mxsr");
  ASSERT_TRUE(ck.optimizer.has_value());
  EXPECT_EQ(ck.optimizer->step, 12u);
}
