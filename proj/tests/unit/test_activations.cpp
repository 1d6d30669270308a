#include <gtest/gtest.h>

#include "mxsr/activations.hpp"
#include "mxsr/error.hpp"
#include "test_support.hpp"

using namespace mxsr;

namespace {

Tensor4 pixel(std::initializer_list<double> channels) {
  return Tensor4(Shape4{1, channels.size(), 1, 1}, std::vector<double>(channels));
}

// Distinct values on a grid of spacing 4 * gap, none closer than 2 * gap to
// zero (needs an even element count), so no comparison or sign flips inside
// a finite-difference stencil.
Tensor4 kink_free(Shape4 s, std::uint64_t seed, double gap = 1e-3) {
  std::mt19937_64 gen(seed);
  const double half = static_cast<double>(s.size()) / 2.0;
  std::vector<double> pool;
  for (std::size_t i = 0; i < s.size(); ++i) pool.push_back(4.0 * gap * (static_cast<double>(i) + 0.5 - half));
  std::shuffle(pool.begin(), pool.end(), gen);
  return Tensor4(s, pool);
}

}  // namespace

TEST(Arity, OutputChannels) {
  EXPECT_EQ(act_output_channels(Activation::mu(), 16), 8u);
  EXPECT_EQ(act_output_channels(Activation::mu_d(), 24), 6u);
  EXPECT_EQ(act_output_channels(Activation::mu_s(), 12), 12u);
  EXPECT_EQ(act_output_channels(Activation::mu_m(), 6), 3u);
  EXPECT_EQ(act_output_channels(Activation::mu_r(3), 24), 3u);
  EXPECT_EQ(act_output_channels(Activation::relu(), 7), 7u);
  EXPECT_EQ(act_output_channels(Activation::elu(), 5), 5u);
}

TEST(Arity, ViolationsNameKindAndChannels) {
  try {
    act_output_channels(Activation::mu_d(), 6);
    FAIL();
  } catch (const ArityError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("mu-d"), std::string::npos);
    EXPECT_NE(msg.find('6'), std::string::npos);
  }
  EXPECT_THROW(act_output_channels(Activation::mu(), 5), ArityError);
  EXPECT_THROW(act_output_channels(Activation::mu_s(), 3), ArityError);
  EXPECT_THROW(act_output_channels(Activation::mu_r(2), 6), ArityError);
  EXPECT_THROW(act_forward(Activation::mu(), Tensor4(1, 3, 2, 2)), ArityError);
}

TEST(Arity, ForwardMatchesAlgebraForAllKinds) {
  for (const auto& a : all_activation_kinds()) {
    for (std::size_t c : {4u, 8u, 12u, 16u, 24u}) {
      const auto r = act_forward(a, test::random_tensor({2, c, 3, 3}, c));
      EXPECT_EQ(r.output.c(), act_output_channels(a, c)) << to_string(a);
    }
  }
}

TEST(Names, RoundTrip) {
  for (const auto& a : all_activation_kinds()) EXPECT_EQ(parse_activation(to_string(a)), a);
  EXPECT_EQ(parse_activation("mu-r:3"), Activation::mu_r(3));
  EXPECT_EQ(all_activation_kinds().size(), 8u);
  EXPECT_THROW(parse_activation("prelu"), ConfigurationError);
  EXPECT_THROW(parse_activation("mu-r:0"), ConfigurationError);
  EXPECT_THROW(parse_activation("mu-r:x"), ConfigurationError);
}

TEST(Forward, Formulas) {
  const Tensor4 x = pixel({-2.0, 3.0});
  EXPECT_EQ(act_forward(Activation::relu(), x).output, pixel({0.0, 3.0}));
  EXPECT_EQ(act_forward(Activation::lrelu(), x).output, pixel({-0.02, 3.0}));
  EXPECT_EQ(act_forward(Activation::elu(), x).output, pixel({std::expm1(-2.0), 3.0}));
  EXPECT_EQ(act_forward(Activation::mu(), x).output, pixel({3.0}));
  EXPECT_EQ(act_forward(Activation::mu_m(), x).output, pixel({-2.0}));
  EXPECT_EQ(act_forward(Activation::mu_s(), x).output, pixel({3.0, -2.0}));
}

TEST(Forward, MuOfEqualHalves) {
  const Tensor4 h = test::random_tensor({2, 3, 4, 4}, 7);
  const std::vector<Tensor4> parts{h, h};
  EXPECT_EQ(act_forward(Activation::mu(), concat_channels(parts)).output, h);
}

TEST(Forward, MuDExample) {
  EXPECT_EQ(act_forward(Activation::mu_d(), pixel({2.0, -1.0, 0.0, 0.0})).output, pixel({2.0}));
}

TEST(Forward, MuRTwoLevels) {
  // contiguous split: (1, 5) vs (-3, 2) -> (1, 5) -> 5
  EXPECT_EQ(act_forward(Activation::mu_r(2), pixel({1.0, 5.0, -3.0, 2.0})).output, pixel({5.0}));
}

TEST(Backward, ReluIdentityOnPositive) {
  const Tensor4 x = test::random_tensor({1, 3, 4, 4}, 8, 0.1, 1.0);
  const Tensor4 g = test::random_tensor({1, 3, 4, 4}, 9);
  const auto r = act_forward(Activation::relu(), x);
  EXPECT_EQ(act_backward(Activation::relu(), r.trace, g), g);
}

TEST(Backward, MuRoutesToWinner) {
  const auto r = act_forward(Activation::mu(), pixel({3.0, 1.0}));
  EXPECT_EQ(act_backward(Activation::mu(), r.trace, pixel({7.0})), pixel({7.0, 0.0}));
}

TEST(Backward, TiesGoToFirstOperand) {
  const auto mu = act_forward(Activation::mu(), pixel({2.0, 2.0}));
  EXPECT_EQ(act_backward(Activation::mu(), mu.trace, pixel({1.0})), pixel({1.0, 0.0}));
  const auto mm = act_forward(Activation::mu_m(), pixel({2.0, 2.0}));
  EXPECT_EQ(act_backward(Activation::mu_m(), mm.trace, pixel({1.0})), pixel({1.0, 0.0}));
  const auto ms = act_forward(Activation::mu_s(), pixel({2.0, 2.0}));
  EXPECT_EQ(act_backward(Activation::mu_s(), ms.trace, pixel({1.0, 5.0})), pixel({1.0, 5.0}));
}

TEST(Backward, MuDSigns) {
  const auto r = act_forward(Activation::mu_d(), pixel({1.0, 4.0, 3.0, -2.0}));
  EXPECT_EQ(act_backward(Activation::mu_d(), r.trace, pixel({2.0})), pixel({0.0, 2.0, -2.0, 0.0}));
}

TEST(Backward, MissingOrMismatchedTrace) {
  EXPECT_THROW(act_backward(Activation::mu(), ActivationTrace{}, pixel({1.0})), StateError);
  const auto r = act_forward(Activation::mu(), pixel({1.0, 2.0}));
  EXPECT_THROW(act_backward(Activation::mu_m(), r.trace, pixel({1.0})), StateError);
  EXPECT_THROW(act_backward(Activation::mu(), r.trace, pixel({1.0, 2.0})), DimensionError);
}

TEST(Backward, FiniteDifferencesEveryKind) {
  for (const auto& a : all_activation_kinds()) {
    Tensor4 x = kink_free({2, 8, 3, 3}, 17);
    const auto fwd = act_forward(a, x);
    const Tensor4 g = test::random_tensor(fwd.output.shape(), 18);
    const Tensor4 analytic = act_backward(a, fwd.trace, g);
    const auto numeric = test::numeric_gradient(x.values(), [&] { return dot(act_forward(a, x).output, g); });
    EXPECT_LT(test::rel_error(analytic.values(), numeric), 1e-6) << to_string(a);
  }
}

TEST(Properties, MuRDepthOneIsMuBitwise) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor4 x = test::random_tensor({2, 6, 4, 3}, seed);
    const auto a = act_forward(Activation::mu(), x);
    const auto b = act_forward(Activation::mu_r(1), x);
    EXPECT_EQ(a.output, b.output);
    const Tensor4 g = test::random_tensor(a.output.shape(), seed + 100);
    EXPECT_EQ(act_backward(Activation::mu(), a.trace, g), act_backward(Activation::mu_r(1), b.trace, g));
  }
}

TEST(Properties, MuMIsNegatedMuOfNegation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor4 x = test::random_tensor({1, 4, 5, 5}, seed);
    EXPECT_EQ(act_forward(Activation::mu_m(), x).output, scale(act_forward(Activation::mu(), scale(x, -1.0)).output, -1.0));
  }
}

TEST(Properties, MuSConservationAndOrder) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor4 x = test::random_tensor({2, 6, 4, 4}, seed);
    const auto halves = split_channels(x, 2);
    const auto out = split_channels(act_forward(Activation::mu_s(), x).output, 2);
    EXPECT_EQ(add(out[0], out[1]), add(halves[0], halves[1]));
    for (std::size_t i = 0; i < out[0].size(); ++i) EXPECT_GE(out[0][i], out[1][i]);
  }
}

TEST(Properties, MuSRoutesEveryInputOnce) {
  const Tensor4 x = test::random_tensor({1, 4, 3, 3}, 3);
  const auto r = act_forward(Activation::mu_s(), x);
  const Tensor4 ones(r.output.shape(), 1.0);
  const Tensor4 gx = act_backward(Activation::mu_s(), r.trace, ones);
  for (double v : gx.values()) EXPECT_EQ(v, 1.0);
}

TEST(Properties, MuHalfOfInputsReceiveGradient) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor4 x = test::random_tensor({2, 8, 5, 5}, seed);
    const auto r = act_forward(Activation::mu(), x);
    const Tensor4 g = test::random_tensor(r.output.shape(), seed + 1, 0.5, 1.5);
    const Tensor4 gx = act_backward(Activation::mu(), r.trace, g);
    const auto nonzero = std::count_if(gx.values().begin(), gx.values().end(), [](double v) { return v != 0.0; });
    EXPECT_EQ(static_cast<std::size_t>(nonzero) * 2, x.size());
  }
}

TEST(Properties, MaskShapesMatchComparisonOutputs) {
  const Tensor4 x = test::random_tensor({2, 8, 3, 4}, 1);
  const auto mu_r = act_forward(Activation::mu_r(3), x);
  ASSERT_EQ(mu_r.trace.masks.size(), 3u);
  EXPECT_EQ(mu_r.trace.mask_shapes[0], (Shape4{2, 4, 3, 4}));
  EXPECT_EQ(mu_r.trace.mask_shapes[2], (Shape4{2, 1, 3, 4}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(mu_r.trace.masks[i].size(), mu_r.trace.mask_shapes[i].size());
  const auto mu_d = act_forward(Activation::mu_d(), x);
  ASSERT_EQ(mu_d.trace.masks.size(), 2u);
  EXPECT_EQ(mu_d.trace.mask_shapes[1], (Shape4{2, 2, 3, 4}));
}
