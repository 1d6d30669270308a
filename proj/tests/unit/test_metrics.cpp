#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "mxsr/error.hpp"
#include "mxsr/evaluate.hpp"
#include "mxsr/image_io.hpp"
#include "mxsr/metrics.hpp"
#include "mxsr/sparsity.hpp"
#include "mxsr/sweep.hpp"
#include "test_support.hpp"

using namespace mxsr;

namespace {

Image noisy(const Image& a, double amp, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Image out = a;
  for (double& v : out.values()) v += amp * d(gen);
  return out;
}

Dataset synthetic(std::size_t count, std::size_t r, std::uint64_t seed, std::size_t side = 48) {
  Dataset d;
  d.name = "syn";
  d.scale = r;
  for (std::size_t i = 0; i < count; ++i) {
    ImagePair p = make_pair(test::synthetic_photo(side, side, seed + i), r);
    p.name = "s" + std::to_string(i);
    d.pairs.push_back(std::move(p));
  }
  return d;
}

PresetOptions toy(const Activation& a, std::size_t scale = 4, std::size_t width = 0) {
  PresetOptions o;
  o.activation = a;
  o.scale = scale;
  o.width = width;
  return o;
}

}  // namespace

TEST(Psnr, IdenticalIsInfinite) {
  const Image a = test::random_image(8, 8, ColorSpace::gray, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, OneLevelOffset) {
  const Image a(16, 16, ColorSpace::gray, 0.5);
  const Image b(16, 16, ColorSpace::gray, 0.5 + 1.0 / 255.0);
  EXPECT_NEAR(psnr(a, b), 48.1308, 1e-4);
  EXPECT_NEAR(psnr(a, b, 4), 20.0 * std::log10(255.0), 1e-9);
}

TEST(Psnr, ShaveExcludesBorder) {
  Image a(10, 10, ColorSpace::gray, 0.5), b = a;
  b.at(0, 0, 0) = 0.0;
  EXPECT_FALSE(std::isinf(psnr(a, b)));
  EXPECT_TRUE(std::isinf(psnr(a, b, 1)));
}

TEST(Psnr, SymmetricAndMonotoneInNoise) {
  const Image a = test::random_image(32, 32, ColorSpace::gray, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.03, 0.1}) {
    const Image b = noisy(a, amp, 3);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    EXPECT_LT(psnr(a, b), prev);
    prev = psnr(a, b);
  }
}

TEST(Psnr, Errors) {
  EXPECT_THROW(psnr(Image(4, 4, ColorSpace::gray), Image(4, 5, ColorSpace::gray)), DimensionError);
  EXPECT_THROW(psnr(Image(4, 4, ColorSpace::gray), Image(4, 4, ColorSpace::gray), 2), DimensionError);
  EXPECT_THROW(psnr(Image(4, 4, ColorSpace::rgb), Image(4, 4, ColorSpace::rgb)), DimensionError);
}

TEST(Ssim, IdentityAndSymmetry) {
  const Image a = test::random_image(24, 20, ColorSpace::gray, 4);
  EXPECT_EQ(ssim(a, a), 1.0);
  const Image b = noisy(a, 0.05, 5);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, InvertedBinaryIsNegative) {
  Image a(24, 24, ColorSpace::gray);
  std::mt19937_64 gen(6);
  for (double& v : a.values()) v = gen() % 2 ? 1.0 : 0.0;
  Image inv = a;
  for (double& v : inv.values()) v = 1.0 - v;
  EXPECT_LT(ssim(a, inv), 0.0);
}

TEST(Ssim, DecreasesWithNoise) {
  const Image a = quantize8(luma(test::synthetic_photo(40, 40, 7)));
  EXPECT_GT(ssim(a, noisy(a, 0.01, 8)), ssim(a, noisy(a, 0.05, 8)));
}

TEST(Ssim, SmallerThanWindow) {
  EXPECT_THROW(ssim(Image(10, 30, ColorSpace::gray), Image(10, 30, ColorSpace::gray)), DimensionError);
  EXPECT_THROW(ssim(Image(14, 14, ColorSpace::gray), Image(14, 14, ColorSpace::gray), 2), DimensionError);
}

TEST(Evaluate, ZeroWeightsEqualNearestBaseline) {
  const Dataset d = synthetic(3, 4, 1);
  Network net = build_network(toy(Activation::mu()), 1);
  net.zero_parameters();
  const EvalReport net_rep = evaluate(net, d);
  const EvalReport base = evaluate_interpolation(d, ResampleMethod::nearest);
  ASSERT_EQ(net_rep.images.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(net_rep.images[i].psnr, base.images[i].psnr);
    EXPECT_EQ(net_rep.images[i].ssim, base.images[i].ssim);
  }
  EXPECT_EQ(net_rep.shave, 4u);
  EXPECT_EQ(net_rep.scale, 4u);
}

TEST(Evaluate, MeanIsArithmeticMean) {
  const Dataset d = synthetic(4, 3, 10);
  const EvalReport rep = evaluate_interpolation(d, ResampleMethod::bicubic);
  double p = 0.0, s = 0.0;
  for (const auto& i : rep.images) {
    p += i.psnr;
    s += i.ssim;
    EXPECT_GE(i.psnr, 0.0);
  }
  EXPECT_NEAR(rep.mean_psnr, p / 4.0, 1e-12);
  EXPECT_NEAR(rep.mean_ssim, s / 4.0, 1e-12);
  EXPECT_NE(rep.to_text().find("mean psnr"), std::string::npos);
  EXPECT_EQ(rep.to_csv().rfind("dataset,image,psnr,ssim\n", 0), 0u);
}

TEST(Evaluate, IdentityComparisonIsInfinite) {
  const Dataset d = synthetic(2, 1, 20, 24);
  Network net = build_network(toy(Activation::relu(), 1), 2);
  net.zero_parameters();
  const EvalReport rep = evaluate(net, d);
  for (const auto& i : rep.images) EXPECT_TRUE(std::isinf(i.psnr));
  EXPECT_TRUE(std::isinf(rep.mean_psnr));
  EXPECT_NE(rep.to_text().find("inf"), std::string::npos);
}

TEST(Evaluate, PerImageFailuresContinue) {
  const auto dir = test::temp_dir("eval_fail");
  save_image(test::synthetic_photo(32, 32, 1), dir / "a.png");
  std::ofstream(dir / "b.png", std::ios::binary) << "not a png";
  save_image(test::synthetic_photo(2, 2, 2), dir / "c.png");
  save_image(test::synthetic_photo(36, 32, 3), dir / "d.png");
  Network net = build_network(toy(Activation::mu()), 1);
  const EvalReport rep = evaluate(net, dir, 4);
  EXPECT_EQ(rep.images.size(), 2u);
  ASSERT_EQ(rep.failures.size(), 2u);
  EXPECT_EQ(rep.failures[0].name, "b");
  EXPECT_EQ(rep.failures[1].name, "c");
  EXPECT_NE(rep.to_text().find("FAILED"), std::string::npos);
}

TEST(Upscale, ZeroWeightsGiveNearestLumaAndBicubicChroma) {
  const Image lr = test::synthetic_photo(9, 7, 4);
  Network net = build_network(toy(Activation::mu()), 1);
  net.zero_parameters();
  const Image sr = upscale_image(net, lr);
  ASSERT_EQ(sr.h(), 36u);
  ASSERT_EQ(sr.w(), 28u);
  const Image ycc = rgb_to_ycbcr(lr);
  Image expect(36, 28, ColorSpace::ycbcr);
  const Image y = resample(channel(ycc, 0), 36, 28, ResampleMethod::nearest);
  const Image cb = resample(channel(ycc, 1), 36, 28, ResampleMethod::bicubic);
  const Image cr = resample(channel(ycc, 2), 36, 28, ResampleMethod::bicubic);
  for (std::size_t i = 0; i < 36 * 28; ++i) {
    expect.plane(0)[i] = y.plane(0)[i];
    expect.plane(1)[i] = cb.plane(0)[i];
    expect.plane(2)[i] = cr.plane(0)[i];
  }
  Image rgb = ycbcr_to_rgb(expect);
  rgb.clamp();
  EXPECT_EQ(sr, rgb);
}

TEST(Sparsity, RatiosAndGridShape) {
  Network net = build_network(toy(Activation::relu()), 3);
  const ImagePair p = make_pair(test::synthetic_photo(32, 32, 5), 4);
  const SparsityMap m = sparsity_map(net, p);
  ASSERT_EQ(m.layers.size(), 5u);
  for (const auto& l : m.layers) {
    EXPECT_EQ(l.ratios.size(), 12u);
    for (double r : l.ratios) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
    EXPECT_FALSE(l.first_operand_share.has_value());
  }
  const Image grid = m.render(4);
  EXPECT_EQ(grid.h(), 12u * 4u);
  EXPECT_EQ(grid.w(), 5u * 4u);
  EXPECT_EQ(m.max_channels(), 12u);
  EXPECT_NE(m.to_csv().find("layer,kind,channel,ratio"), std::string::npos);
}

TEST(Sparsity, MuRatiosAtLeastBothOperandsNonzero) {
  Network net = build_network(toy(Activation::mu()), 4);
  const ImagePair p = make_pair(test::synthetic_photo(32, 32, 6), 4);
  const SparsityMap m = sparsity_map(net, p);
  for (const auto& l : m.layers) {
    EXPECT_EQ(l.ratios.size(), 8u);
    ASSERT_TRUE(l.first_operand_share.has_value());
    EXPECT_GT(*l.first_operand_share, 0.0);
    EXPECT_LT(*l.first_operand_share, 1.0);
    // conv outputs with nonzero weights are almost never exactly zero
    for (double r : l.ratios) EXPECT_EQ(r, 1.0);
  }
}

TEST(Sparsity, DeadReluChannel) {
  Network net = build_network(toy(Activation::relu()), 4);
  auto& first = net.params()[0];
  for (std::size_t i = 0; i < 9; ++i) first.weights[i] = 0.0;  // channel 0 of the first conv
  first.bias[0] = -1.0;
  const SparsityMap m = sparsity_map(net, make_pair(test::synthetic_photo(24, 24, 7), 4));
  EXPECT_EQ(m.layers[0].ratios[0], 0.0);
  EXPECT_GT(m.layers[0].ratios[1], 0.0);
}

TEST(Sparsity, BatchDuplicationInvariant) {
  Network net = build_network(toy(Activation::mu_d()), 5);
  const ImagePair p = make_pair(test::synthetic_photo(28, 28, 8), 4);
  Tensor4 one = to_tensor(p.lr_y);
  for (double& v : one.values()) v -= 0.5;
  const std::vector<Tensor4> copies{one, one, one};
  Tensor4 three(Shape4{3, 1, one.h(), one.w()});
  for (std::size_t b = 0; b < 3; ++b) std::copy(one.values().begin(), one.values().end(), three.plane(b, 0).begin());
  const SparsityMap a = sparsity_map(net, one), b = sparsity_map(net, three);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].ratios, b.layers[l].ratios);
    EXPECT_EQ(a.layers[l].first_operand_share, b.layers[l].first_operand_share);
  }
}

TEST(Sweep, EmptyWidthsGiveEmptyTable) {
  const Dataset d = synthetic(2, 4, 30);
  SweepOptions o;
  o.kinds = {Activation::relu(), Activation::mu()};
  const SweepResult r = sweep(o, TrainConfig::toy(Activation::mu()), d, d);
  EXPECT_TRUE(r.cells.empty());
  EXPECT_EQ(r.to_csv(), "kind,budget,width,params,seeds,median_psnr\n");
}

TEST(Sweep, ParamCountsAndArityWarnings) {
  const Dataset d = synthetic(2, 4, 40);
  TrainConfig base = TrainConfig::toy(Activation::mu());
  base.iterations = 3;
  base.batch.crop_hr = 24;
  base.log_every = 0;
  base.checkpoint_every = 0;
  SweepOptions o;
  o.widths = {6, 10};
  o.kinds = {Activation::relu(), Activation::mu(), Activation::mu_d()};
  o.seeds = {1, 2};
  o.match_budget = false;
  const SweepResult r = sweep(o, base, d, d);
  EXPECT_EQ(r.cells.size(), 4u);  // mu-d rejects 6 and 10 channels
  EXPECT_EQ(r.warnings.size(), 2u);
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.params, count_params(make_spec(toy(c.kind, 4, c.width))));
    EXPECT_EQ(c.psnr.size(), 2u);
    EXPECT_EQ(c.median_psnr, 0.5 * (c.psnr[0] + c.psnr[1]));
  }
  const auto gaps = r.gaps(Activation::mu(), Activation::relu());
  ASSERT_EQ(gaps.size(), 2u);
  EXPECT_TRUE(gaps[0].has_value());
  EXPECT_NE(r.to_plot_data().find("# mu"), std::string::npos);
}

TEST(Sweep, MatchedBudgetWidths) {
  EXPECT_EQ(sweep_width(12, Activation::mu(), true), 16u);
  EXPECT_EQ(sweep_width(12, Activation::mu_d(), true), 24u);
  EXPECT_EQ(sweep_width(6, Activation::mu(), true), 8u);
  EXPECT_EQ(sweep_width(9, Activation::relu(), true), 9u);
  EXPECT_EQ(sweep_width(9, Activation::mu(), false), 9u);
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
}
