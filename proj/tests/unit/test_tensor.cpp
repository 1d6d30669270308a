#include <gtest/gtest.h>

#include "mxsr/error.hpp"
#include "mxsr/tensor.hpp"
#include "test_support.hpp"

using namespace mxsr;

TEST(Tensor, ShapeAndLayout) {
  Tensor4 t(2, 3, 4, 5);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_EQ(t.index(1, 2, 3, 4), 119u);
  EXPECT_EQ(t.index(0, 1, 0, 0), 20u);
  t.at(1, 0, 2, 1) = 7.0;
  EXPECT_EQ(t[t.index(1, 0, 2, 1)], 7.0);
}

TEST(Tensor, ZeroDimensionRejected) {
  EXPECT_THROW(Tensor4(0, 1, 1, 1), DimensionError);
  EXPECT_THROW(Tensor4(1, 1, 0, 1), DimensionError);
  EXPECT_THROW(Tensor4(Shape4{1, 1, 2, 2}, std::vector<double>(3)), DimensionError);
}

TEST(Elementwise, MaxOfSelfIsSelf) {
  const Tensor4 x = test::random_tensor({2, 3, 4, 4}, 1);
  EXPECT_EQ(maximum(x, x), x);
  EXPECT_EQ(minimum(x, x), x);
}

TEST(Elementwise, MaxExample) {
  const Tensor4 a(Shape4{1, 1, 1, 2}, {1.0, -2.0});
  const Tensor4 b(Shape4{1, 1, 1, 2}, {0.5, 3.0});
  EXPECT_EQ(maximum(a, b), Tensor4(Shape4{1, 1, 1, 2}, {1.0, 3.0}));
  EXPECT_EQ(minimum(a, b), Tensor4(Shape4{1, 1, 1, 2}, {0.5, -2.0}));
}

TEST(Elementwise, AdditiveIdentity) {
  const Tensor4 a = test::random_tensor({1, 2, 3, 3}, 2);
  const Tensor4 b = test::random_tensor({1, 2, 3, 3}, 3);
  EXPECT_EQ(add(a, sub(b, b)), a);
}

TEST(Elementwise, ScalarForms) {
  const Tensor4 a(Shape4{1, 1, 1, 3}, {1.0, -2.0, 0.5});
  EXPECT_EQ(scale(a, 2.0), Tensor4(Shape4{1, 1, 1, 3}, {2.0, -4.0, 1.0}));
  EXPECT_EQ(elementwise(ElementwiseOp::max, a, 0.0), Tensor4(Shape4{1, 1, 1, 3}, {1.0, 0.0, 0.5}));
  EXPECT_EQ(elementwise(ElementwiseOp::add, a, 1.0), Tensor4(Shape4{1, 1, 1, 3}, {2.0, -1.0, 1.5}));
}

TEST(Elementwise, ShapeMismatch) {
  EXPECT_THROW(add(Tensor4(1, 1, 2, 2), Tensor4(1, 1, 2, 3)), DimensionError);
  Tensor4 d(1, 1, 2, 2);
  EXPECT_THROW(accumulate(d, Tensor4(1, 2, 2, 2)), DimensionError);
}

TEST(SplitChannels, ContiguousHalves) {
  Tensor4 x(1, 16, 2, 2);
  for (std::size_t c = 0; c < 16; ++c)
    for (double& v : x.plane(0, c)) v = static_cast<double>(c);
  const auto parts = split_channels(x, 2);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].c(), 8u);
  EXPECT_EQ(parts[0].at(0, 7, 1, 1), 7.0);
  EXPECT_EQ(parts[1].at(0, 0, 0, 0), 8.0);
}

TEST(SplitChannels, Quarters) {
  const auto parts = split_channels(Tensor4(2, 24, 3, 3), 4);
  ASSERT_EQ(parts.size(), 4u);
  for (const auto& p : parts) EXPECT_EQ(p.shape(), (Shape4{2, 6, 3, 3}));
}

TEST(SplitChannels, ArityError) {
  EXPECT_THROW(split_channels(Tensor4(1, 6, 2, 2), 4), ArityError);
  EXPECT_THROW(split_channels(Tensor4(1, 6, 2, 2), 0), ArityError);
}

TEST(SplitChannels, RoundTripProperty) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t parts = 1 + gen() % 4;
    const Shape4 s{1 + gen() % 3, parts * (1 + gen() % 4), 1 + gen() % 5, 1 + gen() % 5};
    const Tensor4 x = test::random_tensor(s, gen());
    const auto split = split_channels(x, parts);
    EXPECT_EQ(concat_channels(split), x);
  }
}

TEST(Tensor, DotProduct) {
  const Tensor4 a(Shape4{1, 1, 1, 3}, {1.0, 2.0, 3.0});
  const Tensor4 b(Shape4{1, 1, 1, 3}, {4.0, -5.0, 6.0});
  EXPECT_EQ(dot(a, b), 12.0);
}
