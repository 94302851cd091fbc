#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "descatter/image.hpp"
#include "test_support.hpp"

using namespace descatter;

TEST(Image, RejectsBadShapes) {
  EXPECT_THROW(Image(0, 4, 3), Error);
  EXPECT_THROW(Image(4, 4, 2), Error);
  EXPECT_NO_THROW(Image(4, 4, 1));
}

TEST(Image, RowMajorInterleavedLayout) {
  Image img(3, 2, 3);
  img(2, 1, 1) = 0.5;
  EXPECT_EQ(img.index(2, 1, 1), (1u * 3 + 2) * 3 + 1);
  EXPECT_EQ(img.values()[img.index(2, 1, 1)], 0.5);
}

TEST(Gamma, PowerLawValues) {
  Image img(3, 1, 1);
  img(0, 0) = 0.0;
  img(1, 0) = 1.0;
  img(2, 0) = 0.5;
  const Image lin = to_linear(img);
  EXPECT_EQ(lin(0, 0), 0.0);
  EXPECT_EQ(lin(1, 0), 1.0);
  EXPECT_NEAR(lin(2, 0), 0.21764, 1e-5);
}

TEST(Gamma, DisplayInverseAndClamp) {
  Image img(3, 1, 1);
  img(0, 0) = 0.21764;
  img(1, 0) = 1.0;
  img(2, 0) = 1.3;
  const Image d = to_display(img);
  EXPECT_NEAR(d(0, 0), 0.5, 1e-5);
  EXPECT_EQ(d(1, 0), 1.0);
  EXPECT_EQ(d(2, 0), 1.0);
}

TEST(Gamma, RoundTripOverUnitInterval) {
  Image img(1001, 1, 1);
  for (int i = 0; i <= 1000; ++i) img(i, 0) = i / 1000.0;
  for (double g : {2.2, 1.0, 1.8, 3.0}) {
    const Image back = to_display(to_linear(img, {g}), {g});
    for (int i = 0; i <= 1000; ++i) EXPECT_NEAR(back(i, 0), img(i, 0), 1e-6);
  }
}

TEST(Gamma, RejectsNonFinite) {
  Image img(2, 1, 1);
  img(0, 0) = std::nan("");
  EXPECT_THROW(to_linear(img), Error);
  EXPECT_THROW(to_display(img), Error);
}

TEST(Psnr, IdenticalIsInfinite) {
  std::mt19937_64 rng(1);
  const Image a = fixtures::random_image(8, 8, 3, rng);
  EXPECT_EQ(psnr(a, a), kInfinitePsnr);
}

TEST(Psnr, ConstantOffset) {
  const Image a = fixtures::constant_image(5, 5, {0.2, 0.3, 0.4});
  const Image b = fixtures::constant_image(5, 5, {0.2 + 10 / 255.0, 0.3 + 10 / 255.0, 0.4 + 10 / 255.0});
  EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0 / 10.0), 1e-9);
  EXPECT_NEAR(psnr(a, b), 28.13, 0.01);
}

TEST(Psnr, MatchesTwoPassReduction) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Image a = fixtures::random_image(17, 9, 3, rng);
    const Image b = fixtures::random_image(17, 9, 3, rng);
    std::vector<double> sq;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a.values()[i] - b.values()[i];
      sq.push_back(d * d);
    }
    double mse = 0.0;
    for (double s : sq) mse += s;
    mse /= static_cast<double>(sq.size());
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / mse), 1e-9);
  }
}

TEST(Psnr, SymmetricAndShiftInvariant) {
  std::mt19937_64 rng(3);
  const Image a = fixtures::random_image(12, 12, 3, rng, 0.0, 0.5);
  const Image b = fixtures::random_image(12, 12, 3, rng, 0.0, 0.5);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  Image as = a, bs = b;
  for (double& v : as.values()) v += 0.37;
  for (double& v : bs.values()) v += 0.37;
  EXPECT_NEAR(psnr(as, bs), psnr(a, b), 1e-9);
}

TEST(Psnr, DimensionMismatch) {
  EXPECT_THROW(psnr(Image(2, 2, 1), Image(2, 3, 1)), Error);
  EXPECT_THROW(psnr(Image(2, 2, 1), Image(2, 2, 3)), Error);
}

TEST(IntensityChroma, GrayHasUnitRatios) {
  const Image gray = fixtures::constant_image(4, 4, {0.4, 0.4, 0.4});
  const auto ic = split_intensity(gray);
  for (double r : ic.chroma.values()) EXPECT_DOUBLE_EQ(r, 1.0);
  for (double i : ic.intensity.values()) EXPECT_DOUBLE_EQ(i, 0.4);
}

TEST(IntensityChroma, RoundTrip) {
  std::mt19937_64 rng(4);
  const Image img = fixtures::random_image(16, 16, 3, rng);
  for (auto w : {IntensityWeights::kMean, IntensityWeights::kLuma}) {
    const Image back = merge_intensity(split_intensity(img, w));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.values()[i], img.values()[i], 1e-6);
  }
}

TEST(IntensityChroma, ScaledIntensity) {
  std::mt19937_64 rng(5);
  const Image img = fixtures::random_image(8, 8, 3, rng);
  auto ic = split_intensity(img);
  for (double& v : ic.intensity.values()) v *= 0.5;
  const Image out = merge_intensity(ic);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out.values()[i], 0.5 * img.values()[i], 1e-12);
}

TEST(IntensityChroma, BlackPixelsGetUnitRatio) {
  const auto ic = split_intensity(fixtures::constant_image(2, 2, {0.0, 0.0, 0.0}));
  for (double r : ic.chroma.values()) EXPECT_EQ(r, 1.0);
}

TEST(IntensityChroma, NeedsThreeChannels) {
  EXPECT_THROW(split_intensity(Image(2, 2, 1)), Error);
}
