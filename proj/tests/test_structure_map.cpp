#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "descatter/structure_map.hpp"
#include "test_support.hpp"

using namespace descatter;

namespace {

double total_variation(const Image& img) {
  double tv = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        if (x + 1 < img.width()) tv += std::abs(img(x + 1, y, c) - img(x, y, c));
        if (y + 1 < img.height()) tv += std::abs(img(x, y + 1, c) - img(x, y, c));
      }
  return tv;
}

double mean(const Image& img) {
  double s = 0.0;
  for (double v : img.values()) s += v;
  return s / static_cast<double>(img.size());
}

Image checkerboard(int size, double base, double amplitude) {
  Image img(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img(x, y) = base + ((x + y) % 2 ? amplitude / 2 : -amplitude / 2);
  return img;
}

Image step_edge(int size, double low, double high) {
  Image img(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img(x, y) = x < size / 2 ? low : high;
  return img;
}

}  // namespace

TEST(Structure, ConstantUnchanged) {
  const Image img = fixtures::constant_image(20, 20, {0.3, 0.6, 0.9});
  EXPECT_EQ(extract_structure(img).s, img);
}

TEST(Structure, ZeroIterationsIsIdentity) {
  std::mt19937_64 rng(1);
  const Image img = fixtures::random_image(16, 16, 3, rng);
  EXPECT_EQ(extract_structure(img, {3.0, 0.1, 0}).s, img);
}

TEST(Structure, RejectsBadParams) {
  const Image img(4, 4, 1);
  EXPECT_THROW(extract_structure(img, {0.0, 0.1, 1}), Error);
  EXPECT_THROW(extract_structure(img, {1.0, -0.1, 1}), Error);
  EXPECT_THROW(extract_structure(img, {1.0, 0.1, -1}), Error);
}

TEST(Structure, SuppressesCheckerboard) {
  const Image img = checkerboard(48, 0.5, 0.2);
  const Image s = extract_structure(img).s;
  double residual = 0.0;
  for (int y = 8; y < 40; ++y)
    for (int x = 8; x < 40; ++x) residual = std::max(residual, std::abs(s(x + 1, y) - s(x, y)));
  EXPECT_LE(residual, 0.2 * 0.2);
}

TEST(Structure, RetainsStepEdge) {
  const Image img = step_edge(48, 0.3, 0.7);
  const Image s = extract_structure(img).s;
  const double height = s(47, 24) - s(0, 24);
  EXPECT_GE(height, 0.9 * 0.4);
}

TEST(Structure, Properties) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Image img = fixtures::random_image(24, 20, trial % 2 ? 3 : 1, rng, 0.2, 0.8);
    const Image s = extract_structure(img).s;
    EXPECT_LE(total_variation(s), total_variation(img));
    EXPECT_NEAR(mean(s), mean(img), 0.01);
    const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
    for (double v : s.values()) {
      EXPECT_GE(v, *lo - 1e-12);
      EXPECT_LE(v, *hi + 1e-12);
    }
    EXPECT_EQ(extract_structure(img).s, s);
  }
}
