#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "descatter/scatter_model.hpp"
#include "test_support.hpp"

using namespace descatter;

namespace {

Image constant_t(int w, int h, double t) { return fixtures::constant_image(w, h, {t}); }

const Airlight kWhite{{1.0, 1.0, 1.0}};

double std_dev(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

}  // namespace

TEST(Airlight, Validation) {
  EXPECT_NO_THROW(kWhite.validate());
  EXPECT_THROW((Airlight{{1.0, 0.0, 1.0}}).validate(), Error);
  EXPECT_THROW((Airlight{{1.0, 1.0}}).validate(), Error);
  EXPECT_THROW((Airlight{{1.2}}).validate(), Error);
}

TEST(Synthesize, Examples) {
  std::mt19937_64 rng(1);
  const Image L = fixtures::random_image(8, 8, 3, rng);
  EXPECT_EQ(synthesize(L, constant_t(8, 8, 1.0), kWhite), L);

  const Airlight b{{0.7, 0.8, 0.9}};
  const Image opaque = synthesize(L, constant_t(8, 8, 1e-9), b);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(opaque(3, 3, c), b[c], 1e-8);

  const Image one = synthesize(fixtures::constant_image(1, 1, {0.4}), constant_t(1, 1, 0.5),
                               Airlight{{1.0}});
  EXPECT_NEAR(one(0, 0), 0.7, 1e-15);
}

TEST(Synthesize, RejectsBadTransmission) {
  const Image L = fixtures::constant_image(2, 2, {0.4});
  EXPECT_THROW(synthesize(L, constant_t(2, 2, 0.0), Airlight{{1.0}}), Error);
  EXPECT_THROW(synthesize(L, constant_t(2, 2, 1.1), Airlight{{1.0}}), Error);
  EXPECT_THROW(synthesize(L, constant_t(3, 2, 0.5), Airlight{{1.0}}), Error);
}

TEST(Invert, Examples) {
  const Image l0 = invert(fixtures::constant_image(1, 1, {0.7}), constant_t(1, 1, 0.5),
                          Airlight{{1.0}}, 0.01);
  EXPECT_NEAR(l0(0, 0), 0.4, 1e-15);
  std::mt19937_64 rng(2);
  const Image I = fixtures::random_image(5, 5, 3, rng);
  const Image same = invert(I, constant_t(5, 5, 1.0), kWhite, 0.01);
  for (std::size_t i = 0; i < I.size(); ++i) EXPECT_NEAR(same.values()[i], I.values()[i], 1e-15);
}

TEST(Invert, FloorAndClamp) {
  // t below the floor is raised to it; output is clamped to [0, 1]
  const Image l0 = invert(fixtures::constant_image(1, 1, {0.5}), constant_t(1, 1, 0.001),
                          Airlight{{1.0}}, 0.01);
  EXPECT_EQ(l0(0, 0), 0.0);
  EXPECT_THROW(invert(l0, constant_t(1, 1, 0.5), Airlight{{1.0}}, 0.0), Error);
}

TEST(Invert, RoundTripProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Image L = fixtures::random_image(16, 16, 3, rng);
    const Image t = fixtures::random_image(16, 16, 1, rng, 0.01, 1.0);
    const Airlight b{{uni(rng), uni(rng), uni(rng)}};
    const Image back = invert(synthesize(L, t, b), t, b, 0.01);
    for (std::size_t i = 0; i < L.size(); ++i) {
      // inversion clamps to [0, 1]; L above B stays representable
      EXPECT_NEAR(back.values()[i], L.values()[i], 1e-6);
    }
  }
}

TEST(LowerBound, Examples) {
  const auto v1 = transmission_lower_bound(fixtures::constant_image(1, 1, {0.5, 0.6, 0.7}), kWhite, 0.01);
  EXPECT_NEAR(v1.v(0, 0), std::log(0.5), 1e-12);

  const auto v2 = transmission_lower_bound(fixtures::constant_image(1, 1, {1.0, 1.0, 1.0}), kWhite, 0.01);
  EXPECT_NEAR(v2.v(0, 0), std::log(0.01), 1e-12);

  const auto v3 = transmission_lower_bound(fixtures::constant_image(1, 1, {0.8, 0.9, 0.95}),
                                           Airlight{{0.9, 0.9, 0.9}}, 0.01);
  EXPECT_NEAR(v3.v(0, 0), std::log(1.0 / 9.0), 1e-12);
  EXPECT_NEAR(v3.v(0, 0), -2.1972, 1e-4);
}

TEST(LowerBound, RangeAndValidityProperty) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(0.3, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Airlight b{{uni(rng), uni(rng), uni(rng)}};
    Image L = fixtures::random_image(20, 20, 3, rng);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x)
        for (int c = 0; c < 3; ++c) L(x, y, c) = std::min(L(x, y, c), b[c]);
    const Image t = fixtures::random_image(20, 20, 1, rng, 0.02, 1.0);
    const Image I = synthesize(L, t, b);
    const auto bound = transmission_lower_bound(I, b, 0.01);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 20; ++x) {
        EXPECT_GE(bound.v(x, y), std::log(0.01));
        EXPECT_LE(bound.v(x, y), 0.0);
        EXPECT_LE(std::exp(bound.v(x, y)), t(x, y) + 1e-12);
      }
    }
  }
}

TEST(LowerBound, MonotoneInEachChannel) {
  std::mt19937_64 rng(5);
  const Image base = fixtures::random_image(1, 1, 3, rng, 0.0, 0.5);
  for (int c = 0; c < 3; ++c) {
    double prev = INFINITY;
    for (double inc = 0.0; inc <= 0.5; inc += 0.05) {
      Image I = base;
      I(0, 0, c) += inc;
      const double v = transmission_lower_bound(I, kWhite, 0.01).v(0, 0);
      EXPECT_LE(v, prev + 1e-15);
      prev = v;
    }
  }
}

TEST(LowerBound, RejectsZeroAirlight) {
  EXPECT_THROW(transmission_lower_bound(Image(1, 1, 3), Airlight{{1.0, 0.0, 1.0}}, 0.01), Error);
  EXPECT_THROW(transmission_lower_bound(Image(1, 1, 3), kWhite, 1.0), Error);
}

TEST(ErrorPredictors, TransmissionError) {
  EXPECT_EQ(predict_transmission_error(1.0, 0.5, 0.5, 0.0), 0.0);
  EXPECT_NEAR(predict_transmission_error(1.0, 0.5, 0.5, 0.05), 0.05 / 0.55, 1e-12);
  EXPECT_NEAR(predict_transmission_error(1.0, 0.5, 0.5, 0.05), 0.0909, 1e-4);
  EXPECT_THROW(predict_transmission_error(1.0, 0.5, 0.5, -0.5), Error);
  // sub-linear growth in dt
  for (double t : {0.1, 0.3, 0.7}) {
    EXPECT_LT(predict_transmission_error(1.0, 0.6, t, 0.2),
              2.0 * predict_transmission_error(1.0, 0.6, t, 0.1));
  }
  // bounded by |dt / (t + dt)| when B - I <= t
  EXPECT_LE(predict_transmission_error(1.0, 0.7, 0.4, 0.1), 0.1 / 0.5 + 1e-15);
}

TEST(ErrorPredictors, NoiseGain) {
  EXPECT_NEAR(predict_noise_gain(0.05, 0.1), 0.5, 1e-15);
  EXPECT_EQ(predict_noise_gain(0.0, 0.3), 0.0);
  EXPECT_THROW(predict_noise_gain(0.1, 0.0), Error);
}

TEST(ErrorPredictors, MonteCarloNoiseLaw) {
  const double sigma = 0.004;
  const int n = 100000;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, sigma);
  for (int k = 1; k <= 10; ++k) {
    const double t = 0.1 * k;
    const Image tm = constant_t(n, 1, t);
    const Image I = synthesize(fixtures::constant_image(n, 1, {0.5}), tm, Airlight{{1.0}});
    Image noisy = I;
    for (double& v : noisy.values()) v += noise(rng);
    const Image a = invert(noisy, tm, Airlight{{1.0}}, 0.01);
    const Image b = invert(I, tm, Airlight{{1.0}}, 0.01);
    std::vector<double> diff(n);
    for (int i = 0; i < n; ++i) diff[static_cast<std::size_t>(i)] = a(i, 0) - b(i, 0);
    EXPECT_NEAR(std_dev(diff) / predict_noise_gain(sigma, t), 1.0, 0.05) << "t=" << t;
  }
}
