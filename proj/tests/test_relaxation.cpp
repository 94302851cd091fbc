#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "descatter/latent.hpp"
#include "descatter/relaxation.hpp"
#include "descatter/transmission.hpp"
#include "test_support.hpp"

using namespace descatter;

namespace {

NeighborSet make_set(std::vector<double> values, std::vector<double> weights) {
  NeighborSet nb;
  for (std::size_t i = 0; i < values.size(); ++i) nb.push(values[i], weights[i]);
  nb.sort();
  return nb;
}

}  // namespace

TEST(NeighborSet, SortKeepsWeightsAttached) {
  NeighborSet nb = make_set({0.3, -1.0, 0.3, 0.1}, {1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(nb.values, (std::vector<double>{-1.0, 0.1, 0.3, 0.3}));
  EXPECT_EQ(nb.weights, (std::vector<double>{2.0, 4.0, 1.0, 3.0}));
  EXPECT_TRUE(nb.is_sorted());
}

TEST(RelaxationMedian, EmptySetReturnsCenter) {
  const std::vector<double> none;
  EXPECT_EQ(relaxation_median<double>(0.25, 10.0, none, none), 0.25);
}

TEST(RelaxationMedian, MatchesSortedCandidateMedian) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 30;
    NeighborSet nb;
    for (int i = 0; i < n; ++i) nb.push(uni(rng) * 4 - 2, trial % 5 == 0 ? 0.0 : uni(rng));
    nb.sort();
    const double center = uni(rng) * 2 - 1, scale = uni(rng) * 3;
    std::vector<double> all = nb.values;
    double total = 0.0;
    for (double w : nb.weights) total += w;
    double prefix = 0.0;
    for (int h = 0; h <= n; ++h) {
      all.push_back(center + scale * (total - 2 * prefix));
      if (h < n) prefix += nb.weights[static_cast<std::size_t>(h)];
    }
    std::nth_element(all.begin(), all.begin() + n, all.end());
    EXPECT_NEAR(relaxation_median<double>(center, scale, nb.values, nb.weights),
                all[static_cast<std::size_t>(n)], 1e-12);
  }
}

TEST(SolvePixelD, DataOnlyLimit) {
  const NeighborSet nb = make_set({-2.0, -1.0, -0.5}, {1.0, 0.5, 0.2});
  const double targets[3] = {-0.3, -0.6, -0.9};
  EXPECT_NEAR(solve_pixel_d(targets, nb, 0.0), -0.6, 1e-15);
}

TEST(SolvePixelD, WorkedExample) {
  const NeighborSet nb = make_set({0.5}, {1.0});
  const double targets[3] = {0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(solve_pixel_d(targets, nb, 6.0), 0.5);
}

TEST(SolvePixelD, EmptyNeighborsGiveMeanTarget) {
  const double targets[3] = {-0.1, -0.2, -0.6};
  EXPECT_NEAR(solve_pixel_d(targets, NeighborSet{}, 15.0), -0.3, 1e-15);
}

TEST(SolvePixelD, GridOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 24);
  for (int trial = 0; trial < 1000; ++trial) {
    const int W = count(rng);
    const int C = trial % 4 == 0 ? 1 : 3;
    NeighborSet nb;
    for (int i = 0; i < W; ++i) nb.push(-5.0 * uni(rng), uni(rng));
    nb.sort();
    std::vector<double> a(static_cast<std::size_t>(C));
    for (double& v : a) v = -5.0 * uni(rng);
    const double lambda = 20.0 * uni(rng);
    const double got = solve_pixel_d(a, nb, lambda);
    // the convex energy is minimized inside the hull of targets and values
    const double lo = std::min(*std::min_element(a.begin(), a.end()), nb.values.front());
    const double hi = std::max(*std::max_element(a.begin(), a.end()), nb.values.back());
    const double want = fixtures::grid_minimize(a, 1.0, nb.values, nb.weights, lambda, lo, hi);
    ASSERT_NEAR(got, want, 1e-3) << "trial " << trial;
    EXPECT_LE(pixel_energy_d(got, a, nb, lambda), pixel_energy_d(want, a, nb, lambda) + 1e-9);
  }
}

TEST(SolvePixelL, DataOnlyAndWorkedExample) {
  const NeighborSet nb = make_set({0.5}, {1.0});
  EXPECT_EQ(solve_pixel_l(0.3, 0.4, nb, 0.0, 0.01), 0.3);
  EXPECT_EQ(solve_pixel_l(1.4, 0.4, nb, 0.0, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(solve_pixel_l(0.0, 1.0, nb, 2.0, 0.01), 0.5);
  EXPECT_EQ(solve_pixel_l(-0.2, 0.4, NeighborSet{}, 0.01, 0.01), 0.0);
}

TEST(SolvePixelL, GridOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 120);
  for (int trial = 0; trial < 1000; ++trial) {
    const int W = count(rng);
    NeighborSet nb;
    double total = 0.0;
    for (int i = 0; i < W; ++i) {
      const double w = uni(rng);
      nb.push(uni(rng), w);
      total += w;
    }
    for (double& w : nb.weights) w /= total;
    nb.sort();
    const double l0 = uni(rng) * 1.2 - 0.1;
    const double t = 0.02 + 0.98 * uni(rng);
    const double lambda = trial % 2 ? 0.02 * uni(rng) : 2.0 * uni(rng);
    const double got = solve_pixel_l(l0, t, nb, lambda, 0.01);
    const double target[1] = {l0};
    const double want = fixtures::grid_minimize(target, t * t, nb.values, nb.weights, lambda, 0.0, 1.0);
    ASSERT_NEAR(got, want, 1e-3) << "trial " << trial;
  }
}

TEST(SolvePixelL, ApproachesDataAsTransmissionGrows) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    NeighborSet nb;
    for (int i = 0; i < 10; ++i) nb.push(uni(rng), 0.1);
    nb.sort();
    const double l0 = uni(rng);
    double prev = INFINITY;
    for (double t = 0.05; t <= 1.0; t += 0.05) {
      const double dev = std::abs(solve_pixel_l(l0, t, nb, 0.02, 0.01) - l0);
      EXPECT_LE(dev, prev + 1e-15);
      prev = dev;
    }
  }
}

TEST(SolvePixelL, FloorsTransmission) {
  const NeighborSet nb = make_set({0.2, 0.9}, {0.5, 0.5});
  EXPECT_EQ(solve_pixel_l(0.6, 0.0, nb, 0.01, 0.01), solve_pixel_l(0.6, 0.01, nb, 0.01, 0.01));
}
