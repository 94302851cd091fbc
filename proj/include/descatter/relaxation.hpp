#pragma once

// Exact minimizer of a one-dimensional quadratic + weighted-L1 energy
//
//   E(u) = q (u - center)^2 + sum_h w_h |u - v_h|,   q > 0, w_h >= 0
//
// With v sorted ascending, the minimizer is the median of the 2W+1 values
// {v_0, ..., v_{W-1}, r_0, ..., r_W} where
//
//   r_h = center + (1 / 2q) (-sum_{j<h} w_j + sum_{j>=h} w_j).
//
// Both relaxation solvers (log-transmission and latent image) reduce to this
// kernel with different `center` and `scale = 1 / 2q` factors.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <vector>

namespace descatter {

/// Neighbour values with matching non-negative weights.
struct NeighborSet {
  std::vector<double> values;
  std::vector<double> weights;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }

  void clear() {
    values.clear();
    weights.clear();
  }

  void push(double value, double weight) {
    values.push_back(value);
    weights.push_back(weight);
  }

  /// Sorts values ascending, permuting weights alongside. Equal values keep
  /// insertion order so the result is deterministic.
  void sort() {
    const std::size_t n = values.size();
    if (std::is_sorted(values.begin(), values.end())) return;
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    scratch_.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch_[i] = values[order_[i]];
    values.swap(scratch_);
    for (std::size_t i = 0; i < n; ++i) scratch_[i] = weights[order_[i]];
    weights.swap(scratch_);
  }

  bool is_sorted() const { return std::is_sorted(values.begin(), values.end()); }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> scratch_;
};

/// Median of {values..., r_0..r_W}. `values` must be sorted ascending.
/// With no neighbours the single candidate r_0 = center is returned.
template <std::floating_point T>
T relaxation_median(T center, T scale, std::span<const T> values, std::span<const T> weights) {
  assert(values.size() == weights.size());
  const std::size_t n = values.size();
  T total = 0;
  for (T w : weights) total += w;

  // Candidates r_h are non-increasing in h, so walking h from W down to 0
  // yields them ascending. prefix(h) = sum_{j<h} w_j.
  std::size_t h = n;
  T prefix = total;
  auto candidate = [&](T pre) { return center + scale * (total - pre - pre); };

  // Merge the two ascending sequences until the n-th (0-based) element.
  std::size_t i = 0;
  bool candidates_left = true;
  T current = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const T r = candidates_left ? candidate(prefix) : T{0};
    if (i < n && (!candidates_left || values[i] <= r)) {
      current = values[i++];
    } else {
      current = r;
      if (h == 0) {
        candidates_left = false;
      } else {
        --h;
        prefix -= weights[h];
      }
    }
  }
  return current;
}

/// E(u) = quad * sum_c (u - targets_c)^2 + reg * sum_h w_h |u - v_h|.
inline double relaxation_energy(double u, std::span<const double> targets, double quad,
                                const NeighborSet& nb, double reg) {
  double data = 0.0;
  for (double a : targets) data += (u - a) * (u - a);
  double smooth = 0.0;
  for (std::size_t h = 0; h < nb.size(); ++h) smooth += nb.weights[h] * std::abs(u - nb.values[h]);
  return quad * data + reg * smooth;
}

}  // namespace descatter
