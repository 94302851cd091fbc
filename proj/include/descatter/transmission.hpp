#pragma once

// Log-transmission estimation. Minimizes
//
//   E(D) = sum_x sum_c (D(x) - (ibar^c(x) - lbar^c(x)))^2
//        + lambda sum_x sum_{y in W(x)} w~(x, y) |D(x) - D(y)|
//
// by Jacobi relaxation: each pass solves every pixel's one-dimensional
// subproblem exactly (weighted median) against the previous pass's D. The
// weights w~ are structure-guided Gaussians with neighbours whose current D
// lies below the pixel's own lower bound v(x) dropped, which keeps the
// iterates above the transmission lower bound without a hard constraint.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "descatter/error.hpp"
#include "descatter/image.hpp"
#include "descatter/relaxation.hpp"
#include "descatter/scatter_model.hpp"
#include "descatter/structure_map.hpp"

namespace descatter {

struct TransmissionParams {
  double lambda = 15.0;
  int window_radius = 5;
  double sigma_s = 0.03;
  double eps = 0.01;
  int iterations = 3;

  void validate() const {
    require(lambda >= 0.0 && std::isfinite(lambda), "transmission lambda must be >= 0");
    require(window_radius >= 1, "transmission window radius must be >= 1");
    require(sigma_s > 0.0, "transmission sigma_s must be positive");
    require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    require(iterations >= 1, "transmission iterations must be >= 1");
  }
};

/// ln|B - I| and ln|B - L| per pixel and channel.
struct LogObservation {
  Image i_bar;
  Image l_bar;

  /// Per-channel data targets ibar^c - lbar^c at a pixel.
  void data_targets(int x, int y, std::span<double> out) const {
    for (int c = 0; c < i_bar.channels(); ++c) out[c] = i_bar(x, y, c) - l_bar(x, y, c);
  }
};

inline LogObservation make_log_observation(const Image& observed, const Image& latent,
                                           const Airlight& airlight) {
  airlight.validate();
  require(observed.same_shape(latent), "observation and latent shapes differ");
  require(observed.channels() == airlight.channels(), "airlight and image channel counts differ");
  LogObservation obs{Image(observed.width(), observed.height(), observed.channels()),
                     Image(observed.width(), observed.height(), observed.channels())};
  for (int y = 0; y < observed.height(); ++y) {
    for (int x = 0; x < observed.width(); ++x) {
      for (int c = 0; c < observed.channels(); ++c) {
        obs.i_bar(x, y, c) = log_scatter_gap(airlight[c], observed(x, y, c));
        obs.l_bar(x, y, c) = log_scatter_gap(airlight[c], latent(x, y, c));
      }
    }
  }
  return obs;
}

/// Neighbour y = x + (dx, dy) with its regularization weight.
struct WindowWeight {
  int dx = 0;
  int dy = 0;
  double weight = 0.0;
};

inline void guided_weights_into(const Image& structure, Pixel x, int window_radius, double sigma_s,
                                std::vector<WindowWeight>& out) {
  out.clear();
  const int channels = structure.channels();
  const double inv = 1.0 / (2.0 * sigma_s * sigma_s * channels);
  const auto center = structure.pixel(x.x, x.y);
  const int y0 = std::max(0, x.y - window_radius);
  const int y1 = std::min(structure.height() - 1, x.y + window_radius);
  const int x0 = std::max(0, x.x - window_radius);
  const int x1 = std::min(structure.width() - 1, x.x + window_radius);
  for (int yy = y0; yy <= y1; ++yy) {
    for (int xx = x0; xx <= x1; ++xx) {
      if (xx == x.x && yy == x.y) continue;
      const auto p = structure.pixel(xx, yy);
      double dist2 = 0.0;
      for (int c = 0; c < channels; ++c) dist2 += (p[c] - center[c]) * (p[c] - center[c]);
      out.push_back({xx - x.x, yy - x.y, std::exp(-dist2 * inv)});
    }
  }
}

/// w_d(x, y) = exp(-|S(x) - S(y)|^2 / (2 sigma_s^2)) over the window around x,
/// centre excluded, clipped at the image border. |.|^2 is the channel mean of
/// squared differences.
inline std::vector<WindowWeight> guided_weights(const StructureMap& structure, Pixel x,
                                                int window_radius, double sigma_s) {
  require(structure.s.contains(x.x, x.y), "pixel out of bounds");
  std::vector<WindowWeight> out;
  guided_weights_into(structure.s, x, window_radius, sigma_s, out);
  return out;
}

/// Zeroes the weight of every neighbour whose current D is below v(x).
/// A neighbour exactly at the bound keeps its weight.
inline void selective_weights(std::span<WindowWeight> weights, const DepthLogMap& d_prev,
                              const LowerBoundMap& bound, Pixel x) {
  const double vx = bound.v(x.x, x.y);
  for (WindowWeight& w : weights) {
    if (d_prev.d(x.x + w.dx, x.y + w.dy) < vx) w.weight = 0.0;
  }
}

/// Exact minimizer of sum_c (D - a^c)^2 + lambda sum_h w_h |D - D_h|.
/// `nb` must be sorted ascending. An empty set yields the mean target.
inline double solve_pixel_d(std::span<const double> data_targets, const NeighborSet& nb,
                            double lambda) {
  require(!data_targets.empty(), "solve_pixel_d needs at least one data target");
  double mean = 0.0;
  for (double a : data_targets) mean += a;
  const double channels = static_cast<double>(data_targets.size());
  mean /= channels;
  return relaxation_median<double>(mean, lambda / (2.0 * channels), nb.values, nb.weights);
}

/// Pre-clamp pixel energy of the log-transmission subproblem.
inline double pixel_energy_d(double d, std::span<const double> data_targets, const NeighborSet& nb,
                             double lambda) {
  return relaxation_energy(d, data_targets, 1.0, nb, lambda);
}

/// Everything the solver knew when it updated one pixel.
struct PixelUpdate {
  Pixel pixel;
  std::span<const double> data_targets;
  const NeighborSet& neighbors;
  double lambda = 0.0;
  double previous = 0.0;   // D_prev(x)
  double unclamped = 0.0;  // subproblem minimizer
  double updated = 0.0;    // after clamping to [v(x), 0]
};

using PixelObserver = std::function<void(const PixelUpdate&)>;

/// One Jacobi pass. Neighbours are always read from `d_prev`.
inline DepthLogMap iterate_d(const DepthLogMap& d_prev, const LogObservation& obs,
                             const StructureMap& structure, const LowerBoundMap& bound,
                             const TransmissionParams& params,
                             const PixelObserver& observer = {}) {
  params.validate();
  const Image& prev = d_prev.d;
  require(prev.channels() == 1 && bound.v.channels() == 1, "D and v must be single-channel");
  require(prev.same_extent(bound.v) && prev.same_extent(obs.i_bar) &&
              prev.same_extent(obs.l_bar) && prev.same_extent(structure.s),
          "transmission solver inputs differ in size");
  require(obs.i_bar.same_shape(obs.l_bar), "log observation channels differ");

  DepthLogMap next{Image(prev.width(), prev.height(), 1)};
  std::vector<WindowWeight> window;
  NeighborSet nb;
  std::vector<double> targets(static_cast<std::size_t>(obs.i_bar.channels()));
  for (int y = 0; y < prev.height(); ++y) {
    for (int x = 0; x < prev.width(); ++x) {
      const Pixel px{x, y};
      guided_weights_into(structure.s, px, params.window_radius, params.sigma_s, window);
      selective_weights(window, d_prev, bound, px);
      nb.clear();
      for (const WindowWeight& w : window) {
        if (w.weight > 0.0) nb.push(prev(x + w.dx, y + w.dy), w.weight);
      }
      nb.sort();
      obs.data_targets(x, y, targets);
      const double unclamped = solve_pixel_d(targets, nb, params.lambda);
      const double updated = std::clamp(unclamped, bound.v(x, y), 0.0);
      next.d(x, y) = updated;
      if (observer) {
        observer(PixelUpdate{px, targets, nb, params.lambda, prev(x, y), unclamped, updated});
      }
    }
  }
  return next;
}

struct TransmissionEstimate {
  DepthLogMap depth;
  Image transmission;  // exp(depth)
  LowerBoundMap bound;
  LogObservation observation;
};

/// Called after each pass with the 1-based pass index.
using IterationObserver = std::function<void(int, const DepthLogMap&)>;

/// Runs `iterations` passes from `start` with a fixed observation.
inline TransmissionEstimate run_transmission_passes(DepthLogMap start, LowerBoundMap bound,
                                                    LogObservation obs,
                                                    const StructureMap& structure,
                                                    const TransmissionParams& params,
                                                    const IterationObserver& on_iteration,
                                                    const PixelObserver& on_pixel) {
  DepthLogMap depth = std::move(start);
  for (int it = 1; it <= params.iterations; ++it) {
    depth = iterate_d(depth, obs, structure, bound, params, on_pixel);
    require_finite(depth.d, "transmission pass");
    if (on_iteration) on_iteration(it, depth);
  }
  Image t = transmission_from_depth_log(depth);
  return {std::move(depth), std::move(t), std::move(bound), std::move(obs)};
}

/// Starts from D = v with lbar taken from the inversion at t = exp(v), so the
/// data targets equal v wherever that inversion is not clamped.
inline TransmissionEstimate estimate_transmission(const Image& observed, const Airlight& airlight,
                                                  const StructureMap& structure,
                                                  const TransmissionParams& params = {},
                                                  const IterationObserver& on_iteration = {},
                                                  const PixelObserver& on_pixel = {}) {
  params.validate();
  require(structure.s.same_extent(observed), "structure map size differs from the image");
  LowerBoundMap bound = transmission_lower_bound(observed, airlight, params.eps);
  DepthLogMap start{bound.v};
  const Image provisional =
      invert(observed, transmission_from_depth_log(start), airlight, params.eps);
  LogObservation obs = make_log_observation(observed, provisional, airlight);
  return run_transmission_passes(std::move(start), std::move(bound), std::move(obs), structure,
                                 params, on_iteration, on_pixel);
}

/// Re-runs the relaxation with lbar refreshed from a restored latent image,
/// starting from a previous estimate.
inline TransmissionEstimate refine_transmission(const Image& observed, const Airlight& airlight,
                                                const StructureMap& structure, const Image& latent,
                                                const TransmissionEstimate& previous,
                                                const TransmissionParams& params = {},
                                                const IterationObserver& on_iteration = {}) {
  params.validate();
  LogObservation obs = make_log_observation(observed, latent, airlight);
  return run_transmission_passes(previous.depth, previous.bound, std::move(obs), structure, params,
                                 on_iteration, {});
}

}  // namespace descatter
