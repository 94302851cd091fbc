#pragma once

// Latent image restoration given transmission t and airlight B. Per channel,
// minimizes
//
//   E(L) = sum_x t(x)^2 (L(x) - L0(x))^2
//        + lambda_l sum_x sum_{y in W(x)} mbar(x, y) |L(x) - L(y)|
//
// where L0 is the direct inversion and mbar are normalized weights combining
// transmission similarity and patch similarity in L0. Far pixels (small t)
// lean on their neighbours, near pixels stay close to L0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "descatter/error.hpp"
#include "descatter/image.hpp"
#include "descatter/relaxation.hpp"
#include "descatter/scatter_model.hpp"

namespace descatter {

struct LatentParams {
  double lambda_l = 0.005;
  int window_radius = 5;
  int patch_radius = 3;
  double sigma_t = 0.1;
  double sigma_p = 0.1;
  int iterations = 3;
  double t_floor = 0.01;

  void validate() const {
    require(lambda_l >= 0.0 && std::isfinite(lambda_l), "latent lambda must be >= 0");
    require(window_radius >= 1 && patch_radius >= 1, "latent radii must be >= 1");
    require(sigma_t > 0.0 && sigma_p > 0.0, "latent sigmas must be positive");
    require(iterations >= 1, "latent iterations must be >= 1");
    require(t_floor > 0.0 && t_floor <= 1.0, "latent t_floor must lie in (0, 1]");
  }
};

/// RMS difference between the patches around `a` and `b`, over the patch
/// offsets where both patch pixels are inside the image, across all channels.
inline double patch_distance(const Image& img, Pixel a, Pixel b, int patch_radius) {
  require(img.contains(a.x, a.y) && img.contains(b.x, b.y), "pixel out of bounds");
  double sum = 0.0;
  long count = 0;
  for (int py = -patch_radius; py <= patch_radius; ++py) {
    for (int px = -patch_radius; px <= patch_radius; ++px) {
      const int ax = a.x + px, ay = a.y + py, bx = b.x + px, by = b.y + py;
      if (!img.contains(ax, ay) || !img.contains(bx, by)) continue;
      for (int c = 0; c < img.channels(); ++c) {
        const double d = img(ax, ay, c) - img(bx, by, c);
        sum += d * d;
      }
      ++count;
    }
  }
  return std::sqrt(sum / static_cast<double>(count * img.channels()));
}

inline double gaussian(double distance, double sigma) {
  return std::exp(-distance * distance / (2.0 * sigma * sigma));
}

/// Unnormalized m(x, y) is symmetric, so only half the window offsets are
/// stored; normalization sums are kept per pixel.
class LatentWeights {
 public:
  struct Offset {
    int dx = 0;
    int dy = 0;
  };

  LatentWeights() = default;

  LatentWeights(int width, int height, int window_radius)
      : width_(width), height_(height), radius_(window_radius) {
    for (int dy = 0; dy <= window_radius; ++dy) {
      for (int dx = -window_radius; dx <= window_radius; ++dx) {
        if (dy > 0 || dx > 0) half_.push_back({dx, dy});
      }
    }
    const std::size_t n = static_cast<std::size_t>(width) * height;
    raw_.assign(half_.size() * n, 0.0f);
    norm_.assign(n, 0.0);
    degenerate_.assign(n, 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int window_radius() const noexcept { return radius_; }
  const std::vector<Offset>& half_offsets() const noexcept { return half_; }

  /// Unnormalized weight between x and x + (dx, dy); 0 when out of bounds or
  /// outside the window.
  double raw(Pixel x, int dx, int dy) const {
    if ((dx == 0 && dy == 0) || std::abs(dx) > radius_ || std::abs(dy) > radius_) return 0.0;
    const int nx = x.x + dx, ny = x.y + dy;
    if (!inside(x.x, x.y) || !inside(nx, ny)) return 0.0;
    if (dy > 0 || (dy == 0 && dx > 0)) return raw_[slot(half_index(dx, dy), x.x, x.y)];
    return raw_[slot(half_index(-dx, -dy), nx, ny)];
  }

  /// m normalized to sum 1 over the window; 0 for degenerate windows.
  double normalized(Pixel x, int dx, int dy) const {
    if (degenerate(x)) return 0.0;
    return raw(x, dx, dy) / norm_[flat(x.x, x.y)];
  }

  bool degenerate(Pixel x) const { return degenerate_[flat(x.x, x.y)] != 0; }

  struct Neighbor {
    int dx = 0;
    int dy = 0;
    double weight = 0.0;
  };

  /// Normalized weights of every in-bounds neighbour, scan order.
  void neighbors_into(Pixel x, std::vector<Neighbor>& out) const {
    out.clear();
    if (degenerate(x)) return;
    const double inv = 1.0 / norm_[flat(x.x, x.y)];
    for (int dy = -radius_; dy <= radius_; ++dy) {
      const int ny = x.y + dy;
      if (ny < 0 || ny >= height_) continue;
      for (int dx = -radius_; dx <= radius_; ++dx) {
        const int nx = x.x + dx;
        if ((dx == 0 && dy == 0) || nx < 0 || nx >= width_) continue;
        const double r = (dy > 0 || (dy == 0 && dx > 0))
                             ? raw_[slot(half_index(dx, dy), x.x, x.y)]
                             : raw_[slot(half_index(-dx, -dy), nx, ny)];
        out.push_back({dx, dy, r * inv});
      }
    }
  }

  std::vector<Neighbor> neighbors(Pixel x) const {
    std::vector<Neighbor> out;
    neighbors_into(x, out);
    return out;
  }

  // Construction access for latent_weights().
  float& raw_slot(std::size_t half, int x, int y) { return raw_[slot(half, x, y)]; }

  void finalize() {
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        double sum = 0.0, peak = 0.0;
        for (int dy = -radius_; dy <= radius_; ++dy) {
          for (int dx = -radius_; dx <= radius_; ++dx) {
            const double r = raw({x, y}, dx, dy);
            sum += r;
            peak = std::max(peak, r);
          }
        }
        norm_[flat(x, y)] = sum;
        degenerate_[flat(x, y)] = peak < 1e-12 ? 1 : 0;
      }
    }
  }

 private:
  bool inside(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::size_t flat(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  std::size_t slot(std::size_t half, int x, int y) const noexcept {
    return half * static_cast<std::size_t>(width_) * height_ + flat(x, y);
  }
  // Index into half_ for dy > 0 or (dy == 0, dx > 0).
  std::size_t half_index(int dx, int dy) const noexcept {
    const int side = 2 * radius_ + 1;
    return dy == 0 ? static_cast<std::size_t>(dx - 1)
                   : static_cast<std::size_t>(radius_ + (dy - 1) * side + dx + radius_);
  }

  int width_ = 0;
  int height_ = 0;
  int radius_ = 0;
  std::vector<Offset> half_;
  std::vector<float> raw_;
  std::vector<double> norm_;
  std::vector<std::uint8_t> degenerate_;
};

/// m(x, y) = g(|t(x) - t(y)|, sigma_t) * g(patch_distance(L0, x, y), sigma_p).
/// Patch distances come from per-offset summed-area tables, which matches
/// patch_distance() exactly (up to rounding).
inline LatentWeights latent_weights(const Image& t, const Image& initial,
                                    const LatentParams& params) {
  params.validate();
  require(t.channels() == 1, "transmission map must be single-channel");
  require(t.same_extent(initial), "transmission and latent sizes differ");
  const int w = initial.width(), h = initial.height(), channels = initial.channels();
  const int pr = params.patch_radius;
  LatentWeights weights(w, h, params.window_radius);

  // Summed-area tables with a zero border row/column: (w + 1) x (h + 1).
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<double> sat_err(stride * (h + 1)), sat_cnt(stride * (h + 1));
  auto at = [stride](std::vector<double>& v, int x, int y) -> double& {
    return v[static_cast<std::size_t>(y) * stride + x];
  };

  const auto& half = weights.half_offsets();
  for (std::size_t k = 0; k < half.size(); ++k) {
    const int dx = half[k].dx, dy = half[k].dy;
    for (int y = 0; y < h; ++y) {
      double row_err = 0.0, row_cnt = 0.0;
      for (int x = 0; x < w; ++x) {
        const int nx = x + dx, ny = y + dy;
        if (nx >= 0 && nx < w && ny < h) {
          const auto p = initial.pixel(x, y);
          const auto q = initial.pixel(nx, ny);
          for (int c = 0; c < channels; ++c) row_err += (p[c] - q[c]) * (p[c] - q[c]);
          row_cnt += 1.0;
        }
        at(sat_err, x + 1, y + 1) = at(sat_err, x + 1, y) + row_err;
        at(sat_cnt, x + 1, y + 1) = at(sat_cnt, x + 1, y) + row_cnt;
      }
    }
    for (int y = 0; y < h; ++y) {
      const int ny = y + dy;
      if (ny >= h) break;
      const int y0 = std::max(0, y - pr), y1 = std::min(h, y + pr + 1);
      for (int x = 0; x < w; ++x) {
        const int nx = x + dx;
        if (nx < 0 || nx >= w) continue;
        const int x0 = std::max(0, x - pr), x1 = std::min(w, x + pr + 1);
        const double err = at(sat_err, x1, y1) - at(sat_err, x0, y1) - at(sat_err, x1, y0) +
                           at(sat_err, x0, y0);
        const double cnt = at(sat_cnt, x1, y1) - at(sat_cnt, x0, y1) - at(sat_cnt, x1, y0) +
                           at(sat_cnt, x0, y0);
        const double dist = std::sqrt(std::max(err, 0.0) / (cnt * channels));
        const double m = gaussian(t(x, y) - t(nx, ny), params.sigma_t) *
                         gaussian(dist, params.sigma_p);
        weights.raw_slot(k, x, y) = static_cast<float>(m);
      }
    }
  }
  weights.finalize();
  return weights;
}

/// Exact minimizer of t^2 (L - l0)^2 + lambda_l sum_h m_h |L - L_h| with t
/// floored at t_floor, clamped to [0, 1]. `nb` must be sorted ascending.
inline double solve_pixel_l(double l0, double t_val, const NeighborSet& nb, double lambda_l,
                            double t_floor) {
  const double t_eff = std::max(t_val, t_floor);
  const double scale = lambda_l / (2.0 * t_eff * t_eff);
  return std::clamp(relaxation_median<double>(l0, scale, nb.values, nb.weights), 0.0, 1.0);
}

inline double pixel_energy_l(double value, double l0, double t_val, const NeighborSet& nb,
                             double lambda_l, double t_floor) {
  const double t_eff = std::max(t_val, t_floor);
  const double target[1] = {l0};
  return relaxation_energy(value, target, t_eff * t_eff, nb, lambda_l);
}

/// One Jacobi pass over every pixel and channel with fixed weights.
inline Image iterate_l(const Image& previous, const Image& initial, const Image& t,
                       const LatentWeights& weights, const LatentParams& params) {
  Image next(previous.width(), previous.height(), previous.channels());
  std::vector<LatentWeights::Neighbor> window;
  NeighborSet nb;
  for (int y = 0; y < previous.height(); ++y) {
    for (int x = 0; x < previous.width(); ++x) {
      weights.neighbors_into({x, y}, window);
      for (int c = 0; c < previous.channels(); ++c) {
        nb.clear();
        for (const auto& n : window) {
          if (n.weight > 0.0) nb.push(previous(x + n.dx, y + n.dy, c), n.weight);
        }
        nb.sort();
        next(x, y, c) =
            solve_pixel_l(initial(x, y, c), t(x, y), nb, params.lambda_l, params.t_floor);
      }
    }
  }
  return next;
}

using LatentIterationObserver = std::function<void(int, const Image&)>;

/// L0 = invert(I, t, B); weights from (t, L0) once; then `iterations` passes.
inline Image estimate_latent(const Image& observed, const Image& t, const Airlight& airlight,
                             const LatentParams& params = {},
                             const LatentIterationObserver& on_iteration = {}) {
  params.validate();
  const Image initial = invert(observed, t, airlight, params.t_floor);
  const LatentWeights weights = latent_weights(t, initial, params);
  Image current = initial;
  for (int it = 1; it <= params.iterations; ++it) {
    current = iterate_l(current, initial, t, weights, params);
    require_finite(current, "latent pass");
    if (on_iteration) on_iteration(it, current);
  }
  return current;
}

}  // namespace descatter
