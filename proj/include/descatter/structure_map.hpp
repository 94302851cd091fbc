#pragma once

// Texture-suppressed, edge-preserving structure image used only to shape the
// transmission regularization weights. Implemented as iterated bilateral
// smoothing where each round weights neighbours by the previous round's values.

#include <algorithm>
#include <cmath>
#include <vector>

#include "descatter/error.hpp"
#include "descatter/image.hpp"

namespace descatter {

struct StructureParams {
  double spatial_sigma = 3.0;
  double range_sigma = 0.1;
  int iterations = 3;

  void validate() const {
    require(spatial_sigma > 0.0, "structure spatial_sigma must be positive");
    require(range_sigma > 0.0, "structure range_sigma must be positive");
    require(iterations >= 0, "structure iterations must be non-negative");
  }
};

struct StructureMap {
  Image s;
};

namespace detail {

inline Image bilateral_round(const Image& src, int radius, const std::vector<double>& spatial,
                             double range_sigma) {
  const int w = src.width(), h = src.height(), channels = src.channels();
  const double inv_range = 1.0 / (2.0 * range_sigma * range_sigma * channels);
  const int side = 2 * radius + 1;
  Image out(w, h, channels);
  std::vector<double> acc(static_cast<std::size_t>(channels));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto center = src.pixel(x, y);
      std::fill(acc.begin(), acc.end(), 0.0);
      double total = 0.0;
      const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      for (int yy = y0; yy <= y1; ++yy) {
        const double* row_spatial = spatial.data() + (yy - y + radius) * side + radius - x;
        for (int xx = x0; xx <= x1; ++xx) {
          const auto p = src.pixel(xx, yy);
          double dist2 = 0.0;
          for (int c = 0; c < channels; ++c) {
            const double d = p[c] - center[c];
            dist2 += d * d;
          }
          const double weight = row_spatial[xx] * std::exp(-dist2 * inv_range);
          total += weight;
          for (int c = 0; c < channels; ++c) {
            acc[static_cast<std::size_t>(c)] += weight * (p[c] - center[c]);
          }
        }
      }
      auto dst = out.pixel(x, y);
      for (int c = 0; c < channels; ++c) {
        // offsets from the centre keep flat regions bit-exact
        dst[c] = std::clamp(center[c] + acc[static_cast<std::size_t>(c)] / total, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Each round averages a (2 ceil(2 spatial_sigma) + 1)^2 window with weight
/// spatial Gaussian x range Gaussian (mean squared channel difference).
/// Zero iterations returns the input unchanged.
inline StructureMap extract_structure(const Image& img, const StructureParams& params = {}) {
  params.validate();
  require_finite(img, "extract_structure");
  if (params.iterations == 0) return {img};

  const int radius = static_cast<int>(std::ceil(2.0 * params.spatial_sigma));
  const int side = 2 * radius + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side * side));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      spatial[static_cast<std::size_t>((dy + radius) * side + dx + radius)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * params.spatial_sigma * params.spatial_sigma));
    }
  }
  Image current = img;
  for (int round = 0; round < params.iterations; ++round) {
    current = detail::bilateral_round(current, radius, spatial, params.range_sigma);
  }
  return {std::move(current)};
}

}  // namespace descatter
