#pragma once

// Backscattered light estimation: automatic selection of the most haze-opaque
// pixels, or the mean colour under a user-drawn scribble mask.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "descatter/error.hpp"
#include "descatter/image.hpp"
#include "descatter/scatter_model.hpp"

namespace descatter {

struct ScribbleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> selected;  // row-major, nonzero = selected

  static ScribbleMask from_image(const Image& img) {
    ScribbleMask mask{img.width(), img.height(), std::vector<std::uint8_t>(img.pixel_count(), 0)};
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const auto p = img.pixel(x, y);
        mask.selected[static_cast<std::size_t>(y) * img.width() + x] =
            std::any_of(p.begin(), p.end(), [](double v) { return v > 0.0; }) ? 1 : 0;
      }
    }
    return mask;
  }

  std::size_t count() const {
    return static_cast<std::size_t>(
        std::count_if(selected.begin(), selected.end(), [](std::uint8_t s) { return s != 0; }));
  }
};

enum class AirlightRanking {
  kMinChannel,  // haze-opacity proxy: bright in every channel
  kIntensity,   // raw channel sum
};

namespace detail {

inline Airlight finish_airlight(std::vector<double> sum, double count) {
  for (double& v : sum) v /= count;
  for (double v : sum) {
    require(v > 0.0, "estimated airlight has a zero component", ErrorKind::kNumeric);
  }
  for (double& v : sum) v = std::min(v, 1.0);
  return Airlight{std::move(sum)};
}

}  // namespace detail

/// Mean colour of the top `quantile` fraction of pixels ranked by `ranking`.
/// Ties break by channel sum, then scan order. Fewer than 1/quantile pixels
/// falls back to the single best pixel.
inline Airlight estimate_airlight_auto(const Image& img, double quantile = 0.001,
                                       AirlightRanking ranking = AirlightRanking::kMinChannel) {
  require(quantile > 0.0 && quantile <= 0.5, "airlight quantile must lie in (0, 0.5]");
  require_finite(img, "estimate_airlight_auto");
  const std::size_t n = img.pixel_count();
  const int channels = img.channels();

  std::vector<double> primary(n), secondary(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = img.values().data() + i * channels;
    double lo = p[0], sum = 0.0;
    for (int c = 0; c < channels; ++c) {
      lo = std::min(lo, p[c]);
      sum += p[c];
    }
    primary[i] = ranking == AirlightRanking::kMinChannel ? lo : sum;
    secondary[i] = sum;
  }

  const auto wanted = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(n) + 1e-9));
  const std::size_t take = std::clamp<std::size_t>(wanted, 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (primary[a] != primary[b]) return primary[a] > primary[b];
                      if (secondary[a] != secondary[b]) return secondary[a] > secondary[b];
                      return a < b;
                    });

  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
  for (std::size_t k = 0; k < take; ++k) {
    const double* p = img.values().data() + order[k] * channels;
    for (int c = 0; c < channels; ++c) sum[static_cast<std::size_t>(c)] += p[c];
  }
  return detail::finish_airlight(std::move(sum), static_cast<double>(take));
}

inline Airlight estimate_airlight_scribble(const Image& img, const ScribbleMask& mask) {
  require(mask.width == img.width() && mask.height == img.height(),
          "scribble mask size differs from the image");
  require(mask.selected.size() == img.pixel_count(), "scribble mask is malformed");
  std::vector<double> sum(static_cast<std::size_t>(img.channels()), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (!mask.selected[i]) continue;
    ++count;
    for (int c = 0; c < img.channels(); ++c) {
      sum[static_cast<std::size_t>(c)] += img.values()[i * img.channels() + c];
    }
  }
  require(count > 0, "scribble mask selects no pixels");
  return detail::finish_airlight(std::move(sum), static_cast<double>(count));
}

}  // namespace descatter
