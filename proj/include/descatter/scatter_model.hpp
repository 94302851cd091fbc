#pragma once

// Physical image formation I = t L + (1 - t) B, its inversion, the per-pixel
// transmission lower bound derived from L >= 0, and the error predictors for
// inverting with a perturbed transmission or a noisy observation.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "descatter/error.hpp"
#include "descatter/image.hpp"

namespace descatter {

/// Backscattered light colour, one strictly positive component per channel.
struct Airlight {
  std::vector<double> b;

  int channels() const noexcept { return static_cast<int>(b.size()); }
  double operator[](int c) const noexcept { return b[static_cast<std::size_t>(c)]; }

  void validate() const {
    require(b.size() == 1 || b.size() == 3, "airlight must have 1 or 3 components");
    for (double v : b) {
      require(std::isfinite(v) && v > 0.0 && v <= 1.0, "airlight components must lie in (0, 1]");
    }
  }

  friend bool operator==(const Airlight&, const Airlight&) = default;
};

/// ln of the per-pixel lower bound on transmission; lies in [ln eps, 0].
struct LowerBoundMap {
  Image v;
};

/// D = ln t per pixel, D <= 0.
struct DepthLogMap {
  Image d;
};

/// Magnitudes |B - I| are floored here before taking logarithms.
inline constexpr double kMinScatterGap = 1e-6;

inline double log_scatter_gap(double b, double value) {
  return std::log(std::max(std::abs(b - value), kMinScatterGap));
}

namespace detail {

inline void check_model_inputs(const Image& img, const Image& t, const Airlight& airlight) {
  airlight.validate();
  require(t.channels() == 1, "transmission map must be single-channel");
  require(img.same_extent(t), "image and transmission sizes differ");
  require(img.channels() == airlight.channels(), "airlight and image channel counts differ");
}

}  // namespace detail

inline Image transmission_from_depth_log(const DepthLogMap& depth) {
  Image t = depth.d;
  for (double& v : t.values()) v = std::exp(v);
  return t;
}

inline Image synthesize(const Image& latent, const Image& t, const Airlight& airlight) {
  detail::check_model_inputs(latent, t, airlight);
  for (double tv : t.values()) {
    require(std::isfinite(tv) && tv > 0.0 && tv <= 1.0, "transmission must lie in (0, 1]");
  }
  Image out(latent.width(), latent.height(), latent.channels());
  for (int y = 0; y < latent.height(); ++y) {
    for (int x = 0; x < latent.width(); ++x) {
      const double tv = t(x, y);
      for (int c = 0; c < latent.channels(); ++c) {
        out(x, y, c) = tv * latent(x, y, c) + (1.0 - tv) * airlight[c];
      }
    }
  }
  return out;
}

/// L0 = B - (B - I) / max(t, t_floor), clamped to [0, 1].
inline Image invert(const Image& observed, const Image& t, const Airlight& airlight,
                    double t_floor) {
  detail::check_model_inputs(observed, t, airlight);
  require(t_floor > 0.0, "t_floor must be positive");
  Image out(observed.width(), observed.height(), observed.channels());
  for (int y = 0; y < observed.height(); ++y) {
    for (int x = 0; x < observed.width(); ++x) {
      const double tv = std::max(t(x, y), t_floor);
      for (int c = 0; c < observed.channels(); ++c) {
        const double b = airlight[c];
        out(x, y, c) = std::clamp(b - (b - observed(x, y, c)) / tv, 0.0, 1.0);
      }
    }
  }
  return out;
}

/// v(x) = ln(max(1 - min_c I^c(x) / B^c, eps)).
inline LowerBoundMap transmission_lower_bound(const Image& observed, const Airlight& airlight,
                                              double eps) {
  airlight.validate();
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(observed.channels() == airlight.channels(), "airlight and image channel counts differ");
  require_finite(observed, "transmission_lower_bound");
  LowerBoundMap bound{Image(observed.width(), observed.height(), 1)};
  const double log_eps = std::log(eps);
  for (int y = 0; y < observed.height(); ++y) {
    for (int x = 0; x < observed.width(); ++x) {
      double min_ratio = observed(x, y, 0) / airlight[0];
      for (int c = 1; c < observed.channels(); ++c) {
        min_ratio = std::min(min_ratio, observed(x, y, c) / airlight[c]);
      }
      const double t_min = 1.0 - min_ratio;
      // Clamp to 0 so rounding in 1 - ratio never yields a positive log.
      bound.v(x, y) = t_min > eps ? std::min(std::log(t_min), 0.0) : log_eps;
    }
  }
  return bound;
}

/// Latent error caused by using t + dt instead of t.
inline double predict_transmission_error(double airlight, double observed, double t, double dt) {
  require(t > 0.0, "t must be positive");
  require(t + dt != 0.0, "t + dt must be non-zero");
  return std::abs(((airlight - observed) / t) * (dt / (t + dt)));
}

/// Magnitude of observation noise n after inversion at transmission t.
inline double predict_noise_gain(double noise, double t) {
  require(t > 0.0, "t must be positive");
  return std::abs(noise / t);
}

}  // namespace descatter
