#pragma once

// Multi-channel floating image container plus the colour/gamma transforms and
// quality metrics shared by every stage of the restoration pipeline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "descatter/error.hpp"

namespace descatter {

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Row-major interleaved image: value (x, y, c) lives at ((y * width + x) * channels + c).
/// Values are linear or display-encoded radiance, nominally in [0, 1].
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels, double fill = 0.0)
      : width_(width), height_(height), channels_(channels) {
    require(width > 0 && height > 0, "image dimensions must be positive");
    require(channels == 1 || channels == 3, "image must have 1 or 3 channels");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  double& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  double operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<double> pixel(int x, int y) noexcept {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int x, int y) const noexcept {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  bool same_extent(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

inline void require_finite(const Image& img, const std::string& what) {
  require(img.all_finite(), what + ": image contains non-finite values", ErrorKind::kNumeric);
}

inline Image clamp01(Image img) {
  for (double& v : img.values()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

/// Copies channel `c` of `img` into a single-channel image.
inline Image extract_channel(const Image& img, int c) {
  require(c >= 0 && c < img.channels(), "channel index out of range");
  Image out(img.width(), img.height(), 1);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    out.values()[i] = img.values()[i * img.channels() + c];
  }
  return out;
}

/// Pure power-law display transfer. Exponent 1 is a pass-through.
struct GammaSpec {
  double exponent = 2.2;
};

inline Image to_linear(const Image& img, GammaSpec g = {}) {
  require(g.exponent > 0.0 && std::isfinite(g.exponent), "gamma exponent must be positive");
  require_finite(img, "to_linear");
  Image out = img;
  for (double& v : out.values()) v = std::pow(std::clamp(v, 0.0, 1.0), g.exponent);
  return out;
}

inline Image to_display(const Image& img, GammaSpec g = {}) {
  require(g.exponent > 0.0 && std::isfinite(g.exponent), "gamma exponent must be positive");
  require_finite(img, "to_display");
  Image out = img;
  const double inv = 1.0 / g.exponent;
  for (double& v : out.values()) v = std::pow(std::clamp(v, 0.0, 1.0), inv);
  return out;
}

/// Returned by psnr() for identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

inline double mean_squared_error(const Image& a, const Image& b) {
  require(a.same_shape(b), "image dimensions differ");
  require(!a.empty(), "empty image");
  double sum = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sum += d * d;
  }
  return sum / static_cast<double>(va.size());
}

inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

enum class IntensityWeights { kMean, kLuma };

/// Single intensity channel plus the per-channel ratios that rebuild the colour image.
struct IntensityChroma {
  Image intensity;
  Image chroma;
};

inline constexpr double kChromaIntensityFloor = 1e-6;

inline IntensityChroma split_intensity(const Image& img,
                                       IntensityWeights weights = IntensityWeights::kMean) {
  require(img.channels() == 3, "split_intensity needs a 3-channel image");
  require_finite(img, "split_intensity");
  static constexpr double kMean[3] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  static constexpr double kLuma[3] = {0.299, 0.587, 0.114};
  const double* w = weights == IntensityWeights::kMean ? kMean : kLuma;

  IntensityChroma ic{Image(img.width(), img.height(), 1), Image(img.width(), img.height(), 3)};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto p = img.pixel(x, y);
      const double intensity = w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
      ic.intensity(x, y) = intensity;
      for (int c = 0; c < 3; ++c) {
        ic.chroma(x, y, c) = intensity < kChromaIntensityFloor ? 1.0 : p[c] / intensity;
      }
    }
  }
  return ic;
}

/// Multiplies a (possibly modified) intensity by the stored ratios and clamps to [0, 1].
inline Image merge_intensity(const IntensityChroma& ic) {
  require(ic.intensity.channels() == 1 && ic.chroma.channels() == 3,
          "merge_intensity needs 1-channel intensity and 3-channel chroma");
  require(ic.intensity.same_extent(ic.chroma), "intensity and chroma sizes differ");
  Image out(ic.intensity.width(), ic.intensity.height(), 3);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out(x, y, c) = std::clamp(ic.intensity(x, y) * ic.chroma(x, y, c), 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace descatter
