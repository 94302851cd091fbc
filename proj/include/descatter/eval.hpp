#pragma once

// Synthetic fog benchmark: turns RGB + depth scenes into foggy, noisy inputs
// with t = exp(-eta d), runs restoration methods and reports PSNR against the
// clean scene.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "descatter/error.hpp"
#include "descatter/image.hpp"
#include "descatter/image_io.hpp"
#include "descatter/pipeline.hpp"
#include "descatter/scatter_model.hpp"

namespace descatter::eval {

struct FogScene {
  Image latent;  // ground truth, display-encoded
  Image depth;   // single channel, >= 0
  std::string name;

  void validate() const {
    require(depth.channels() == 1, "scene depth must be single-channel");
    require(latent.same_extent(depth), "scene latent and depth sizes differ");
    for (double d : depth.values()) {
      require(std::isfinite(d) && d >= 0.0, "scene depth must be finite and >= 0");
    }
  }
};

enum class NoiseDomain { kDisplay, kLinear };

struct FogParams {
  double eta = 1.0;
  double noise_sigma = 0.0;  // on the 0-255 scale
  Airlight airlight{{1.0, 1.0, 1.0}};  // linear radiance
  std::uint64_t seed = 0;
  NoiseDomain noise_domain = NoiseDomain::kDisplay;
  GammaSpec gamma;

  void validate() const {
    require(eta >= 0.0 && std::isfinite(eta), "eta must be >= 0");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise sigma must be >= 0");
    airlight.validate();
  }
};

inline Image ground_truth_transmission(const FogScene& scene, double eta) {
  Image t = scene.depth;
  for (double& v : t.values()) v = std::max(std::exp(-eta * v), std::numeric_limits<double>::min());
  return t;
}

/// Adds N(0, sigma) to every value, then clamps to [0, 1].
inline Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
  Image out = img;
  if (sigma <= 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

/// Display-encoded foggy observation of `scene`. Blending happens in linear
/// radiance; noise is injected in the domain chosen by `noise_domain`.
inline Image make_foggy(const FogScene& scene, const FogParams& fp) {
  scene.validate();
  fp.validate();
  require(scene.latent.channels() == fp.airlight.channels(),
          "airlight and scene channel counts differ");
  const Image t = ground_truth_transmission(scene, fp.eta);
  const Image linear = synthesize(to_linear(scene.latent, fp.gamma), t, fp.airlight);
  const double sigma = fp.noise_sigma / 255.0;
  if (fp.noise_domain == NoiseDomain::kLinear) {
    return to_display(add_gaussian_noise(linear, sigma, fp.seed), fp.gamma);
  }
  return add_gaussian_noise(to_display(linear, fp.gamma), sigma, fp.seed);
}

// ---------------------------------------------------------------------------
// Synthetic scenes

namespace detail {

struct Wave {
  double fx, fy, phase, amp;
};

inline std::vector<Wave> random_waves(std::mt19937_64& rng, int count, double max_freq) {
  std::uniform_real_distribution<double> freq(-max_freq, max_freq);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  std::vector<Wave> waves;
  for (int i = 0; i < count; ++i) waves.push_back({freq(rng), freq(rng), phase(rng), amp(rng)});
  return waves;
}

// Smooth field normalized to roughly [0, 1].
inline double eval_waves(const std::vector<Wave>& waves, double u, double v) {
  double sum = 0.0, norm = 0.0;
  for (const Wave& w : waves) {
    sum += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
    norm += w.amp;
  }
  return 0.5 + 0.5 * sum / norm;
}

// HSV with hue in [0, 1). Saturation 1 gives a zero minimum channel.
inline void hsv_to_rgb(double hue, double sat, double val, double* rgb) {
  const double h6 = std::fmod(std::max(hue, 0.0), 1.0) * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double p = val * (1.0 - sat);
  const double q = val * (1.0 - sat * f);
  const double r = val * (1.0 - sat * (1.0 - f));
  const double table[6][3] = {{val, r, p}, {q, val, p}, {p, val, r},
                              {p, q, val}, {r, p, val}, {val, p, q}};
  for (int c = 0; c < 3; ++c) rgb[c] = table[sector][c];
}

}  // namespace detail

/// Deterministic scenes mixing smooth colour fields, gradients and
/// checkerboards (mostly saturated, so the dark channel is near zero) over
/// tilted-plane, two-level and radial depth maps in [0.2, 1.6].
inline std::vector<FogScene> make_synthetic_scenes(int count, int size, std::uint64_t seed) {
  require(count >= 1, "scene count must be >= 1");
  require(size >= 8, "scene size must be >= 8");
  std::vector<FogScene> scenes;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const auto hue_waves = detail::random_waves(rng, 3, 1.5);
    const auto val_waves = detail::random_waves(rng, 4, 3.0);
    const double checker_scale = 4.0 + 12.0 * uni(rng);  // pixels per square
    const double checker_amp = 0.08 + 0.1 * uni(rng);
    const double ramp_angle = 2.0 * std::numbers::pi * uni(rng);
    const double sat_floor = 0.85 + 0.15 * uni(rng);
    const int texture_kind = i % 3;

    FogScene scene{Image(size, size, 3), Image(size, size, 1), "synthetic_" + std::to_string(i)};
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double u = static_cast<double>(x) / size, v = static_cast<double>(y) / size;
        double hue = detail::eval_waves(hue_waves, u, v) * 1.5;
        double val = 0.35 + 0.6 * detail::eval_waves(val_waves, u, v);
        const bool checker =
            (static_cast<int>(x / checker_scale) + static_cast<int>(y / checker_scale)) % 2 == 0;
        switch (texture_kind) {
          case 0:  // smooth field with checker texture
            val += checker ? checker_amp : -checker_amp;
            break;
          case 1:  // gradient ramp with fine checker
            val = 0.35 + 0.6 * (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi *
                                                     (std::cos(ramp_angle) * u + std::sin(ramp_angle) * v)));
            if ((x / 2 + y / 2) % 2 == 0) val -= checker_amp;
            break;
          default:  // blocky cells of constant hue
            hue = std::floor(hue * 6.0) / 6.0 + (checker ? 0.05 : 0.0);
            break;
        }
        // Near-zero dark channel except in a band of slightly desaturated colour.
        const double sat = v > 0.8 && u < 0.3 ? sat_floor : 1.0;
        double rgb[3];
        detail::hsv_to_rgb(hue, sat, std::clamp(val, 0.05, 1.0), rgb);
        for (int c = 0; c < 3; ++c) scene.latent(x, y, c) = rgb[c];
      }
    }

    const int depth_kind = (i / 3 + i) % 3;
    const double near = 0.2 + 0.2 * uni(rng);
    const double far = 1.2 + 0.4 * uni(rng);
    const double split = 0.3 + 0.4 * uni(rng);
    const double cx = uni(rng), cy = uni(rng);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double u = static_cast<double>(x) / (size - 1), v = static_cast<double>(y) / (size - 1);
        double s = 0.0;
        switch (depth_kind) {
          case 0: s = 1.0 - v; break;                          // ground plane receding upwards
          case 1: s = u < split ? 0.15 : 0.85; break;          // two planes
          default: s = std::min(1.0, std::hypot(u - cx, v - cy) / 1.2); break;  // radial ramp
        }
        scene.depth(x, y) = near + (far - near) * s;
      }
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

/// Loads `<name>.png` + `<name>.depth.pfm` pairs, sorted by name.
inline std::vector<FogScene> load_scene_directory(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), "scene directory not found: " + dir.string(),
          ErrorKind::kIo);
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() == ".png") images.push_back(p);
  }
  std::sort(images.begin(), images.end());
  std::vector<FogScene> scenes;
  for (const auto& png : images) {
    const std::string name = png.stem().string();
    const auto depth_path = dir / (name + ".depth.pfm");
    if (!std::filesystem::exists(depth_path)) continue;
    FogScene scene{io::read_png(png), io::read_pfm(depth_path), name};
    require(scene.latent.channels() == 3, name + ": scene image must be RGB", ErrorKind::kIo);
    scene.validate();
    scenes.push_back(std::move(scene));
  }
  require(!scenes.empty(), "no <name>.png + <name>.depth.pfm pairs in " + dir.string(),
          ErrorKind::kIo);
  return scenes;
}

// ---------------------------------------------------------------------------
// Benchmark

struct MetricsRow {
  std::string scene;
  double eta = 0.0;
  std::string method;
  double psnr_db = 0.0;  // kInfinitePsnr for exact results, NaN on failure
  double runtime_s = 0.0;
  std::string error;
};

/// Built-in methods:
///   ours              full pipeline, ground-truth airlight
///   ours-auto         full pipeline, automatic airlight
///   naive-inversion   estimated transmission, direct inversion, ground-truth airlight
///   oracle-inversion  ground-truth transmission and airlight, direct inversion
inline const std::vector<std::string>& builtin_methods() {
  static const std::vector<std::string> methods = {"ours", "ours-auto", "naive-inversion",
                                                   "oracle-inversion"};
  return methods;
}

enum class PsnrDomain { kDisplay, kLinear };

struct BenchmarkOptions {
  PipelineConfig pipeline;  // solver settings shared by the pipeline methods
  PsnrDomain psnr_domain = PsnrDomain::kDisplay;
  bool record_runtime = false;  // wall-clock seconds make the CSV non-reproducible
};

inline std::uint64_t cell_seed(std::uint64_t seed, std::size_t scene, std::size_t eta) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(scene), static_cast<std::uint32_t>(eta)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

/// Restored display-encoded image for one method.
inline Image run_method(const std::string& method, const Image& foggy, const FogScene& scene,
                        const FogParams& fp, const PipelineConfig& base) {
  PipelineConfig cfg = base;
  cfg.gamma = fp.gamma;
  cfg.linear_out = false;
  if (method == "ours" || method == "ours-auto" || method == "naive-inversion") {
    if (method != "ours-auto") cfg.airlight = FixedAirlight{fp.airlight};
    else if (!std::holds_alternative<AutoAirlight>(cfg.airlight)) cfg.airlight = AutoAirlight{};
    cfg.latent_stage = method != "naive-inversion";
    return restore(foggy, cfg).latent;
  }
  if (method == "oracle-inversion") {
    const Image t = ground_truth_transmission(scene, fp.eta);
    return to_display(invert(to_linear(foggy, fp.gamma), t, fp.airlight,
                             std::numeric_limits<double>::min()),
                      fp.gamma);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown method '" + method + "'");
}

/// Every scene x eta x method cell, sorted by (scene, eta, method). A failing
/// cell becomes a row with NaN PSNR and an error note.
inline std::vector<MetricsRow> run_benchmark(const std::vector<FogScene>& scenes,
                                             const std::vector<double>& etas,
                                             const FogParams& fp_base,
                                             const std::vector<std::string>& methods,
                                             const BenchmarkOptions& options = {}) {
  require(!scenes.empty() && !etas.empty() && !methods.empty(),
          "benchmark needs at least one scene, eta and method");
  for (const auto& m : methods) {
    require(std::find(builtin_methods().begin(), builtin_methods().end(), m) !=
                builtin_methods().end(),
            "unknown method '" + m + "'");
  }
  std::vector<MetricsRow> rows;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const FogScene& scene = scenes[si];
    for (std::size_t ei = 0; ei < etas.size(); ++ei) {
      FogParams fp = fp_base;
      fp.eta = etas[ei];
      fp.seed = cell_seed(fp_base.seed, si, ei);
      const Image foggy = make_foggy(scene, fp);
      for (const std::string& method : methods) {
        MetricsRow row{scene.name, fp.eta, method, 0.0, 0.0, {}};
        const auto start = std::chrono::steady_clock::now();
        try {
          const Image restored = run_method(method, foggy, scene, fp, options.pipeline);
          row.psnr_db = options.psnr_domain == PsnrDomain::kDisplay
                            ? psnr(restored, scene.latent)
                            : psnr(to_linear(restored, fp.gamma), to_linear(scene.latent, fp.gamma));
        } catch (const std::exception& e) {
          row.psnr_db = std::numeric_limits<double>::quiet_NaN();
          row.error = e.what();
        }
        if (options.record_runtime) {
          row.runtime_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.scene, a.eta, a.method) < std::tie(b.scene, b.eta, b.method);
  });
  return rows;
}

/// CSV with header `scene,eta,method,psnr_db,runtime_s`.
inline void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "scene,eta,method,psnr_db,runtime_s\n";
  for (const MetricsRow& r : rows) {
    std::ostringstream psnr_text;
    if (std::isnan(r.psnr_db)) psnr_text << "nan";
    else if (std::isinf(r.psnr_db)) psnr_text << "inf";
    else psnr_text << std::fixed << std::setprecision(4) << r.psnr_db;
    out << r.scene << ',' << std::fixed << std::setprecision(3) << r.eta << ',' << r.method << ','
        << psnr_text.str() << ',' << std::setprecision(3) << r.runtime_s << '\n';
  }
}

/// Mean PSNR of `method` at `eta` over all scenes (failed cells skipped).
inline double mean_psnr(const std::vector<MetricsRow>& rows, const std::string& method,
                        double eta) {
  double sum = 0.0;
  int count = 0;
  for (const MetricsRow& r : rows) {
    if (r.method == method && std::abs(r.eta - eta) < 1e-12 && std::isfinite(r.psnr_db)) {
      sum += r.psnr_db;
      ++count;
    }
  }
  return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace descatter::eval
