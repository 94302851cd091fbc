#pragma once

// End-to-end restoration: linearize, estimate airlight, extract structure,
// estimate transmission, restore the latent image, re-apply display gamma.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "descatter/airlight.hpp"
#include "descatter/error.hpp"
#include "descatter/image.hpp"
#include "descatter/latent.hpp"
#include "descatter/scatter_model.hpp"
#include "descatter/structure_map.hpp"
#include "descatter/transmission.hpp"

namespace descatter {

struct AutoAirlight {
  double quantile = 0.001;
  AirlightRanking ranking = AirlightRanking::kMinChannel;
};
struct ScribbleAirlight {
  ScribbleMask mask;
};
/// Given in linear radiance, one component per processed channel (a single
/// value is broadcast).
struct FixedAirlight {
  Airlight b;
};
using AirlightMode = std::variant<AutoAirlight, ScribbleAirlight, FixedAirlight>;

enum class ColorMode { kFullColor, kIntensityOnly };

struct PipelineConfig {
  GammaSpec gamma;
  AirlightMode airlight = AutoAirlight{};
  std::optional<StructureParams> structure = StructureParams{};  // nullopt: S = I
  TransmissionParams transmission;
  LatentParams latent;
  ColorMode mode = ColorMode::kFullColor;
  IntensityWeights intensity_weights = IntensityWeights::kMean;
  bool linear_out = false;         // return the latent in linear radiance
  bool refine_transmission = false;  // one extra D pass-set with lbar from the restored L
  bool latent_stage = true;        // false: direct inversion with the estimated t
  std::uint64_t seed = 0;          // reserved; the pipeline is deterministic

  void validate() const {
    require(gamma.exponent > 0.0, "gamma exponent must be positive");
    if (structure) structure->validate();
    transmission.validate();
    latent.validate();
    if (const auto* fixed = std::get_if<FixedAirlight>(&airlight)) {
      fixed->b.validate();
    }
    if (const auto* a = std::get_if<AutoAirlight>(&airlight)) {
      require(a->quantile > 0.0 && a->quantile <= 0.5, "airlight quantile must lie in (0, 0.5]");
    }
  }
};

struct StageTimings {
  double airlight_s = 0.0;
  double structure_s = 0.0;
  double transmission_s = 0.0;
  double latent_s = 0.0;

  double total() const { return airlight_s + structure_s + transmission_s + latent_s; }
};

struct RestorationResult {
  Image latent;        // display-encoded unless linear_out
  Image transmission;  // exp(depth_log)
  DepthLogMap depth_log;
  LowerBoundMap bound;
  Airlight airlight;   // linear radiance
  StructureMap structure;
  Image initial;       // direct inversion L0, same encoding as latent
  StageTimings timings;
};

/// Optional hooks for debugging dumps and verification.
struct PipelineObservers {
  IterationObserver on_transmission_iteration;
  LatentIterationObserver on_latent_iteration;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* stage, double& seconds, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  try {
    auto result = fn();
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + stage + "] " + e.what());
  }
}

inline Airlight broadcast(const Airlight& b, int channels) {
  if (b.channels() == channels) return b;
  require(b.channels() == 1 || channels == 1, "fixed airlight channel count does not match");
  if (b.channels() == 1) return Airlight{std::vector<double>(static_cast<std::size_t>(channels), b[0])};
  return Airlight{{(b[0] + b[1] + b[2]) / 3.0}};
}

inline Airlight resolve_airlight(const AirlightMode& mode, const Image& linear) {
  return std::visit(
      [&](const auto& m) -> Airlight {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, AutoAirlight>) {
          return estimate_airlight_auto(linear, m.quantile, m.ranking);
        } else if constexpr (std::is_same_v<M, ScribbleAirlight>) {
          return estimate_airlight_scribble(linear, m.mask);
        } else {
          return broadcast(m.b, linear.channels());
        }
      },
      mode);
}

// Runs every stage on an already-linearized image of any channel count.
inline RestorationResult restore_linear(const Image& linear, const PipelineConfig& cfg,
                                        const PipelineObservers& observers) {
  RestorationResult result;
  result.airlight = run_stage("airlight", result.timings.airlight_s,
                              [&] { return resolve_airlight(cfg.airlight, linear); });
  result.structure = run_stage("structure", result.timings.structure_s, [&] {
    return cfg.structure ? extract_structure(linear, *cfg.structure) : StructureMap{linear};
  });
  auto estimate = run_stage("transmission", result.timings.transmission_s, [&] {
    return estimate_transmission(linear, result.airlight, result.structure, cfg.transmission,
                                 observers.on_transmission_iteration);
  });

  LatentParams latent_params = cfg.latent;
  Image latent = run_stage("latent", result.timings.latent_s, [&] {
    if (!cfg.latent_stage) return invert(linear, estimate.transmission, result.airlight, latent_params.t_floor);
    return estimate_latent(linear, estimate.transmission, result.airlight, latent_params,
                           observers.on_latent_iteration);
  });

  if (cfg.refine_transmission) {
    double extra = 0.0;
    estimate = run_stage("transmission", extra, [&] {
      return refine_transmission(linear, result.airlight, result.structure, latent, estimate,
                                 cfg.transmission, observers.on_transmission_iteration);
    });
    result.timings.transmission_s += extra;
    latent = run_stage("latent", extra, [&] {
      if (!cfg.latent_stage) return invert(linear, estimate.transmission, result.airlight, latent_params.t_floor);
      return estimate_latent(linear, estimate.transmission, result.airlight, latent_params,
                             observers.on_latent_iteration);
    });
    result.timings.latent_s += extra;
  }

  result.initial = invert(linear, estimate.transmission, result.airlight, latent_params.t_floor);
  result.latent = std::move(latent);
  result.transmission = std::move(estimate.transmission);
  result.depth_log = std::move(estimate.depth);
  result.bound = std::move(estimate.bound);
  return result;
}

inline void encode_outputs(RestorationResult& result, const PipelineConfig& cfg) {
  if (cfg.linear_out) return;
  result.latent = to_display(result.latent, cfg.gamma);
  result.initial = to_display(result.initial, cfg.gamma);
}

}  // namespace detail

/// Full-colour restoration of a display-encoded image (any channel count;
/// C = channels in both solvers).
inline RestorationResult restore(const Image& display, const PipelineConfig& cfg,
                                 const PipelineObservers& observers = {}) {
  cfg.validate();
  require_finite(display, "restore input");
  const Image linear = to_linear(display, cfg.gamma);
  if (cfg.mode == ColorMode::kIntensityOnly && linear.channels() == 3) {
    const IntensityChroma ic = split_intensity(linear, cfg.intensity_weights);
    RestorationResult result = detail::restore_linear(ic.intensity, cfg, observers);
    result.latent = merge_intensity({result.latent, ic.chroma});
    result.initial = merge_intensity({result.initial, ic.chroma});
    detail::encode_outputs(result, cfg);
    require_finite(result.latent, "restore output");
    return result;
  }
  RestorationResult result = detail::restore_linear(linear, cfg, observers);
  detail::encode_outputs(result, cfg);
  require_finite(result.latent, "restore output");
  return result;
}

/// Intensity-only restoration: the solvers run on the channel mean (or luma),
/// then the original chroma ratios are re-applied.
inline RestorationResult restore_underwater(const Image& display, PipelineConfig cfg,
                                            const PipelineObservers& observers = {}) {
  require(display.channels() == 3, "underwater mode needs a 3-channel image");
  cfg.mode = ColorMode::kIntensityOnly;
  return restore(display, cfg, observers);
}

// ---------------------------------------------------------------------------
// key=value configuration files

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kInvalidArgument, "invalid number for " + key + ": '" + text + "'");
}

inline int parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kInvalidArgument, "invalid integer for " + key + ": '" + text + "'");
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw Error(ErrorKind::kInvalidArgument, "invalid boolean for " + key + ": '" + text + "'");
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Parses "auto:<q>", "scribble:<path>" (mask loaded through `load_mask`) or
/// "fixed:r,g,b" / "fixed:v".
inline AirlightMode parse_airlight_mode(
    const std::string& spec, const std::function<ScribbleMask(const std::string&)>& load_mask) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (kind == "auto") {
    return AutoAirlight{arg.empty() ? 0.001 : detail::parse_double("airlight", arg)};
  }
  if (kind == "scribble") {
    require(!arg.empty(), "scribble airlight needs a mask path");
    require(static_cast<bool>(load_mask), "no mask loader available");
    return ScribbleAirlight{load_mask(arg)};
  }
  if (kind == "fixed") {
    std::vector<double> b;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) b.push_back(detail::parse_double("airlight", item));
    Airlight airlight{std::move(b)};
    airlight.validate();
    return FixedAirlight{std::move(airlight)};
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown airlight mode '" + spec + "'");
}

/// Applies one setting. Keys mirror the CLI long flags without the dashes.
inline void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "gamma") cfg.gamma.exponent = parse_double(key, value);
  else if (key == "lambda") cfg.transmission.lambda = parse_double(key, value);
  else if (key == "lambda-l") cfg.latent.lambda_l = parse_double(key, value);
  else if (key == "window") {
    cfg.transmission.window_radius = parse_int(key, value);
    cfg.latent.window_radius = cfg.transmission.window_radius;
  } else if (key == "patch") cfg.latent.patch_radius = parse_int(key, value);
  else if (key == "iters-d") cfg.transmission.iterations = parse_int(key, value);
  else if (key == "iters-l") cfg.latent.iterations = parse_int(key, value);
  else if (key == "eps") {
    cfg.transmission.eps = parse_double(key, value);
    cfg.latent.t_floor = cfg.transmission.eps;
  } else if (key == "sigma-s") cfg.transmission.sigma_s = parse_double(key, value);
  else if (key == "sigma-t") cfg.latent.sigma_t = parse_double(key, value);
  else if (key == "sigma-p") cfg.latent.sigma_p = parse_double(key, value);
  else if (key == "underwater") {
    cfg.mode = parse_bool(key, value) ? ColorMode::kIntensityOnly : ColorMode::kFullColor;
  } else if (key == "no-structure") {
    if (parse_bool(key, value)) cfg.structure.reset();
    else if (!cfg.structure) cfg.structure = StructureParams{};
  } else if (key == "structure-sigma") {
    if (!cfg.structure) cfg.structure = StructureParams{};
    cfg.structure->spatial_sigma = parse_double(key, value);
  } else if (key == "structure-range") {
    if (!cfg.structure) cfg.structure = StructureParams{};
    cfg.structure->range_sigma = parse_double(key, value);
  } else if (key == "structure-iters") {
    if (!cfg.structure) cfg.structure = StructureParams{};
    cfg.structure->iterations = parse_int(key, value);
  } else if (key == "linear-out") cfg.linear_out = parse_bool(key, value);
  else if (key == "refine") cfg.refine_transmission = parse_bool(key, value);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "airlight") {
    cfg.airlight = parse_airlight_mode(value, [](const std::string&) -> ScribbleMask {
      throw Error(ErrorKind::kInvalidArgument,
                  "scribble masks must be given on the command line");
    });
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

/// Reads `key = value` lines; '#' starts a comment.
inline void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

}  // namespace descatter
