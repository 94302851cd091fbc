// descatter: restore images degraded by a scattering medium, or run the
// synthetic benchmark.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "descatter/eval.hpp"
#include "descatter/image_io.hpp"
#include "descatter/pipeline.hpp"

namespace fs = std::filesystem;
using namespace descatter;

namespace {

// Writes every output under a temporary name first so a failure leaves no
// partial files behind.
class OutputBatch {
 public:
  ~OutputBatch() {
    std::error_code ec;
    for (const auto& [tmp, final_path] : staged_) fs::remove(tmp, ec);
  }

  void image(const fs::path& path, const Image& img) {
    const fs::path tmp = staging_name(path);
    io::write_image(tmp, img);
    staged_.emplace_back(tmp, path);
  }

  void text(const fs::path& path, const std::string& content) {
    const fs::path tmp = staging_name(path);
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    staged_.emplace_back(tmp, path);
  }

  void commit() {
    for (const auto& [tmp, final_path] : staged_) {
      std::error_code ec;
      fs::rename(tmp, final_path, ec);
      if (ec) throw Error(ErrorKind::kIo, "cannot write " + final_path.string() + ": " + ec.message());
    }
    staged_.clear();
  }

 private:
  static fs::path staging_name(const fs::path& path) {
    // keep the extension so the writer picks the right format
    fs::path tmp = path;
    tmp.replace_filename("." + path.stem().string() + ".partial" + path.extension().string());
    return tmp;
  }

  std::vector<std::pair<fs::path, fs::path>> staged_;
};

ScribbleMask load_mask(const std::string& path) {
  return ScribbleMask::from_image(io::read_image(path));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidArgument, "invalid number in list: '" + item + "'");
    }
  }
  require(!out.empty(), "empty list");
  return out;
}

std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  require(!out.empty(), "empty method list");
  return out;
}

struct RestoreArgs {
  std::string input;
  std::string output;
  std::optional<std::string> config;
  std::map<std::string, std::string> settings;  // flag overrides, applied after --config
  std::optional<std::string> airlight;
  std::optional<std::string> dump_t;
  std::optional<std::string> dump_depth;
  std::optional<std::string> dump_structure;
  std::optional<std::string> dump_initial;
  bool verbose = false;
};

int run_restore(const RestoreArgs& args) {
  PipelineConfig cfg;
  if (args.config) load_config_file(cfg, *args.config);
  for (const auto& [key, value] : args.settings) apply_setting(cfg, key, value);
  if (args.airlight) cfg.airlight = parse_airlight_mode(*args.airlight, load_mask);
  cfg.validate();

  const Image input = io::read_image(args.input);
  const RestorationResult result = restore(input, cfg);

  OutputBatch out;
  out.image(args.output, result.latent);
  if (args.dump_t) out.image(*args.dump_t, result.transmission);
  if (args.dump_depth) out.image(*args.dump_depth, result.depth_log.d);
  if (args.dump_structure) out.image(*args.dump_structure, clamp01(result.structure.s));
  if (args.dump_initial) out.image(*args.dump_initial, result.initial);
  out.commit();

  if (args.verbose) {
    std::cerr << "airlight:";
    for (double b : result.airlight.b) std::cerr << ' ' << b;
    std::cerr << "\nstructure " << result.timings.structure_s << " s, transmission "
              << result.timings.transmission_s << " s, latent " << result.timings.latent_s
              << " s\n";
  }
  return 0;
}

struct BenchArgs {
  std::string scenes = "synthetic:5";
  std::string etas = "0.5,1.0,1.5";
  double noise = 10.0;
  std::uint64_t seed = 7;
  std::string output;
  int size = 256;
  std::string methods = "ours,ours-auto,naive-inversion,oracle-inversion";
  bool timing = false;
  bool linear_noise = false;
  bool linear_psnr = false;
  std::optional<std::string> config;
  double lambda_l = -1.0;
};

int run_bench(const BenchArgs& args) {
  std::vector<eval::FogScene> scenes;
  const std::string synthetic = "synthetic:";
  if (args.scenes.rfind(synthetic, 0) == 0) {
    int count = 0;
    try {
      count = std::stoi(args.scenes.substr(synthetic.size()));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidArgument, "invalid scene spec '" + args.scenes + "'");
    }
    require(count >= 1, "scene count must be >= 1");
    require(args.size >= 8, "scene size must be >= 8");
    scenes = eval::make_synthetic_scenes(count, args.size, args.seed);
  } else {
    scenes = eval::load_scene_directory(args.scenes);
  }

  eval::FogParams fp;
  fp.noise_sigma = args.noise;
  fp.seed = args.seed;
  fp.noise_domain = args.linear_noise ? eval::NoiseDomain::kLinear : eval::NoiseDomain::kDisplay;
  require(fp.noise_sigma >= 0.0, "noise must be >= 0");

  eval::BenchmarkOptions options;
  if (args.config) load_config_file(options.pipeline, *args.config);
  if (args.lambda_l >= 0.0) options.pipeline.latent.lambda_l = args.lambda_l;
  options.pipeline.validate();
  options.psnr_domain = args.linear_psnr ? eval::PsnrDomain::kLinear : eval::PsnrDomain::kDisplay;
  options.record_runtime = args.timing;

  const std::vector<double> etas = parse_list(args.etas);
  for (double eta : etas) require(eta >= 0.0, "eta must be >= 0");
  const auto rows = eval::run_benchmark(scenes, etas, fp, parse_names(args.methods), options);
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      std::cerr << "warning: " << row.scene << " eta=" << row.eta << " " << row.method << ": "
                << row.error << '\n';
    }
  }

  std::ostringstream csv;
  eval::write_csv(csv, rows);
  if (args.output.empty() || args.output == "-") {
    std::cout << csv.str();
  } else {
    OutputBatch out;
    out.text(args.output, csv.str());
    out.commit();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restore images degraded by fog, haze or turbid water"};
  app.require_subcommand(1);

  RestoreArgs ra;
  auto* restore_cmd = app.add_subcommand("restore", "restore a single image");
  restore_cmd->add_option("input", ra.input, "input image (png, ppm, pgm, pfm)")->required();
  restore_cmd->add_option("-o,--output", ra.output, "restored image")->required();
  restore_cmd->add_option("--config", ra.config, "key=value settings file");
  restore_cmd->add_option("--airlight", ra.airlight, "auto:<q> | scribble:<mask> | fixed:r,g,b");
  struct ValueFlag {
    const char* name;
    const char* key;
    const char* help;
  };
  static const ValueFlag value_flags[] = {
      {"--gamma", "gamma", "display gamma exponent (1 disables)"},
      {"--lambda", "lambda", "transmission smoothness weight"},
      {"--lambda-l", "lambda-l", "latent smoothness weight"},
      {"--window", "window", "neighbourhood radius of both solvers"},
      {"--patch", "patch", "patch radius of the latent weights"},
      {"--iters-d", "iters-d", "transmission iterations"},
      {"--iters-l", "iters-l", "latent iterations"},
      {"--eps", "eps", "transmission floor"},
      {"--sigma-s", "sigma-s", "structure weight bandwidth"},
      {"--sigma-t", "sigma-t", "latent transmission bandwidth"},
      {"--sigma-p", "sigma-p", "latent patch bandwidth"},
      {"--seed", "seed", "random seed"},
  };
  for (const ValueFlag& f : value_flags) {
    restore_cmd->add_option_function<std::string>(
        f.name, [&ra, key = std::string(f.key)](const std::string& v) { ra.settings[key] = v; },
        f.help);
  }
  static const ValueFlag bool_flags[] = {
      {"--underwater", "underwater", "restore intensity only and keep the input chroma"},
      {"--no-structure", "no-structure", "weight the transmission solver by the input itself"},
      {"--linear-out", "linear-out", "write linear radiance instead of re-applying gamma"},
      {"--refine", "refine", "re-estimate transmission from the restored image once"},
  };
  for (const ValueFlag& f : bool_flags) {
    restore_cmd->add_flag_callback(
        f.name, [&ra, key = std::string(f.key)] { ra.settings[key] = "1"; }, f.help);
  }
  restore_cmd->add_option("--dump-t", ra.dump_t, "write the transmission map");
  restore_cmd->add_option("--dump-depth", ra.dump_depth, "write log transmission (use .pfm)");
  restore_cmd->add_option("--dump-structure", ra.dump_structure, "write the structure map");
  restore_cmd->add_option("--dump-initial", ra.dump_initial, "write the direct inversion");
  restore_cmd->add_flag("-v,--verbose", ra.verbose, "print airlight and stage timings");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "run the synthetic fog benchmark");
  bench_cmd->add_option("--scenes", ba.scenes, "scene directory or synthetic:<count>")
      ->capture_default_str();
  bench_cmd->add_option("--etas", ba.etas, "comma-separated attenuation values")
      ->capture_default_str();
  bench_cmd->add_option("--noise", ba.noise, "noise std on the 0-255 scale")->capture_default_str();
  bench_cmd->add_option("--seed", ba.seed, "random seed")->capture_default_str();
  bench_cmd->add_option("-o,--output", ba.output, "CSV path (stdout if omitted)");
  bench_cmd->add_option("--size", ba.size, "synthetic scene size in pixels")->capture_default_str();
  bench_cmd->add_option("--methods", ba.methods, "comma-separated method names")
      ->capture_default_str();
  bench_cmd->add_option("--config", ba.config, "key=value solver settings");
  bench_cmd->add_option("--lambda-l", ba.lambda_l, "latent smoothness weight");
  bench_cmd->add_flag("--timing", ba.timing, "record wall-clock runtimes");
  bench_cmd->add_flag("--linear-noise", ba.linear_noise, "add noise to linear radiance");
  bench_cmd->add_flag("--linear-psnr", ba.linear_psnr, "measure PSNR on linear radiance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::kInvalidArgument);
  }

  try {
    if (*restore_cmd) return run_restore(ra);
    return run_bench(ba);
  } catch (const Error& e) {
    std::cerr << "descatter: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "descatter: " << e.what() << '\n';
    return exit_code(ErrorKind::kIo);
  }
}
