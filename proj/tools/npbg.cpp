// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit codes: 0 success, 2 usage or configuration,
// 3 I/O or invalid input, 4 numerical failure.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "npbg/error.hpp"
#include "npbg/pipeline.hpp"
#include "npbg/png_io.hpp"
#include "npbg/service.hpp"
#include "npbg/synthetic.hpp"
#include "npbg/view_selection.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = npbg::read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

struct FitArgs {
  std::string scene;
  std::string out;
  std::optional<double> alpha;
  std::optional<std::string> basis;
  std::optional<int> m;
  std::optional<int> vis_reduce;
  std::optional<int> levels;
  int threads = 1;
};

int run_fit(const FitArgs& args) {
  npbg::Scene scene = npbg::load_scene(args.scene);
  npbg::SceneConfig& config = scene.config;
  if (args.alpha) config.alpha = *args.alpha;
  if (args.basis) {
    config.basis_kind = *args.basis == "sh" ? npbg::BasisKind::kSphericalHarmonics : npbg::BasisKind::kMlp;
    if (!args.m) config.basis_size = config.basis_kind == npbg::BasisKind::kMlp ? 6 : 9;
  }
  if (args.m) config.basis_size = *args.m;
  if (args.vis_reduce) config.visibility_reduce = *args.vis_reduce;
  if (args.levels) config.pyramid_levels = *args.levels;
  npbg::validate(config);

  npbg::FitOptions options;
  options.threads = args.threads;
  npbg::FitReport report;
  const auto start = std::chrono::steady_clock::now();
  const npbg::SceneModel model = npbg::fit(scene.cloud, scene.cameras, config, options, &report);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  npbg::save_scene_model(model, args.out);
  std::cout << "fit " << report.views << " views, " << report.samples << " samples, " << report.alive_points << "/"
            << scene.cloud.size() << " points alive, " << report.fallback_solves << " fallback solves, " << seconds
            << " s -> " << args.out << "\n";
  return 0;
}

int run_render(const std::string& model_path, const std::string& camera_path, const std::string& out) {
  const npbg::SceneModel model = npbg::load_scene_model(model_path);
  const npbg::CameraView camera = npbg::parse_render_request(read_text(camera_path));
  npbg::write_png(out, npbg::render(model, camera));
  return 0;
}

int run_serve(const std::string& model_path, const std::string& host, int port, const std::string& static_dir) {
  auto model = std::make_shared<const npbg::SceneModel>(npbg::load_scene_model(model_path));
  npbg::ServiceOptions options;
  options.host = host;
  options.port = static_cast<std::uint16_t>(port);
  options.static_dir = static_dir;
  npbg::RenderService service(model, options);
  service.start();
  std::cout << "listening on http://" << host << ":" << service.port() << "\n" << std::flush;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  return 0;
}

int run_select(const std::string& scene_path, const std::string& target_path, int k, std::uint64_t seed) {
  const npbg::Scene scene = npbg::load_scene(scene_path, {.load_images = false});
  const npbg::CameraView target = npbg::parse_render_request(read_text(target_path));
  if (k < 0 || static_cast<std::size_t>(k) > scene.cameras.size()) {
    throw npbg::ConfigError("--k must be between 0 and the number of views (" +
                            std::to_string(scene.cameras.size()) + ")");
  }
  npbg::ViewScoreParams params;
  params.visibility_reduce = scene.config.visibility_reduce;
  const auto picks = npbg::select_views(scene.cameras, target, scene.cloud, static_cast<std::size_t>(k), seed, params);
  std::cout << "[";
  for (std::size_t i = 0; i < picks.size(); ++i) std::cout << (i ? ", " : "") << picks[i];
  std::cout << "]\n";
  return 0;
}

int run_make_synthetic(const std::string& out, int views, int width, int height) {
  npbg::SyntheticSceneParams params;
  params.views = views;
  params.width = width;
  params.height = height;
  npbg::write_scene(npbg::make_synthetic_scene(params), out);
  std::cout << "wrote " << views << "-view synthetic scene to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-based novel view synthesis: fit, render and serve scene models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Aggregate per-point descriptors from a scene");
  fit->add_option("--scene", fit_args.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_args.out, "Output model file")->required();
  fit->add_option("--alpha", fit_args.alpha, "Ridge regularizer (default 1)");
  fit->add_option("--basis", fit_args.basis, "Direction basis")->check(CLI::IsMember({"sh", "mlp"}));
  fit->add_option("--m", fit_args.m, "Basis size (mlp: any, sh: 1, 4 or 9)");
  fit->add_option("--vis-reduce", fit_args.vis_reduce, "Visibility grid reduction r");
  fit->add_option("--levels", fit_args.levels, "Pyramid levels T");
  fit->add_option("--threads", fit_args.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string model_path;
  std::string camera_path;
  std::string render_out;
  auto* render = app.add_subcommand("render", "Render a model from a camera");
  render->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  render->add_option("--camera", camera_path, "Camera JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "Output PNG")->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Serve renders over HTTP and WebSocket");
  serve->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0 picks a free one)")->required()->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--static-dir", static_dir, "Viewer assets served at /")->check(CLI::ExistingDirectory);

  std::string scene_path;
  std::string target_path;
  int k = 0;
  std::uint64_t seed = 0;
  auto* select = app.add_subcommand("select-views", "Sample source views relevant to a target camera");
  select->add_option("--scene", scene_path, "Scene JSON")->required()->check(CLI::ExistingFile);
  select->add_option("--target", target_path, "Target camera JSON")->required()->check(CLI::ExistingFile);
  select->add_option("--k", k, "Number of views")->required();
  select->add_option("--seed", seed, "RNG seed")->required();

  std::string synth_out;
  int synth_views = 5;
  int synth_width = 160;
  int synth_height = 120;
  auto* synth = app.add_subcommand("make-synthetic", "Write the analytic test scene");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--views", synth_views, "Number of views")->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_width, "Image width")->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_height, "Image height")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit) return run_fit(fit_args);
    if (*render) return run_render(model_path, camera_path, render_out);
    if (*serve) return run_serve(model_path, host, port, static_dir);
    if (*select) return run_select(scene_path, target_path, k, seed);
    if (*synth) return run_make_synthetic(synth_out, synth_views, synth_width, synth_height);
  } catch (const npbg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const npbg::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const npbg::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const npbg::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
