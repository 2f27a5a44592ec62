// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "npbg/pipeline.hpp"

namespace npbg {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::filesystem::path static_dir;  // served at "/" when set
};

struct ServiceMetrics {
  std::uint64_t frames_rendered = 0;
  double mean_render_ms = 0.0;
};

// HTTP + WebSocket front end over a read-only scene model.
//
//   GET  /info     model metadata JSON
//   GET  /metrics  {"frames_rendered", "mean_render_ms"}
//   POST /render   camera JSON (scene-file schema), optionally wrapped as
//                  {"camera": {...}, "width": W, "height": H} -> image/png
//   GET  /stream   WebSocket; text {"seq": n, "camera": {...}} in, binary
//                  [u32 LE seq][png] out, in request order
//   GET  /         static viewer assets from static_dir
//
// Each connection is served on its own thread; renders share the model.
class RenderService {
 public:
  RenderService(std::shared_ptr<const SceneModel> model, ServiceOptions options);
  ~RenderService();

  RenderService(const RenderService&) = delete;
  RenderService& operator=(const RenderService&) = delete;

  // Binds and starts accepting in the background. Throws IoError if the
  // address cannot be bound.
  void start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();

  std::uint16_t port() const;
  ServiceMetrics metrics() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Parses a /render body into a camera, applying width/height overrides by
// rescaling the intrinsics. Throws ParseError or ValidationError.
CameraView parse_render_request(const std::string& body);

}  // namespace npbg
