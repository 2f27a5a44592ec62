// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#include "npbg/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "json_camera.hpp"
#include "npbg/error.hpp"
#include "npbg/png_io.hpp"

namespace npbg {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

const char* basis_name(BasisKind kind) { return kind == BasisKind::kMlp ? "mlp" : "sh"; }

std::string content_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

Response make_response(const Request& req, http::status status, std::string body, std::string type) {
  Response res{status, req.version()};
  res.set(http::field::server, "npbg");
  res.set(http::field::content_type, type);
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_error(const Request& req, http::status status, const std::string& message) {
  return make_response(req, status, json{{"error", message}}.dump(), "application/json");
}

}  // namespace

CameraView parse_render_request(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("render request: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("render request: expected a JSON object");
  const bool wrapped = j.contains("camera");
  json cam = wrapped ? j.at("camera") : j;
  if (!cam.is_object()) throw ParseError("render request: 'camera' must be an object");
  cam.erase("image");

  std::optional<int> width;
  std::optional<int> height;
  try {
    if (wrapped && j.contains("width")) width = j.at("width").get<int>();
    if (wrapped && j.contains("height")) height = j.at("height").get<int>();
  } catch (const json::exception&) {
    throw ParseError("render request: width/height must be integers");
  }
  if ((width && *width <= 0) || (height && *height <= 0)) {
    throw ValidationError("render request: width/height must be positive");
  }
  if (width && !cam.contains("width")) cam["width"] = *width;
  if (height && !cam.contains("height")) cam["height"] = *height;

  CameraView camera = detail::camera_from_json(cam, {}, false);
  if (width && *width != camera.width) {
    const double s = static_cast<double>(*width) / camera.width;
    camera.fx *= s;
    camera.cx = (camera.cx + 0.5) * s - 0.5;
    camera.width = *width;
  }
  if (height && *height != camera.height) {
    const double s = static_cast<double>(*height) / camera.height;
    camera.fy *= s;
    camera.cy = (camera.cy + 0.5) * s - 0.5;
    camera.height = *height;
  }
  if (camera.width > 8192 || camera.height > 8192) throw ValidationError("render request: image too large");
  return camera;
}

struct RenderService::Impl {
  std::shared_ptr<const SceneModel> model;
  ServiceOptions options;

  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::thread io_thread;
  std::uint16_t bound_port = 0;

  std::mutex connections_mutex;
  std::uint64_t next_id = 0;
  std::map<std::uint64_t, std::shared_ptr<tcp::socket>> sockets;
  std::map<std::uint64_t, std::thread> threads;
  std::vector<std::thread> finished;

  mutable std::mutex metrics_mutex;
  std::uint64_t frames = 0;
  double total_ms = 0.0;

  std::mutex state_mutex;
  std::condition_variable stopped_cv;
  bool running = false;

  std::vector<std::uint8_t> render_png(const CameraView& camera) {
    const auto start = std::chrono::steady_clock::now();
    const Image image = render(*model, camera);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    {
      std::lock_guard lock(metrics_mutex);
      ++frames;
      total_ms += ms;
    }
    return encode_png(image);
  }

  json info() const {
    const SceneModel& m = *model;
    return json{{"points", m.cloud.size()},
                {"m", m.field.m},
                {"c", m.field.c},
                {"basis", basis_name(m.basis().kind())},
                {"pyramid_levels", m.config.pyramid_levels},
                {"world_up", {m.config.world_up.x(), m.config.world_up.y(), m.config.world_up.z()}}};
  }

  Response serve_static(const Request& req) {
    std::string target(req.target());
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/") target = "/index.html";
    if (options.static_dir.empty()) {
      if (target != "/index.html") return json_error(req, http::status::not_found, "not found");
      return make_response(req, http::status::ok,
                           "<!doctype html><title>npbg</title><p>Render service running. Viewer assets are not "
                           "installed; use /info, /render, /stream and /metrics.</p>",
                           "text/html");
    }
    if (target.find("..") != std::string::npos) return json_error(req, http::status::bad_request, "bad path");
    const std::filesystem::path path = options.static_dir / target.substr(1);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return json_error(req, http::status::not_found, "not found");
    std::ifstream in(path, std::ios::binary);
    if (!in) return json_error(req, http::status::not_found, "not found");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return make_response(req, http::status::ok, std::move(body), content_type(path));
  }

  Response handle(const Request& req) {
    const std::string target(req.target());
    try {
      if (target == "/info" && req.method() == http::verb::get) {
        return make_response(req, http::status::ok, info().dump(), "application/json");
      }
      if (target == "/metrics" && req.method() == http::verb::get) {
        const ServiceMetrics m = metrics();
        return make_response(req, http::status::ok,
                             json{{"frames_rendered", m.frames_rendered}, {"mean_render_ms", m.mean_render_ms}}.dump(),
                             "application/json");
      }
      if (target == "/render") {
        if (req.method() != http::verb::post) {
          return json_error(req, http::status::method_not_allowed, "use POST");
        }
        const CameraView camera = parse_render_request(req.body());
        const auto png = render_png(camera);
        return make_response(req, http::status::ok, std::string(png.begin(), png.end()), "image/png");
      }
      if (req.method() == http::verb::get) return serve_static(req);
      return json_error(req, http::status::not_found, "unknown endpoint");
    } catch (const ParseError& e) {
      return json_error(req, http::status::bad_request, e.what());
    } catch (const ValidationError& e) {
      return json_error(req, http::status::bad_request, e.what());
    } catch (const IoError& e) {
      return json_error(req, http::status::bad_request, e.what());
    } catch (const std::exception& e) {
      return json_error(req, http::status::internal_server_error, e.what());
    }
  }

  void stream(tcp::socket& socket, const Request& req) {
    websocket::stream<tcp::socket&> ws(socket);
    beast::error_code ec;
    ws.accept(req, ec);
    if (ec) return;
    for (;;) {
      beast::flat_buffer buffer;
      ws.read(buffer, ec);
      if (ec) return;
      const std::string text = beast::buffers_to_string(buffer.data());
      std::uint32_t seq = 0;
      std::vector<std::uint8_t> frame;
      std::string error;
      try {
        const json msg = json::parse(text);
        if (!msg.is_object() || !msg.contains("seq") || !msg.contains("camera")) {
          throw ParseError("stream message needs 'seq' and 'camera'");
        }
        seq = msg.at("seq").get<std::uint32_t>();
        const CameraView camera = parse_render_request(json{{"camera", msg.at("camera")}}.dump());
        const auto png = render_png(camera);
        frame.resize(4 + png.size());
        for (int i = 0; i < 4; ++i) frame[i] = static_cast<std::uint8_t>((seq >> (8 * i)) & 0xffu);
        std::copy(png.begin(), png.end(), frame.begin() + 4);
      } catch (const std::exception& e) {
        error = e.what();
      }
      if (error.empty()) {
        ws.binary(true);
        ws.write(net::buffer(frame), ec);
      } else {
        ws.text(true);
        ws.write(net::buffer(json{{"seq", seq}, {"error", error}}.dump()), ec);
      }
      if (ec) return;
    }
  }

  void session(std::shared_ptr<tcp::socket> socket) {
    beast::flat_buffer buffer;
    beast::error_code ec;
    for (;;) {
      Request req;
      http::read(*socket, buffer, req, ec);
      if (ec) break;
      if (websocket::is_upgrade(req)) {
        if (req.target() == "/stream") {
          stream(*socket, req);
        } else {
          Response res = json_error(req, http::status::not_found, "unknown websocket endpoint");
          http::write(*socket, res, ec);
        }
        break;
      }
      Response res = handle(req);
      http::write(*socket, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    socket->shutdown(tcp::socket::shutdown_send, ec);
  }

  void accept_next() {
    acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      auto shared = std::make_shared<tcp::socket>(std::move(socket));
      {
        std::lock_guard lock(connections_mutex);
        const std::uint64_t id = next_id++;
        sockets[id] = shared;
        threads[id] = std::thread([this, id, shared] {
          session(shared);
          std::lock_guard inner(connections_mutex);
          sockets.erase(id);
          auto it = threads.find(id);
          if (it != threads.end()) {
            finished.push_back(std::move(it->second));
            threads.erase(it);
          }
        });
        // Reap sessions that already ended.
        for (auto& t : finished) {
          if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
        }
        finished.clear();
      }
      accept_next();
    });
  }

  ServiceMetrics metrics() const {
    std::lock_guard lock(metrics_mutex);
    return {frames, frames == 0 ? 0.0 : total_ms / static_cast<double>(frames)};
  }
};

RenderService::RenderService(std::shared_ptr<const SceneModel> model, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (!model) throw PreconditionError("render service needs a model");
  impl_->model = std::move(model);
  impl_->options = std::move(options);
}

RenderService::~RenderService() { stop(); }

void RenderService::start() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.state_mutex);
    if (s.running) return;
  }
  beast::error_code ec;
  const auto address = net::ip::make_address(s.options.host, ec);
  if (ec) throw IoError("invalid bind address '" + s.options.host + "'");
  const tcp::endpoint endpoint(address, s.options.port);
  s.acceptor.emplace(s.ioc);
  s.acceptor->open(endpoint.protocol(), ec);
  if (!ec) s.acceptor->set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor->bind(endpoint, ec);
  if (!ec) s.acceptor->listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    s.acceptor.reset();
    throw IoError("cannot bind " + s.options.host + ":" + std::to_string(s.options.port) + ": " + ec.message());
  }
  s.bound_port = s.acceptor->local_endpoint().port();
  s.ioc.restart();
  s.accept_next();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  std::lock_guard lock(s.state_mutex);
  s.running = true;
}

void RenderService::stop() {
  Impl& s = *impl_;
  {
    std::lock_guard lock(s.state_mutex);
    if (!s.running) return;
    s.running = false;
  }
  net::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor->close(ec);
  });
  if (s.io_thread.joinable()) s.io_thread.join();
  s.ioc.stop();

  std::map<std::uint64_t, std::thread> live;
  std::vector<std::thread> done;
  {
    std::lock_guard lock(s.connections_mutex);
    for (auto& [id, socket] : s.sockets) {
      beast::error_code ec;
      socket->shutdown(tcp::socket::shutdown_both, ec);
    }
    live.swap(s.threads);
    done.swap(s.finished);
  }
  for (auto& [id, t] : live) {
    if (t.joinable()) t.join();
  }
  for (auto& t : done) {
    if (t.joinable()) t.join();
  }
  {
    std::lock_guard lock(s.connections_mutex);
    for (auto& t : s.finished) {
      if (t.joinable()) t.join();
    }
    s.finished.clear();
    s.sockets.clear();
  }
  s.acceptor.reset();
  s.stopped_cv.notify_all();
}

void RenderService::wait() {
  std::unique_lock lock(impl_->state_mutex);
  impl_->stopped_cv.wait(lock, [this] { return !impl_->running; });
}

std::uint16_t RenderService::port() const { return impl_->bound_port; }

ServiceMetrics RenderService::metrics() const { return impl_->metrics(); }

}  // namespace npbg
