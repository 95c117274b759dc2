// SPDX-License-Identifier: Apache-2.0

#include "service.hpp"

#include "scene_json.hpp"

#include "tprt/image.hpp"

#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <bit>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace tprt::app {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

void split_bind_address(const std::string& bind, std::string& host, unsigned short& port) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size())
    throw InvalidArgument("bind address must look like host:port, got '" + bind + "'");
  host = bind.substr(0, colon);
  const std::string p = bind.substr(colon + 1);
  int value = -1;
  try {
    std::size_t used = 0;
    value = std::stoi(p, &used);
    if (used != p.size()) value = -1;
  } catch (const std::exception&) {
    value = -1;
  }
  if (value < 0 || value > 65535) throw InvalidArgument("invalid port in bind address '" + bind + "'");
  port = static_cast<unsigned short>(value);
}

namespace {

using Bytes = std::vector<std::uint8_t>;
using SharedBytes = std::shared_ptr<const Bytes>;

enum class FrameFormat { U8, F16, F32 };

struct Snapshot {
  std::uint64_t seq = 0;
  ChannelVectors radiance;
  Camera camera;
  OpticalMaterial material;
  Json lights;
  StageTimings timings;
  FrameStats stats;
  bool edit_path = false;
};

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

SharedBytes tagged_json(std::uint8_t tag, const Json& body) {
  const std::string text = body.dump();
  auto out = std::make_shared<Bytes>();
  out->reserve(text.size() + 1);
  out->push_back(tag);
  out->insert(out->end(), text.begin(), text.end());
  return out;
}

Json stats_json(const Snapshot& s, const Json& id) {
  Json timings = {{"irradiance", s.timings.irradiance},
                  {"transfer", s.timings.transfer},
                  {"weighting", s.timings.weighting},
                  {"inverse_wavelet", s.timings.inverse_wavelet},
                  {"raster", s.timings.raster}};
  return {{"seq", s.seq},
          {"id", id},
          {"edit_path", s.edit_path},
          {"timings_ms", timings},
          {"irradiance_energy", {s.stats.irradiance_energy[0], s.stats.irradiance_energy[1], s.stats.irradiance_energy[2]}},
          {"irradiance_terms", s.stats.irradiance_terms},
          {"transfer",
           {{"step1_energy", s.stats.transfer.step1_energy},
            {"step2_energy", s.stats.transfer.step2_energy},
            {"step1_nnz", s.stats.transfer.step1_nnz},
            {"stored_nnz", s.stats.transfer.stored_nnz}}},
          {"material_clamped", s.stats.material_clamped},
          {"material", to_json(s.material)}};
}

std::string content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

std::map<std::string, std::string> parse_query(const std::string& q) {
  std::map<std::string, std::string> out;
  std::stringstream ss(q);
  std::string item;
  while (std::getline(ss, item, '&')) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) out.emplace(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

constexpr std::string_view kPlaceholder =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>tprt</title></head><body>"
    "<p>tprt service is running. No editor bundle is configured; start with --ui-dir to serve one.</p>"
    "<p>Endpoints: /health, /scene, /mesh, /frame.png, WebSocket /session.</p></body></html>";

}  // namespace

class WsSession;

struct Service::Impl : std::enable_shared_from_this<Service::Impl> {
  struct Command {
    std::weak_ptr<WsSession> origin;
    Json body;
  };

  ServiceOptions options;
  std::unique_ptr<Relighter> relighter;
  std::shared_ptr<const SceneAssets> assets;

  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> io_threads;
  std::thread scene_thread;
  std::atomic<bool> running{false};

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<Command> queue;
  bool stopping = false;

  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const Snapshot> snapshot;

  std::mutex sessions_mutex;
  std::vector<std::weak_ptr<WsSession>> sessions;

  Json scene_static;
  std::string mesh_blob;

  std::shared_ptr<const Snapshot> latest() const {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  }

  void publish(std::uint64_t seq) {
    auto s = std::make_shared<Snapshot>();
    const auto& f = relighter->frame();
    s->seq = seq;
    s->radiance = f.radiance;
    s->camera = relighter->camera();
    s->material = relighter->material();
    s->lights = to_json(relighter->lights());
    s->timings = f.timings;
    s->stats = f.stats;
    s->edit_path = f.edit_path;
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(s);
  }

  SharedBytes encode_frame(const Snapshot& s, FrameFormat format, double exposure) const {
    const auto& mesh = assets->mesh;
    const auto& samples = assets->samples;
    const std::size_t v_count = mesh.vertices.size();
    std::vector<float> rgb(v_count * 3, 0.0F);
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (int c = 0; c < kChannels; ++c)
        rgb[samples.source_vertex[i] * 3 + static_cast<std::size_t>(c)] =
            static_cast<float>(s.radiance[static_cast<std::size_t>(c)][i]);
    auto out = std::make_shared<Bytes>();
    out->reserve(9 + rgb.size() * 4);
    out->push_back(kFrameTag);
    put_u32(*out, static_cast<std::uint32_t>(s.seq));
    put_u32(*out, static_cast<std::uint32_t>(v_count));
    for (float v : rgb) {
      if (format == FrameFormat::U8) {
        out->push_back(tone_map(v, exposure));
      } else if (format == FrameFormat::F32) {
        put_u32(*out, std::bit_cast<std::uint32_t>(v));
      } else {
        const auto bits = std::bit_cast<std::uint16_t>(Eigen::half(v));
        out->push_back(static_cast<std::uint8_t>(bits & 0xFF));
        out->push_back(static_cast<std::uint8_t>(bits >> 8));
      }
    }
    return out;
  }

  void enqueue(std::weak_ptr<WsSession> origin, Json body) {
    {
      std::lock_guard lock(queue_mutex);
      queue.push_back({std::move(origin), std::move(body)});
    }
    queue_cv.notify_one();
  }

  void apply(const Json& body);
  void scene_loop();
  void broadcast(const std::shared_ptr<const Snapshot>& s, const Json& id);
  void register_session(const std::shared_ptr<WsSession>& s);
  void do_accept();
  http::response<http::string_body> handle(const http::request<http::string_body>& req) const;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<Service::Impl> service)
      : ws_(std::move(socket)), service_(std::move(service)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.binary(true);
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  /// Thread-safe: hands a message to the session's executor.
  void send(SharedBytes data, bool is_frame) {
    net::post(ws_.get_executor(), [self = shared_from_this(), data = std::move(data), is_frame]() mutable {
      self->enqueue_message(std::move(data), is_frame);
    });
  }

  void send_frame(const Snapshot& s, const Json& id) {
    auto service = service_.lock();
    if (!service) return;
    send(service->encode_frame(s, format_.load(), exposure_.load()), true);
    send(tagged_json(kStatsTag, stats_json(s, id)), false);
  }

  void send_error(const std::string& message, const Json& id) {
    send(tagged_json(kErrorTag, Json{{"error", message}, {"id", id}}), false);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    auto service = service_.lock();
    if (!service) return;
    service->register_session(shared_from_this());
    if (auto s = service->latest()) send_frame(*s, nullptr);
    do_read();
  }

  void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;  // closed or failed; the session dies with its last handler
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    Json id = nullptr;
    try {
      Json body = Json::parse(text);
      if (!body.is_object() || !body.contains("type") || !body.at("type").is_string())
        throw InvalidArgument("command must be a JSON object with a string 'type'");
      if (body.contains("id")) id = body.at("id");
      if (body.at("type") == "set_format") {
        handle_format(body, id);
      } else if (auto service = service_.lock()) {
        service->enqueue(weak_from_this(), std::move(body));
      }
    } catch (const Json::exception& e) {
      send_error(std::string("malformed JSON: ") + e.what(), id);
    } catch (const std::exception& e) {
      send_error(e.what(), id);
    }
    do_read();
  }

  void handle_format(const Json& body, const Json& id) {
    if (body.contains("format")) {
      const auto f = body.at("format").get<std::string>();
      if (f == "u8") {
        format_ = FrameFormat::U8;
      } else if (f == "f16") {
        format_ = FrameFormat::F16;
      } else if (f == "f32") {
        format_ = FrameFormat::F32;
      } else {
        throw InvalidArgument("format must be 'u8', 'f16' or 'f32'");
      }
    }
    if (body.contains("exposure")) {
      const double e = body.at("exposure").get<double>();
      if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("exposure must be positive");
      exposure_ = e;
    }
    if (auto service = service_.lock())
      if (auto s = service->latest()) send_frame(*s, id);
  }

  void enqueue_message(SharedBytes data, bool is_frame) {
    auto service = service_.lock();
    const std::size_t limit = service ? std::max<std::size_t>(2, service->options.send_queue_limit) : 8;
    if (queue_.size() >= limit) {
      // Drop the oldest frame that is not already being written.
      for (std::size_t i = writing_ ? 1 : 0; i < queue_.size(); ++i) {
        if (queue_[i].frame) {
          queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
    }
    queue_.push_back({std::move(data), is_frame});
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.async_write(net::buffer(*queue_.front().data),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  struct Outgoing {
    SharedBytes data;
    bool frame = false;
  };

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::weak_ptr<Service::Impl> service_;
  std::deque<Outgoing> queue_;
  bool writing_ = false;
  std::atomic<FrameFormat> format_{FrameFormat::U8};
  std::atomic<double> exposure_{1.0};
};

void Service::Impl::register_session(const std::shared_ptr<WsSession>& s) {
  std::lock_guard lock(sessions_mutex);
  std::erase_if(sessions, [](const auto& w) { return w.expired(); });
  sessions.push_back(s);
}

void Service::Impl::broadcast(const std::shared_ptr<const Snapshot>& s, const Json& id) {
  std::vector<std::shared_ptr<WsSession>> live;
  {
    std::lock_guard lock(sessions_mutex);
    for (const auto& w : sessions)
      if (auto p = w.lock()) live.push_back(std::move(p));
  }
  for (const auto& p : live) p->send_frame(*s, id);
}

void Service::Impl::apply(const Json& body) {
  const auto type = body.at("type").get<std::string>();
  if (type == "set_material") {
    relighter->set_material(material_from_json(body, relighter->material()));
  } else if (type == "set_light" || type == "set_lights") {
    if (!body.contains("lights")) throw InvalidArgument("set_light needs a 'lights' array");
    relighter->set_lights(lights_from_json(body.at("lights"), options.asset_dir));
  } else if (type == "set_camera") {
    relighter->set_camera(camera_from_json(body, relighter->camera()));
  } else {
    throw InvalidArgument("unknown command type '" + type + "'");
  }
}

void Service::Impl::scene_loop() {
  std::uint64_t seq = latest() ? latest()->seq : 0;
  while (true) {
    Command cmd;
    {
      std::unique_lock lock(queue_mutex);
      queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
      if (stopping) break;
      cmd = std::move(queue.front());
      queue.pop_front();
    }
    const Json id = cmd.body.contains("id") ? cmd.body.at("id") : Json(nullptr);
    try {
      apply(cmd.body);
    } catch (const std::exception& e) {
      if (auto origin = cmd.origin.lock()) origin->send_error(e.what(), id);
      continue;
    }
    publish(++seq);
    broadcast(latest(), id);
  }
}

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::weak_ptr<Service::Impl> service)
      : stream_(std::move(socket)), service_(std::move(service)) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    auto service = service_.lock();
    if (!service) return;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_) && target == "/session") {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), service)->run(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(service->handle(req_));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
      if (wec) return;
      if (res->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::weak_ptr<Service::Impl> service_;
};

}  // namespace

void Service::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [weak = weak_from_this()](beast::error_code ec, tcp::socket socket) {
    auto self = weak.lock();
    if (!self) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), weak)->run();
    if (self->acceptor.is_open()) self->do_accept();
  });
}

http::response<http::string_body> Service::Impl::handle(const http::request<http::string_body>& req) const {
  auto respond = [&](http::status status, std::string type, std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::server, "tprt");
    res.set(http::field::content_type, type);
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head)
    return respond(http::status::method_not_allowed, "text/plain", "only GET is supported\n");

  const std::string full(req.target());
  const auto qpos = full.find('?');
  const std::string path = full.substr(0, qpos);
  const auto query = parse_query(qpos == std::string::npos ? std::string() : full.substr(qpos + 1));

  try {
    if (path == "/health") return respond(http::status::ok, "text/plain", "ok");
    if (path == "/scene") {
      Json j = scene_static;
      if (auto s = latest()) {
        j["seq"] = s->seq;
        j["material"] = to_json(s->material);
        j["camera"] = to_json(s->camera);
        j["lights"] = s->lights;
      }
      return respond(http::status::ok, "application/json", j.dump());
    }
    if (path == "/mesh") return respond(http::status::ok, "application/octet-stream", mesh_blob);
    if (path == "/frame.png") {
      RasterOptions ro;
      if (query.contains("width")) ro.width = std::stoi(query.at("width"));
      if (query.contains("height")) ro.height = std::stoi(query.at("height"));
      if (query.contains("exposure")) ro.exposure = std::stod(query.at("exposure"));
      if (ro.width < 1 || ro.height < 1 || ro.width > 4096 || ro.height > 4096)
        throw InvalidArgument("image size must lie in [1, 4096]");
      auto s = latest();
      const auto img = render_image(assets->mesh, assets->samples, s->radiance, s->camera, ro);
      const auto png = encode_png(img);
      return respond(http::status::ok, "image/png", std::string(png.begin(), png.end()));
    }
    if (options.ui_dir.empty()) {
      if (path == "/" || path == "/index.html") return respond(http::status::ok, "text/html; charset=utf-8", std::string(kPlaceholder));
      return respond(http::status::not_found, "text/plain", "not found\n");
    }
    if (path.find("..") != std::string::npos || path.empty() || path[0] != '/')
      return respond(http::status::bad_request, "text/plain", "bad path\n");
    std::filesystem::path file = options.ui_dir / (path == "/" ? std::string("index.html") : path.substr(1));
    if (std::filesystem::is_directory(file)) file /= "index.html";
    std::ifstream in(file, std::ios::binary);
    if (!in) return respond(http::status::not_found, "text/plain", "not found\n");
    std::stringstream ss;
    ss << in.rdbuf();
    return respond(http::status::ok, content_type(file), ss.str());
  } catch (const std::exception& e) {
    return respond(http::status::bad_request, "text/plain", std::string(e.what()) + "\n");
  }
}

Service::Service(std::unique_ptr<Relighter> relighter, ServiceOptions options) : impl_(std::make_shared<Impl>()) {
  if (!relighter) throw InvalidArgument("service needs a relighter");
  impl_->options = std::move(options);
  impl_->assets = relighter->shared_assets();
  impl_->relighter = std::move(relighter);

  const auto& a = *impl_->assets;
  const auto [lo, hi] = a.mesh.bounds();
  const auto st = a.transfer.stats();
  const auto& box = a.basis.box;
  impl_->scene_static = {
      {"vertices", a.mesh.vertices.size()},
      {"triangles", a.mesh.triangles.size()},
      {"samples", a.samples.size()},
      {"bbox", {{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}}},
      {"mesh_hash", to_hex(a.mesh.hash())},
      {"K", a.basis.count()},
      {"parts", a.atlas.part_count()},
      {"level", a.atlas.level()},
      {"ambient", a.ambient.has_value()},
      {"sigma_box",
       {{"sigma_s_prime", {box.sigma_s_prime_min, box.sigma_s_prime_max}}, {"sigma_a", {box.sigma_a_min, box.sigma_a_max}}}},
      {"compression",
       {{"step1_terms", a.transfer.step1_terms()},
        {"step2_fraction", a.transfer.step2_fraction()},
        {"step1_energy", st.step1_energy},
        {"step2_energy", st.step2_energy},
        {"step1_nnz", st.step1_nnz},
        {"stored_nnz", st.stored_nnz},
        {"step2_ratio", st.step2_ratio()}}},
      {"presets", [] {
         Json p = Json::object();
         for (const auto& preset : material_presets()) p[preset.name] = to_json(preset.material);
         return p;
       }()}};

  // GET /mesh: u32 vertex count, u32 triangle count, f32 positions, f32 normals, u32 indices.
  Bytes blob;
  put_u32(blob, static_cast<std::uint32_t>(a.mesh.vertices.size()));
  put_u32(blob, static_cast<std::uint32_t>(a.mesh.triangles.size()));
  auto put_f32 = [&](double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    put_u32(blob, bits);
  };
  for (const auto& v : a.mesh.vertices) {
    put_f32(v.x());
    put_f32(v.y());
    put_f32(v.z());
  }
  for (const auto& n : a.mesh.normals) {
    put_f32(n.x());
    put_f32(n.y());
    put_f32(n.z());
  }
  for (const auto& t : a.mesh.triangles)
    for (auto i : t) put_u32(blob, i);
  impl_->mesh_blob.assign(blob.begin(), blob.end());
  impl_->publish(0);
}

Service::~Service() { stop(); }

void Service::start() {
  if (impl_->running.exchange(true)) return;
  std::string host;
  unsigned short port = 0;
  split_bind_address(impl_->options.bind, host, port);
  beast::error_code ec;
  const auto address = net::ip::make_address(host, ec);
  if (ec) {
    impl_->running = false;
    throw InvalidArgument("invalid bind host '" + host + "': " + ec.message());
  }
  const tcp::endpoint endpoint(address, port);
  auto fail = [&](const char* what) {
    impl_->running = false;
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    throw IoError(std::string("cannot ") + what + " " + impl_->options.bind + ": " + ec.message());
  };
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (ec) fail("open");
  impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (ec) fail("configure");
  impl_->acceptor.bind(endpoint, ec);
  if (ec) fail("bind");
  impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) fail("listen on");

  impl_->do_accept();
  impl_->scene_thread = std::thread([impl = impl_] { impl->scene_loop(); });
  for (int i = 0; i < std::max(1, impl_->options.io_threads); ++i)
    impl_->io_threads.emplace_back([impl = impl_] { impl->ioc.run(); });
}

unsigned short Service::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

void Service::run_until_signal() {
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](beast::error_code, int) {});
  signals_ctx.run();
  stop();
}

void Service::stop() {
  if (!impl_->running.exchange(false)) return;
  {
    std::lock_guard lock(impl_->queue_mutex);
    impl_->stopping = true;
  }
  impl_->queue_cv.notify_all();
  if (impl_->scene_thread.joinable()) impl_->scene_thread.join();
  net::post(impl_->ioc, [impl = impl_] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  for (auto& t : impl_->io_threads)
    if (t.joinable()) t.join();
  impl_->io_threads.clear();
}

}  // namespace tprt::app
