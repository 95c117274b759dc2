// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"
#include "scene_json.hpp"
#include "service.hpp"

#include "support/scenes.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <bit>
#include <cstring>

using namespace tprt;
using namespace tprt::app;
namespace beast = boost::beast;
namespace http = beast::http;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::shared_ptr<const SceneAssets> assets() {
  static const auto a = [] {
    scenes::SceneSpec spec;
    spec.k = 4;
    spec.step1_fraction = 0.05;
    return scenes::make_assets(make_icosphere(3, 10.0), spec);
  }();
  return a;
}

Camera front() {
  Camera c;
  c.position = {0.0, 0.0, 60.0};
  return c;
}

std::unique_ptr<Relighter> relighter() {
  return std::make_unique<Relighter>(assets(), scenes::marble(), scenes::key_light(), front());
}

struct Running {
  std::unique_ptr<Service> service;
  unsigned short port = 0;

  explicit Running(std::size_t send_queue = 8) {
    ServiceOptions o;
    o.bind = "127.0.0.1:0";
    o.send_queue_limit = send_queue;
    service = std::make_unique<Service>(relighter(), o);
    service->start();
    port = service->port();
  }
};

http::response<http::string_body> get(unsigned short port, const std::string& target) {
  net::io_context ioc;
  beast::tcp_stream stream(ioc);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  http::request<http::string_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "localhost");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t offset) {
  std::uint32_t v = 0;
  std::memcpy(&v, b.data() + offset, 4);
  return v;
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    ws_.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    ws_.handshake("localhost", "/session");
    ws_.text(true);
  }

  void send(const Json& j) { ws_.write(net::buffer(j.dump())); }

  std::vector<std::uint8_t> read() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    const auto data = buffer.data();
    const auto* p = static_cast<const std::uint8_t*>(data.data());
    return {p, p + data.size()};
  }

  static Json body(const std::vector<std::uint8_t>& msg) { return Json::parse(msg.begin() + 1, msg.end()); }

  /// Reads the frame and stats pair that follows every published state.
  std::pair<std::vector<std::uint8_t>, Json> read_frame() {
    auto frame = read();
    EXPECT_EQ(frame.at(0), kFrameTag);
    auto stats = read();
    EXPECT_EQ(stats.at(0), kStatsTag);
    return {std::move(frame), body(stats)};
  }

 private:
  net::io_context ioc_;
  beast::websocket::stream<tcp::socket> ws_;
};

}  // namespace

TEST(Service, HttpEndpoints) {
  Running r;
  ASSERT_NE(r.port, 0);
  const auto health = get(r.port, "/health");
  EXPECT_EQ(health.result(), http::status::ok);
  EXPECT_EQ(health.body(), "ok");

  const auto scene = Json::parse(get(r.port, "/scene").body());
  EXPECT_EQ(scene.at("vertices"), assets()->mesh.vertices.size());
  EXPECT_EQ(scene.at("K"), 4);
  EXPECT_EQ(scene.at("seq"), 0);
  EXPECT_EQ(scene.at("mesh_hash"), to_hex(assets()->mesh.hash()));

  const auto mesh = get(r.port, "/mesh").body();
  const std::vector<std::uint8_t> blob(mesh.begin(), mesh.end());
  const std::size_t v = assets()->mesh.vertices.size(), t = assets()->mesh.triangles.size();
  EXPECT_EQ(u32_at(blob, 0), v);
  EXPECT_EQ(u32_at(blob, 4), t);
  EXPECT_EQ(blob.size(), 8 + v * 24 + t * 12);

  const auto png = get(r.port, "/frame.png?width=32&height=24");
  EXPECT_EQ(png.result(), http::status::ok);
  EXPECT_EQ(png[http::field::content_type], "image/png");
  EXPECT_EQ(png.body().substr(1, 3), "PNG");
  EXPECT_EQ(get(r.port, "/frame.png?width=0").result(), http::status::bad_request);
  EXPECT_EQ(get(r.port, "/nope").result(), http::status::not_found);
  EXPECT_EQ(get(r.port, "/").result(), http::status::ok);
}

TEST(Service, InitialFrameThenCommandsAdvanceSeq) {
  Running r;
  Client c(r.port);
  auto [frame, stats] = c.read_frame();
  EXPECT_EQ(u32_at(frame, 1), 0u);
  EXPECT_EQ(u32_at(frame, 5), assets()->mesh.vertices.size());
  EXPECT_EQ(frame.size(), 9 + 3 * assets()->mesh.vertices.size());
  EXPECT_EQ(stats.at("seq"), 0);

  c.send({{"type", "set_material"}, {"id", 7}, {"sigma_a", 0.01}});
  auto [f1, s1] = c.read_frame();
  EXPECT_EQ(u32_at(f1, 1), 1u);
  EXPECT_EQ(s1.at("id"), 7);
  EXPECT_EQ(s1.at("edit_path"), true);
  EXPECT_EQ(s1.at("timings_ms").at("irradiance"), 0.0);

  c.send({{"type", "set_camera"}, {"position", {50.0, 0.0, 20.0}}});
  c.send({{"type", "set_lights"}, {"lights", Json::array({light_spec_to_json("point:0,30,0:1500")})}});
  EXPECT_EQ(c.read_frame().second.at("seq"), 2);
  const auto last = c.read_frame().second;
  EXPECT_EQ(last.at("seq"), 3);
  EXPECT_EQ(last.at("edit_path"), false);
}

TEST(Service, ErrorsGoOnlyToTheSender) {
  Running r;
  Client a(r.port), b(r.port);
  a.read_frame();
  b.read_frame();
  a.send({{"type", "set_material"}, {"id", "bad"}, {"sigma_a", -1.0}});
  const auto err = a.read();
  ASSERT_EQ(err.at(0), kErrorTag);
  EXPECT_EQ(Client::body(err).at("id"), "bad");
  a.send(Json{{"type", "no_such_command"}});
  EXPECT_EQ(a.read().at(0), kErrorTag);
  a.send(Json::array({1, 2}));
  EXPECT_EQ(a.read().at(0), kErrorTag);
  // The failed commands published nothing: b's next message is the frame for seq 1.
  b.send({{"type", "set_material"}, {"sigma_s_prime", 1.5}});
  EXPECT_EQ(b.read_frame().second.at("seq"), 1);
  EXPECT_EQ(a.read_frame().second.at("seq"), 1);
}

TEST(Service, F32FramesMatchALocalRelighter) {
  Running r;
  Client c(r.port);
  c.read_frame();
  c.send({{"type", "set_format"}, {"format", "f32"}});
  auto [same, s0] = c.read_frame();
  EXPECT_EQ(s0.at("seq"), 0);
  c.send({{"type", "set_material"}, {"preset", "skin"}});
  const auto frame = c.read_frame().first;

  auto local = relighter();
  local->set_material(preset_material("skin"));
  const auto& a = *assets();
  ASSERT_EQ(frame.size(), 9 + 12 * a.mesh.vertices.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    for (int ch = 0; ch < kChannels; ++ch) {
      const auto got = std::bit_cast<float>(u32_at(frame, 9 + 4 * (a.samples.source_vertex[i] * 3 + static_cast<std::size_t>(ch))));
      const double want = local->frame().radiance[static_cast<std::size_t>(ch)][i];
      EXPECT_NEAR(got, want, 1e-6 * std::max(1.0, std::abs(want)));
    }
  c.send({{"type", "set_format"}, {"format", "f16"}});
  EXPECT_EQ(c.read_frame().first.size(), 9 + 6 * a.mesh.vertices.size());
  c.send({{"type", "set_format"}, {"format", "png"}});
  EXPECT_EQ(c.read().at(0), kErrorTag);
}

TEST(Service, ConcurrentClientsSeeOneOrder) {
  // Each edit queues a frame and a stats message; room for all of them so no frame is dropped.
  Running r(64);
  Client a(r.port), b(r.port);
  a.read_frame();
  b.read_frame();
  for (int i = 0; i < 4; ++i) {
    a.send({{"type", "set_material"}, {"sigma_a", 0.01 + 0.01 * i}});
    b.send({{"type", "set_camera"}, {"position", {60.0 - i, 1.0 * i, 10.0}}});
  }
  for (Client* c : {&a, &b}) {
    std::int64_t prev = 0;
    for (int i = 0; i < 8; ++i) {
      const auto seq = c->read_frame().second.at("seq").get<std::int64_t>();
      EXPECT_EQ(seq, prev + 1);
      prev = seq;
    }
  }
  EXPECT_EQ(Json::parse(get(r.port, "/scene").body()).at("seq"), 8);
}

TEST(Service, BindErrors) {
  Running r;
  ServiceOptions o;
  o.bind = "127.0.0.1:" + std::to_string(r.port);
  Service clash(relighter(), o);
  EXPECT_THROW(clash.start(), IoError);
  o.bind = "not-a-host:1";
  Service bad(relighter(), o);
  EXPECT_THROW(bad.start(), InvalidArgument);
}
