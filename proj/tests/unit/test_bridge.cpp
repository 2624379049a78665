#include "ttvr/session/bridge.hpp"
#include "ttvr/session/protocol.hpp"

#include "../support/fixtures.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <chrono>
#include <thread>

using namespace ttvr;
using namespace ttvr::session;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

constexpr double kDt = 0.02;

const rl::LocalizationEnv& env() {
  static const rl::LocalizationEnv e = fixtures::default_env();
  return e;
}

Bridge::SessionFactory factory(copilot::ControlMode mode) {
  return [mode] {
    return copilot::Session(mode, env(), fixtures::trained_policy(), fixtures::trained_maps(),
                            env().init_distribution().nominal, {}, copilot::Phase::localization);
  };
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  void send(const std::string& text) { ws_.write(net::buffer(text)); }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  /// Next message of `type`, skipping others.
  json read_type(const std::string& type) {
    for (int i = 0; i < 1000; ++i) {
      json j = read();
      if (j.at("type") == type) return j;
    }
    throw Error("no " + type + " message");
  }

  /// Reads until the connection is closed; returns the messages seen.
  std::vector<json> drain_until_closed() {
    std::vector<json> out;
    beast::error_code ec;
    for (;;) {
      beast::flat_buffer buf;
      ws_.read(buf, ec);
      if (ec) break;
      out.push_back(json::parse(beast::buffers_to_string(buf.data())));
    }
    return out;
  }

  void close() { ws_.close(websocket::close_code::normal); }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

std::string cmd(const char* dof, double vf, std::int64_t seq) {
  return json{{"v", 1}, {"type", "cmd"}, {"dof", dof}, {"velocity_fraction", vf}, {"seq", seq}}.dump();
}

double joint(const json& state, kinematics::Dof d) { return state.at("joints")[static_cast<int>(d)].get<double>(); }

}  // namespace

TEST(Bridge, CopilotStreamsStateAndAdvancesWithoutCommands) {
  Bridge bridge(factory(copilot::ControlMode::copilot));
  bridge.start();
  Client c(bridge.port());
  const json first = c.read_type("state");
  EXPECT_EQ(first.at("v"), 1);
  EXPECT_EQ(first.at("mode"), "copilot");
  EXPECT_EQ(first.at("phase"), "localization");
  json last = first;
  for (int i = 0; i < 20; ++i) {
    const json s = c.read_type("state");
    EXPECT_GT(s.at("t").get<double>(), last.at("t").get<double>());
    last = s;
  }
  EXPECT_NE(first.at("joints"), last.at("joints"));
  EXPECT_EQ(last.at("intervention_time"), 0.0);
  c.close();
  bridge.stop();
  EXPECT_GE(bridge.stats().ticks, 21u);
  EXPECT_EQ(bridge.stats().connections, 1u);
}

TEST(Bridge, MalformedMessageGetsAnErrorAndChangesNothing) {
  Bridge bridge(factory(copilot::ControlMode::master_slave));
  bridge.start();
  Client c(bridge.port());
  const json before = c.read_type("state");
  c.send("{not json");
  c.send(R"({"v":1,"type":"cmd","dof":"bending","velocity_fraction":3})");
  const json e1 = c.read_type("error");
  const json e2 = c.read_type("error");
  EXPECT_TRUE(e1.at("ref").is_null());
  EXPECT_EQ(e2.at("ref"), "cmd");
  const json after = c.read_type("state");
  EXPECT_EQ(after.at("joints"), before.at("joints"));
  EXPECT_EQ(after.at("intervention_time"), 0.0);
  c.close();
  bridge.stop();
  EXPECT_EQ(bridge.stats().malformed, 2u);
  EXPECT_EQ(bridge.stats().commands_applied, 0u);
}

TEST(Bridge, DisallowedDofIsRejectedEndToEnd) {
  Bridge bridge(factory(copilot::ControlMode::master_slave));
  bridge.start();
  Client c(bridge.port());
  const json before = c.read_type("state");
  c.send(cmd("sheath", 1.0, 7));
  const json ev = c.read_type("event");
  EXPECT_EQ(ev.at("kind"), "rejected");
  EXPECT_EQ(ev.at("payload").at("dof"), "sheath");
  json s = c.read_type("state");
  while (s.at("ack").is_null()) s = c.read_type("state");
  EXPECT_EQ(s.at("ack"), 7);
  EXPECT_EQ(s.at("joints"), before.at("joints"));
  c.close();
  bridge.stop();
}

TEST(Bridge, HeldCommandMovesVelocityTimesDtPerTick) {
  Bridge bridge(factory(copilot::ControlMode::master_slave));
  bridge.start();
  Client c(bridge.port());
  json prev = c.read_type("state");
  const double vf = 0.5;
  const double step = vf * env().limits().velocity(kinematics::Dof::bending) * kDt;
  std::atomic<bool> sending = true;
  std::thread sender([&] {
    // Held control: one message per console tick.
    for (std::int64_t seq = 1; sending; ++seq) {
      c.send(cmd("bending", vf, seq));
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  int acked = 0;
  double moved = 0.0;
  for (int i = 0; i < 40; ++i) {
    const json s = c.read_type("state");
    const double delta = joint(s, kinematics::Dof::bending) - joint(prev, kinematics::Dof::bending);
    if (s.at("ack").is_null()) {
      EXPECT_EQ(delta, 0.0);
    } else {
      EXPECT_NEAR(delta, step, 1e-9);
      ++acked;
    }
    EXPECT_EQ(joint(s, kinematics::Dof::translation), joint(prev, kinematics::Dof::translation));
    moved += delta;
    prev = s;
  }
  sending = false;
  sender.join();
  EXPECT_GT(acked, 20);
  EXPECT_NEAR(moved, acked * step, 1e-9);
  c.close();
  bridge.stop();
  const BridgeStats st = bridge.stats();
  EXPECT_GE(st.commands_applied, static_cast<std::uint64_t>(acked));
  EXPECT_GE(st.last_latency_ms, 0.0);
  // Within one tick of latency plus scheduling slack on a loaded machine.
  EXPECT_LT(st.last_latency_ms, 1000.0 * kDt + 50.0);
}

TEST(Bridge, SecondOperatorIsRefused) {
  Bridge bridge(factory(copilot::ControlMode::master_slave));
  bridge.start();
  Client first(bridge.port());
  first.read_type("state");
  Client second(bridge.port());
  const auto seen = second.drain_until_closed();
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.front().at("type"), "error");
  EXPECT_EQ(seen.front().at("message"), "another operator is connected");
  for (const auto& m : seen) EXPECT_NE(m.at("type"), "state");
  first.read_type("state");
  first.close();
  bridge.stop();
}

TEST(Bridge, ModeAndPhaseRequests) {
  Bridge bridge(factory(copilot::ControlMode::master_slave));
  bridge.start();
  Client c(bridge.port());
  c.read_type("state");
  c.send(R"({"v":1,"type":"phase","phase":"anchoring"})");
  const json err = c.read_type("error");
  EXPECT_EQ(err.at("ref"), "phase");
  c.send(R"({"v":1,"type":"mode","mode":"copilot"})");
  json s = c.read_type("state");
  while (s.at("mode") != "copilot") s = c.read_type("state");
  c.send(R"({"v":1,"type":"phase","phase":"releasing"})");
  while (s.at("phase") != "releasing") s = c.read_type("state");
  EXPECT_EQ(s.at("mode"), "copilot");
  c.close();
  bridge.stop();
}

TEST(Bridge, LostConnectionHoldsTheCatheter) {
  Bridge bridge(factory(copilot::ControlMode::copilot));
  bridge.start();
  json last;
  {
    Client c(bridge.port());
    for (int i = 0; i < 5; ++i) last = c.read_type("state");
    c.close();
  }
  const auto ticks_before = bridge.stats().ticks;
  std::this_thread::sleep_for(std::chrono::milliseconds(400));
  EXPECT_GT(bridge.stats().ticks, ticks_before + 5);
  Client again(bridge.port());
  const json s = again.read_type("state");
  EXPECT_GT(s.at("t").get<double>(), last.at("t").get<double>() + 0.2);
  EXPECT_TRUE(s.at("intervening").get<bool>());
  // At most the ticks between the last observed state and the disconnect move the tip.
  for (auto d : kinematics::kPlanningDofs)
    EXPECT_LE(std::abs(joint(s, d) - joint(last, d)), 3 * env().limits().velocity(d) * kDt + 1e-9);
  again.close();
  bridge.stop();
  EXPECT_EQ(bridge.stats().connections, 2u);
}
