#include "ttvr/session/bridge.hpp"

#include "ttvr/session/protocol.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

namespace ttvr::session {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

using Outbox = std::shared_ptr<const std::vector<std::string>>;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using MessageHandler = std::function<void(const std::shared_ptr<Connection>&, std::string)>;
  using CloseHandler = std::function<void(const std::shared_ptr<Connection>&)>;

  Connection(tcp::socket socket, MessageHandler on_message, CloseHandler on_close)
      : ws_(std::move(socket)), on_message_(std::move(on_message)), on_close_(std::move(on_close)) {}

  void run(std::function<void(const std::shared_ptr<Connection>&)> on_open) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this(), on_open = std::move(on_open)](beast::error_code ec) {
      if (ec) return self->close(ec);
      self->open_ = true;
      on_open(self);
      self->read();
    });
  }

  void send(std::string text) {
    if (!open_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void shutdown(std::string reason) {
    if (!open_) return;
    ws_.async_close(websocket::close_reason(websocket::close_code::try_again_later, reason),
                    [self = shared_from_this()](beast::error_code) { self->close({}); });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close(ec);
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_message_(self, std::move(text));
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close(ec);
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  void close(beast::error_code ec) {
    if (closed_) return;
    closed_ = true;
    open_ = false;
    queue_.clear();
    if (ec && ec != websocket::error::closed) spdlog::debug("bridge connection closed: {}", ec.message());
    on_close_(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  MessageHandler on_message_;
  CloseHandler on_close_;
  bool open_ = false;
  bool closed_ = false;
};

// Mode and phase requests, applied by the control loop in arrival order.
class RequestMailbox {
 public:
  void push(ClientMessage m) {
    std::lock_guard lock(mu_);
    pending_.push_back(std::move(m));
  }
  std::vector<ClientMessage> drain() {
    std::lock_guard lock(mu_);
    std::vector<ClientMessage> out(pending_.begin(), pending_.end());
    pending_.clear();
    return out;
  }

 private:
  std::mutex mu_;
  std::deque<ClientMessage> pending_;
};

}  // namespace

struct Bridge::Impl {
  SessionFactory factory;
  BridgeOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::shared_ptr<Connection> active;  // io thread only
  std::thread io_thread, loop_thread;
  copilot::CommandQueue commands;
  RequestMailbox requests;
  Clock::time_point epoch = Clock::now();
  std::atomic<bool> running{false}, connected{false}, ever_connected{false};
  std::atomic<std::uint64_t> received{0}, malformed{0}, connections{0};
  mutable std::mutex stats_mu;
  BridgeStats loop_stats;  // loop thread writes under stats_mu
  unsigned short bound_port = 0;

  double now_s() const { return std::chrono::duration<double>(Clock::now() - epoch).count(); }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (running) accept();
        return;
      }
      auto conn = std::make_shared<Connection>(
          std::move(socket), [this](const auto& c, std::string text) { on_message(c, std::move(text)); },
          [this](const auto& c) { on_close(c); });
      conn->run([this](const std::shared_ptr<Connection>& c) { on_open(c); });
      accept();
    });
  }

  void on_open(const std::shared_ptr<Connection>& c) {
    if (active) {
      c->send(encode_error("another operator is connected"));
      c->shutdown("busy");
      return;
    }
    active = c;
    ++connections;
    connected = true;
    ever_connected = true;
    spdlog::info("bridge: operator connected");
  }

  void on_close(const std::shared_ptr<Connection>& c) {
    if (c != active) return;
    active.reset();
    connected = false;
    spdlog::warn("bridge: operator connection lost, holding");
  }

  void on_message(const std::shared_ptr<Connection>& c, std::string text) {
    if (c != active) return;
    try {
      ClientMessage m = parse_client_message(text);
      if (auto* cmd = std::get_if<CmdMessage>(&m)) {
        cmd->command.timestamp = now_s();
        ++received;
        commands.push(cmd->command);
      } else {
        requests.push(std::move(m));
      }
    } catch (const ProtocolError& e) {
      ++malformed;
      std::string ref;
      try {
        const auto j = nlohmann::json::parse(text);
        if (j.is_object() && j.contains("type") && j["type"].is_string()) ref = j["type"].get<std::string>();
      } catch (const std::exception&) {
      }
      spdlog::warn("bridge: malformed message: {}", e.what());
      c->send(encode_error(e.what(), ref));
    }
  }

  void publish(Outbox messages) {
    net::post(ioc, [this, messages] {
      if (!active) return;
      for (const auto& m : *messages) active->send(m);
    });
  }

  void loop() {
    copilot::Session session = factory();
    const double dt = 1.0 / session.config().tick_rate;
    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(dt));
    std::size_t events_sent = session.events().size();
    bool holding = false;
    auto next = Clock::now();
    while (running) {
      next += period;
      std::this_thread::sleep_until(next);
      if (!ever_connected) {
        next = Clock::now();
        continue;
      }
      auto out = std::make_shared<std::vector<std::string>>();
      for (auto& m : requests.drain()) {
        try {
          if (const auto* mode = std::get_if<ModeMessage>(&m))
            session.set_mode(mode->mode);
          else
            session.set_phase(std::get<PhaseMessage>(m).phase);
        } catch (const Error& e) {
          out->push_back(encode_error(e.what(), std::holds_alternative<ModeMessage>(m) ? "mode" : "phase"));
        }
      }
      auto drained = commands.take_latest();
      std::optional<copilot::OperatorCommand> cmd = drained.command;
      if (drained.dropped) spdlog::debug("bridge: {} stale commands dropped", drained.dropped);
      const bool link = connected;
      if (!link && !cmd) {
        if (!holding) spdlog::info("bridge: auto-hold engaged");
        holding = true;
        const auto allowed = copilot::allowed_dofs(session.state().phase);
        for (auto d : kinematics::kAllDofs)
          if (allowed.test(static_cast<std::size_t>(d))) {
            cmd = copilot::OperatorCommand{d, 0.0, now_s(), false, -1};
            break;
          }
      } else if (link) {
        holding = false;
      }
      const auto& state = session.tick(dt, cmd);
      double latency_ms = -1.0;
      if (drained.command) {
        latency_ms = 1000.0 * (now_s() - drained.command->timestamp);
        spdlog::debug("bridge: cmd seq {} applied after {:.3f} ms", drained.command->seq, latency_ms);
      }
      const auto& events = session.events();
      for (; events_sent < events.size(); ++events_sent) out->push_back(encode_event(events[events_sent]));
      out->push_back(encode_state(state, drained.command ? drained.command->seq : -1));
      {
        std::lock_guard lock(stats_mu);
        ++loop_stats.ticks;
        loop_stats.commands_dropped += drained.dropped;
        if (drained.command) {
          ++loop_stats.commands_applied;
          loop_stats.last_latency_ms = latency_ms;
          loop_stats.max_latency_ms = std::max(loop_stats.max_latency_ms, latency_ms);
        }
      }
      if (link) publish(std::move(out));
      if (Clock::now() > next + 10 * period) next = Clock::now();
    }
  }
};

Bridge::Bridge(SessionFactory factory, BridgeOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->factory = std::move(factory);
  impl_->options = std::move(options);
}

Bridge::~Bridge() { stop(); }

void Bridge::start() {
  auto& d = *impl_;
  if (d.running) return;
  beast::error_code ec;
  const tcp::endpoint ep(net::ip::make_address(d.options.address, ec), d.options.port);
  if (ec) throw Error("bridge: invalid address " + d.options.address);
  d.acceptor.open(ep.protocol(), ec);
  if (!ec) d.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) d.acceptor.bind(ep, ec);
  if (!ec) d.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error("bridge: cannot listen on port " + std::to_string(d.options.port) + ": " + ec.message());
  d.bound_port = d.acceptor.local_endpoint().port();
  d.running = true;
  d.accept();
  d.io_thread = std::thread([&d] { d.ioc.run(); });
  d.loop_thread = std::thread([&d] {
    try {
      d.loop();
    } catch (const std::exception& e) {
      spdlog::error("bridge control loop stopped: {}", e.what());
    }
  });
  spdlog::info("bridge listening on {}:{}", d.options.address, d.bound_port);
}

void Bridge::stop() {
  auto& d = *impl_;
  if (!d.running.exchange(false)) return;
  if (d.loop_thread.joinable()) d.loop_thread.join();
  net::post(d.ioc, [&d] {
    beast::error_code ec;
    d.acceptor.close(ec);
    d.active.reset();
  });
  d.ioc.stop();
  if (d.io_thread.joinable()) d.io_thread.join();
}

unsigned short Bridge::port() const { return impl_->bound_port; }

BridgeStats Bridge::stats() const {
  BridgeStats s;
  {
    std::lock_guard lock(impl_->stats_mu);
    s = impl_->loop_stats;
  }
  s.commands_received = impl_->received;
  s.malformed = impl_->malformed;
  s.connections = impl_->connections;
  return s;
}

}  // namespace ttvr::session
