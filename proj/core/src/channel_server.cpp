#include <chrono>
#include <deque>
#include <list>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "haptutor/error.hpp"
#include "haptutor/service.hpp"

namespace haptutor::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

std::string connection_error(const std::string& message) {
  nlohmann::ordered_json j{{"v", kSchemaVersion}, {"type", "error"}, {"t", 0},
                           {"cause", "in:0"}, {"message", message}};
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

struct Connection : std::enable_shared_from_this<Connection> {
  explicit Connection(tcp::socket socket) : ws(std::move(socket)) {}

  websocket::stream<tcp::socket> ws;
  beast::flat_buffer buffer;
  std::vector<std::string> inbound;
  std::deque<std::string> outbox;
  bool writing = false;
  bool open = false;
  bool closed = false;
  Session* session = nullptr;
  Clock::time_point epoch;
};

}  // namespace

struct ChannelServer::Impl {
  Impl(SessionHub& h, unsigned short port, Millis tick)
      : hub(h), acceptor(ioc, tcp::endpoint(tcp::v4(), port)), timer(ioc), tick_ms(tick) {
    if (tick_ms < 1) throw ConfigError("tick_ms must be positive");
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      auto c = std::make_shared<Connection>(std::move(socket));
      connections.push_back(c);
      c->ws.async_accept([this, c](beast::error_code ec) {
        if (ec) {
          drop(c);
          return;
        }
        c->open = true;
        read(c);
      });
      accept();
    });
  }

  void read(const std::shared_ptr<Connection>& c) {
    c->ws.async_read(c->buffer, [this, c](beast::error_code ec, std::size_t) {
      if (ec) {
        drop(c);
        return;
      }
      c->inbound.push_back(beast::buffers_to_string(c->buffer.data()));
      c->buffer.consume(c->buffer.size());
      read(c);
    });
  }

  void send(const std::shared_ptr<Connection>& c, std::string text) {
    c->outbox.push_back(std::move(text));
    if (!c->writing) write(c);
  }

  void write(const std::shared_ptr<Connection>& c) {
    if (c->closed || c->outbox.empty()) {
      c->writing = false;
      return;
    }
    c->writing = true;
    c->ws.text(true);
    c->ws.async_write(asio::buffer(c->outbox.front()),
                      [this, c](beast::error_code ec, std::size_t) {
                        if (ec) {
                          drop(c);
                          return;
                        }
                        c->outbox.pop_front();
                        write(c);
                      });
  }

  void drop(const std::shared_ptr<Connection>& c) {
    if (c->closed) return;
    c->closed = true;
    beast::error_code ignored;
    c->ws.next_layer().close(ignored);
    if (c->session) hub.remove(c->session->descriptor().id);
    c->session = nullptr;
  }

  // The first record of a connection must create its session.
  void create(const std::shared_ptr<Connection>& c, const std::string& text) {
    try {
      const auto msg = nlohmann::json::parse(text);
      if (msg.value("v", 0) != kSchemaVersion) {
        send(c, connection_error("unsupported schema version"));
        return;
      }
      if (msg.value("type", "") != "create") {
        send(c, connection_error("first record must be create"));
        return;
      }
      const auto strategy = strategy_from_string(msg.value("strategy", "dynamic"));
      Session& s = hub.create(msg.value("score", ""), strategy);
      c->session = &s;
      c->epoch = Clock::now();
      for (auto& r : s.open()) send(c, std::move(r));
    } catch (const nlohmann::json::exception&) {
      send(c, connection_error("malformed record"));
    } catch (const Error& e) {
      send(c, connection_error(e.what()));
    }
  }

  void pump_all() {
    for (auto it = connections.begin(); it != connections.end();) {
      auto c = *it;
      if (c->closed) {
        if (!c->writing) {
          it = connections.erase(it);
          continue;
        }
        ++it;
        continue;
      }
      if (!c->open) {
        ++it;
        continue;
      }
      std::vector<std::string> inbound = std::move(c->inbound);
      c->inbound.clear();
      std::size_t first = 0;
      while (c->session == nullptr && first < inbound.size()) create(c, inbound[first++]);
      if (c->session != nullptr) {
        const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                             Clock::now() - c->epoch)
                             .count();
        std::span<const std::string> rest(inbound.data() + first, inbound.size() - first);
        for (auto& r : c->session->pump(rest, now)) send(c, std::move(r));
      }
      ++it;
    }
  }

  void schedule_tick() {
    timer.expires_after(std::chrono::milliseconds(tick_ms));
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      pump_all();
      schedule_tick();
    });
  }

  void shutdown() {
    beast::error_code ignored;
    acceptor.close(ignored);
    timer.cancel();
    for (auto& c : connections) drop(c);
    ioc.stop();
  }

  SessionHub& hub;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer timer;
  Millis tick_ms;
  std::list<std::shared_ptr<Connection>> connections;
};

ChannelServer::ChannelServer(SessionHub& hub, unsigned short port, Millis tick_ms)
    : impl_(std::make_unique<Impl>(hub, port, tick_ms)) {}

ChannelServer::~ChannelServer() = default;

unsigned short ChannelServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void ChannelServer::run() {
  impl_->accept();
  impl_->schedule_tick();
  impl_->ioc.run();
}

void ChannelServer::stop() {
  asio::post(impl_->ioc, [this] { impl_->shutdown(); });
}

}  // namespace haptutor::service
