#pragma once

#include <voxelskip/service.hpp>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace voxelskip {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace detail {

// Tracks live per-connection workers so the server can wait for them on stop.
struct WorkerRegistry {
  std::mutex m;
  std::condition_variable cv;
  int active = 0;
  bool stopping = false;
};

/// One WebSocket connection. Socket I/O runs on the io_context thread;
/// message handling runs on a dedicated worker so long rebuilds never block
/// other connections. A set_tf that arrives while an older set_tf is still
/// queued replaces it.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const Volume& volume, const SessionConfig& cfg, std::shared_ptr<WorkerRegistry> reg)
      : ws_(std::move(socket)), volume_(volume), cfg_(cfg), registry_(std::move(reg)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->spawn_worker();
      self->read();
    });
  }

  void close() {
    {
      std::lock_guard lock(m_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  struct Inbound {
    std::string text;
    bool is_set_tf = false;
  };

  void spawn_worker() {
    {
      std::lock_guard lock(registry_->m);
      if (registry_->stopping) return;
      ++registry_->active;
    }
    std::thread([self = shared_from_this()]() mutable {
      self->work();
      // Drop the connection before signing off so nothing outlives the server.
      const auto reg = self->registry_;
      self.reset();
      std::lock_guard lock(reg->m);
      --reg->active;
      reg->cv.notify_all();
    }).detach();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (!self->ws_.got_text()) {
        self->enqueue_reply({false, R"({"type":"error","reason":"binary messages are not accepted"})", {}});
      } else {
        self->push(std::move(text));
      }
      self->read();
    });
  }

  void push(std::string text) {
    Inbound in{std::move(text), false};
    try {
      const auto j = nlohmann::json::parse(in.text);
      in.is_set_tf = j.is_object() && j.value("type", std::string()) == "set_tf";
    } catch (const nlohmann::json::exception&) {
    }
    {
      std::lock_guard lock(m_);
      if (in.is_set_tf)
        std::erase_if(inbox_, [](const Inbound& q) { return q.is_set_tf; });
      inbox_.push_back(std::move(in));
    }
    cv_.notify_one();
  }

  void work() {
    try {
      Session session(volume_, cfg_);
      for (;;) {
        Inbound msg;
        {
          std::unique_lock lock(m_);
          cv_.wait(lock, [&] { return closed_ || !inbox_.empty(); });
          if (closed_) break;
          msg = std::move(inbox_.front());
          inbox_.pop_front();
        }
        auto replies = session.handle_message(msg.text);
        net::post(ws_.get_executor(), [self = shared_from_this(), replies = std::move(replies)]() mutable {
          for (auto& r : replies) self->enqueue_reply(std::move(r));
        });
      }
    } catch (...) {
    }
  }

  // io thread only
  void enqueue_reply(Session::Reply r) {
    outbox_.push_back(std::move(r));
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty()) {
      writing_ = false;
      return;
    }
    writing_ = true;
    const Session::Reply& r = outbox_.front();
    ws_.binary(r.binary);
    auto done = [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec) {
        self->close();
        self->outbox_.clear();
        self->writing_ = false;
        return;
      }
      self->write_next();
    };
    if (r.binary)
      ws_.async_write(net::buffer(r.bytes), std::move(done));
    else
      ws_.async_write(net::buffer(r.text), std::move(done));
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  const Volume& volume_;
  const SessionConfig& cfg_;
  std::shared_ptr<WorkerRegistry> registry_;

  std::mutex m_;
  std::condition_variable cv_;
  std::deque<Inbound> inbox_;
  bool closed_ = false;

  std::deque<Session::Reply> outbox_;
  bool writing_ = false;
};

}  // namespace detail

/// WebSocket server, one Session per connection.
class Server {
 public:
  Server(Volume volume, SessionConfig cfg, unsigned short port, const std::string& address = "127.0.0.1")
      : volume_(std::move(volume)),
        cfg_(std::move(cfg)),
        acceptor_(ioc_, tcp::endpoint(net::ip::make_address(address), port)),
        registry_(std::make_shared<detail::WorkerRegistry>()) {}

  ~Server() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  /// Serves until stop() is called from another thread.
  void run() {
    accept();
    ioc_.run();
  }

  void start() {
    accept();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    {
      std::lock_guard lock(registry_->m);
      registry_->stopping = true;
    }
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      close_connections();
      ioc_.stop();
    });
    if (thread_.joinable()) thread_.join();
    std::unique_lock lock(registry_->m);
    registry_->cv.wait(lock, [&] { return registry_->active == 0; });
  }

 private:
  void accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<detail::Connection>(std::move(socket), volume_, cfg_, registry_);
      std::erase_if(connections_, [](const auto& w) { return w.expired(); });
      connections_.push_back(c);
      c->start();
      accept();
    });
  }

  void close_connections() {
    for (auto& weak : connections_)
      if (auto c = weak.lock()) c->close();
  }

  Volume volume_;
  SessionConfig cfg_;
  net::io_context ioc_{1};
  tcp::acceptor acceptor_;
  std::shared_ptr<detail::WorkerRegistry> registry_;
  std::vector<std::weak_ptr<detail::Connection>> connections_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
};

}  // namespace voxelskip
