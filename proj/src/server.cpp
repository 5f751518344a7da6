#include "nodeplan/server.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <iostream>
#include <set>
#include <thread>

#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "nodeplan/error.hpp"

namespace nodeplan {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxPendingSends = 64;

class WsSession;

}  // namespace

struct PlaygroundServer::Impl {
  Impl(PlaygroundSession& s, ServerOptions o) : session(s), opts(std::move(o)), acceptor(ioc), timer(ioc) {}

  void accept();
  void schedule_broadcast();
  void broadcast();

  PlaygroundSession& session;
  ServerOptions opts;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  net::steady_timer timer;
  std::chrono::steady_clock::time_point next_broadcast;
  std::set<std::shared_ptr<WsSession>> clients;  // io thread only
  long long seq = 0;
  std::atomic<long long> broadcasts{0};
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, PlaygroundServer::Impl& srv) : ws_(std::move(socket)), srv_(srv) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->srv_.clients.insert(self);
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> msg) {
    if (queue_.size() >= kMaxPendingSends) queue_.erase(queue_.begin() + 1);  // slow client: drop, keep in-flight
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) write();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->srv_.clients.erase(self);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      std::weak_ptr<WsSession> weak = self;
      net::io_context& ioc = self->srv_.ioc;
      self->srv_.session.submit_text(text, [weak, &ioc](const std::string& reply) {
        net::post(ioc, [weak, msg = std::make_shared<const std::string>(reply)] {
          if (auto s = weak.lock()) s->send(msg);
        });
      });
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->srv_.clients.erase(self);
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  PlaygroundServer::Impl& srv_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, PlaygroundServer::Impl& srv) : stream_(std::move(socket)), srv_(srv) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), srv_)->start(std::move(req_));
        return;
      }
      respond(http::status::not_found, "text/plain", "websocket endpoint is /ws\n");
      return;
    }
    if (req_.method() != http::verb::get) {
      respond(http::status::method_not_allowed, "text/plain", "only GET is supported\n");
      return;
    }
    const auto target = req_.target();
    if (target == "/health") {
      respond(http::status::ok, "text/plain", "ok");
    } else if (target == "/scenario") {
      respond(http::status::ok, "application/json", srv_.session.scenario_json().dump());
    } else if (target == "/target_array") {
      respond(http::status::ok, "application/json", srv_.session.target_array_json().dump());
    } else {
      respond(http::status::not_found, "text/plain", "not found\n");
    }
  }

  void respond(http::status status, const char* type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) {
        self->read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  PlaygroundServer::Impl& srv_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void PlaygroundServer::Impl::accept() {
  acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      std::make_shared<HttpSession>(std::move(socket), *this)->start();
    }
    accept();
  });
}

void PlaygroundServer::Impl::schedule_broadcast() {
  next_broadcast += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / kBroadcastHz));
  timer.expires_at(next_broadcast);
  timer.async_wait([this](beast::error_code ec) {
    if (ec) return;
    broadcast();
    schedule_broadcast();
  });
}

void PlaygroundServer::Impl::broadcast() {
  Frame f = session.snapshot();
  f.seq = ++seq;
  ++broadcasts;
  if (clients.empty()) return;
  const auto msg = std::make_shared<const std::string>(encode_frame(f));
  for (const auto& c : clients) c->send(msg);
}

PlaygroundServer::PlaygroundServer(PlaygroundSession& session, ServerOptions opts)
    : impl_(std::make_unique<Impl>(session, std::move(opts))) {
  beast::error_code ec;
  const auto addr = net::ip::make_address(impl_->opts.address, ec);
  if (ec) fail(ErrorKind::input, "invalid listen address '" + impl_->opts.address + "'");
  const tcp::endpoint ep(addr, impl_->opts.port);
  auto& a = impl_->acceptor;
  a.open(ep.protocol(), ec);
  if (!ec) a.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(ep, ec);
  if (!ec) a.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    fail(ErrorKind::network,
         "cannot listen on " + impl_->opts.address + ":" + std::to_string(impl_->opts.port) + ": " + ec.message());
  }
}

PlaygroundServer::~PlaygroundServer() = default;

unsigned short PlaygroundServer::port() const { return impl_->acceptor.local_endpoint().port(); }

long long PlaygroundServer::frames_broadcast() const { return impl_->broadcasts.load(); }

void PlaygroundServer::run() {
  std::jthread control([this](std::stop_token st) { impl_->session.run(st); });
  std::optional<net::signal_set> signals;
  if (impl_->opts.handle_signals) {
    signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    signals->async_wait([this](beast::error_code ec, int) {
      if (!ec) impl_->ioc.stop();
    });
  }
  impl_->accept();
  impl_->next_broadcast = std::chrono::steady_clock::now();
  impl_->schedule_broadcast();
  impl_->ioc.run();
  control.request_stop();
}

void PlaygroundServer::stop() { impl_->ioc.stop(); }

}  // namespace nodeplan
