#include "secmpc/bridge/server.h"

#include <chrono>
#include <csignal>
#include <deque>
#include <string>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace secmpc::bridge {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

constexpr auto kPumpPeriod = std::chrono::milliseconds(5);

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, LiveSession& session)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), session_(session) {}

  void Start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->id_ = self->session_.Connect();
      self->Read();
      self->Pump();
    });
  }

 private:
  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->Close();
        return;
      }
      self->session_.Receive(self->id_, beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->Read();
    });
  }

  // Drains the outbox only between writes, so a slow reader leaves messages
  // in the bounded outbox where the oldest are dropped.
  void Pump() {
    if (closed_) return;
    if (!writing_) {
      for (auto& m : session_.Drain(id_)) pending_.push_back(std::move(m));
      Write();
    }
    timer_.expires_after(kPumpPeriod);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->Pump();
    });
  }

  void Write() {
    if (pending_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(pending_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->Close();
        return;
      }
      self->pending_.pop_front();
      self->Write();
    });
  }

  void Close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    if (id_ >= 0) session_.Disconnect(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  LiveSession& session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> pending_;
  int id_ = -1;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(LiveSession& s, unsigned short port)
      : session(s), acceptor(io, tcp::endpoint(tcp::v4(), port)), signals(io, SIGINT, SIGTERM) {}

  void Accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), session)->Start();
      Accept();
    });
  }

  asio::io_context io;
  LiveSession& session;
  tcp::acceptor acceptor;
  asio::signal_set signals;
};

Server::Server(LiveSession& session, unsigned short port) : impl_(std::make_unique<Impl>(session, port)) {}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::Run() {
  impl_->signals.async_wait([this](beast::error_code, int) { Stop(); });
  impl_->Accept();
  impl_->io.run();
}

void Server::Stop() {
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->signals.cancel(ec);
    impl_->io.stop();
  });
}

void RunRealtime(LiveSession& session, double plant_dt, const std::atomic<bool>& stop) {
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(plant_dt));
  const auto start = Clock::now();
  auto next = start;
  while (!stop.load()) {
    const auto now = Clock::now();
    session.Tick(std::chrono::duration<double>(now - start).count());
    next += period;
    const auto after = Clock::now();
    if (after > next) next = after;
    std::this_thread::sleep_until(next);
  }
}

}  // namespace secmpc::bridge
