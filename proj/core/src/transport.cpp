#include "secrecy/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "secrecy/error.hpp"

namespace secrecy {

class InProcRing::Link final : public Transport {
 public:
  Link(Channel& out, Channel& in) : out_(out), in_(in) {}

  std::vector<Word> exchange(std::span<const Word> payload) override {
    {
      std::lock_guard lk(out_.mu);
      if (out_.closed) throw Error(Errc::TransportClosed, "successor channel closed");
      out_.frames.emplace_back(payload.begin(), payload.end());
    }
    out_.cv.notify_one();
    std::unique_lock lk(in_.mu);
    in_.cv.wait(lk, [&] { return !in_.frames.empty() || in_.closed; });
    if (in_.frames.empty()) throw Error(Errc::TransportClosed, "predecessor channel closed");
    auto frame = std::move(in_.frames.front());
    in_.frames.pop_front();
    return frame;
  }

  void close() override {
    for (Channel* c : {&out_, &in_}) {
      {
        std::lock_guard lk(c->mu);
        c->closed = true;
      }
      c->cv.notify_all();
    }
  }

  TransportKind kind() const override { return TransportKind::InProcess; }

 private:
  Channel& out_;
  Channel& in_;
};

InProcRing::InProcRing() {
  for (int i = 0; i < kParties; ++i)
    links_[i] = std::make_unique<Link>(inbox_[successor(i)], inbox_[i]);
}

void InProcRing::close_all() {
  for (auto& l : links_) l->close();
}

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::SyntaxError, "endpoint must be host:port: " + text);
  Endpoint e;
  e.host = text.substr(0, colon);
  const int port = std::stoi(text.substr(colon + 1));
  if (port <= 0 || port > 65535) throw Error(Errc::SyntaxError, "bad port in " + text);
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

namespace {

[[noreturn]] void sys_fail(const char* what) {
  throw Error(Errc::TransportClosed, std::string(what) + ": " + std::strerror(errno));
}

sockaddr_in resolve(const Endpoint& e) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(e.host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw Error(Errc::TransportClosed, "cannot resolve " + e.host);
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  freeaddrinfo(res);
  addr.sin_port = htons(e.port);
  return addr;
}

int listen_on(const Endpoint& e, std::uint16_t* bound_port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(e);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("bind");
  if (::listen(fd, 4) < 0) sys_fail("listen");
  if (bound_port) {
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    *bound_port = ntohs(addr.sin_port);
  }
  return fd;
}

void tune(int fd) {
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

int connect_to(const Endpoint& e, int timeout_ms) {
  const sockaddr_in addr = resolve(e);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) sys_fail("socket");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      tune(fd);
      return fd;
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() > deadline) sys_fail("connect");
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

int accept_one(int listen_fd) {
  const int fd = ::accept(listen_fd, nullptr, nullptr);
  if (fd < 0) sys_fail("accept");
  tune(fd);
  return fd;
}

}  // namespace

TcpTransport::TcpTransport(int to_successor, int from_predecessor)
    : out_fd_(to_successor), in_fd_(from_predecessor) {}

TcpTransport::~TcpTransport() {
  if (out_fd_ >= 0) ::close(out_fd_);
  if (in_fd_ >= 0) ::close(in_fd_);
}

// shutdown rather than close: it wakes a peer thread blocked in poll.
void TcpTransport::close() {
  closed_ = true;
  ::shutdown(out_fd_, SHUT_RDWR);
  ::shutdown(in_fd_, SHUT_RDWR);
}

std::vector<Word> TcpTransport::exchange(std::span<const Word> out) {
  if (closed_) throw Error(Errc::TransportClosed, "socket closed");
  const std::uint32_t out_len = static_cast<std::uint32_t>(out.size() * sizeof(Word));
  std::vector<char> send_buf(4 + out_len);
  std::memcpy(send_buf.data(), &out_len, 4);
  if (out_len) std::memcpy(send_buf.data() + 4, out.data(), out_len);

  std::size_t sent = 0;
  std::uint32_t in_len = 0;
  std::size_t header_got = 0;
  std::vector<char> recv_buf;
  std::size_t got = 0;
  bool recv_done = false;

  // Send and receive concurrently so that large frames cannot deadlock the ring.
  while (sent < send_buf.size() || !recv_done) {
    pollfd fds[2];
    int n = 0;
    int send_idx = -1, recv_idx = -1;
    if (sent < send_buf.size()) {
      fds[n] = {out_fd_, POLLOUT, 0};
      send_idx = n++;
    }
    if (!recv_done) {
      fds[n] = {in_fd_, POLLIN, 0};
      recv_idx = n++;
    }
    if (::poll(fds, n, -1) < 0) {
      if (errno == EINTR) continue;
      sys_fail("poll");
    }
    if (send_idx >= 0 && (fds[send_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::send(out_fd_, send_buf.data() + sent, send_buf.size() - sent, MSG_NOSIGNAL);
      if (w < 0 && errno != EAGAIN && errno != EINTR) sys_fail("send");
      if (w > 0) sent += static_cast<std::size_t>(w);
    }
    if (recv_idx >= 0 && (fds[recv_idx].revents & (POLLIN | POLLERR | POLLHUP))) {
      if (header_got < 4) {
        const ssize_t r = ::recv(in_fd_, reinterpret_cast<char*>(&in_len) + header_got, 4 - header_got, 0);
        if (r == 0) throw Error(Errc::TransportClosed, "predecessor closed the connection");
        if (r < 0 && errno != EAGAIN && errno != EINTR) sys_fail("recv");
        if (r > 0) header_got += static_cast<std::size_t>(r);
        if (header_got == 4) {
          if (in_len % sizeof(Word) != 0)
            throw Error(Errc::PayloadCountMismatch, "frame length is not a whole number of words");
          recv_buf.resize(in_len);
          recv_done = in_len == 0;
        }
      } else {
        const ssize_t r = ::recv(in_fd_, recv_buf.data() + got, recv_buf.size() - got, 0);
        if (r == 0) throw Error(Errc::TransportClosed, "predecessor closed the connection");
        if (r < 0 && errno != EAGAIN && errno != EINTR) sys_fail("recv");
        if (r > 0) got += static_cast<std::size_t>(r);
        recv_done = got == recv_buf.size();
      }
    }
  }
  std::vector<Word> in(in_len / sizeof(Word));
  if (in_len) std::memcpy(in.data(), recv_buf.data(), in_len);
  return in;
}

std::unique_ptr<TcpTransport> TcpTransport::connect_ring(const Endpoint& bind, const Endpoint& successor,
                                                         int timeout_ms) {
  const int lfd = listen_on(bind, nullptr);
  int out = -1;
  try {
    out = connect_to(successor, timeout_ms);
  } catch (...) {
    ::close(lfd);
    throw;
  }
  const int in = accept_one(lfd);
  ::close(lfd);
  return std::make_unique<TcpTransport>(out, in);
}

std::array<std::unique_ptr<TcpTransport>, kParties> make_loopback_tcp_ring() {
  std::array<int, kParties> lfd{};
  std::array<std::uint16_t, kParties> port{};
  for (int i = 0; i < kParties; ++i) lfd[i] = listen_on(Endpoint{"127.0.0.1", 0}, &port[i]);
  std::array<int, kParties> out{};
  for (int i = 0; i < kParties; ++i) out[i] = connect_to(Endpoint{"127.0.0.1", port[successor(i)]}, 2000);
  std::array<std::unique_ptr<TcpTransport>, kParties> ring;
  for (int i = 0; i < kParties; ++i) {
    // Listener i is connected to by its predecessor.
    const int in = accept_one(lfd[i]);
    ::close(lfd[i]);
    ring[i] = std::make_unique<TcpTransport>(out[i], in);
  }
  return ring;
}

}  // namespace secrecy
