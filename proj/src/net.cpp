#include "net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <memory>

#include "keywatch/error.hpp"

namespace keywatch::net {

namespace {

struct AddrInfoDeleter {
  void operator()(addrinfo* ai) const noexcept { freeaddrinfo(ai); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr resolve(const HostPort& hp, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* out = nullptr;
  const char* host = hp.host.empty() ? nullptr : hp.host.c_str();
  if (int rc = getaddrinfo(host, hp.port.c_str(), &hints, &out); rc != 0) {
    throw TransportError("cannot resolve " + hp.host + ":" + hp.port + ": " + gai_strerror(rc));
  }
  return AddrInfoPtr(out);
}

int poll_ms(std::chrono::milliseconds timeout) {
  return static_cast<int>(std::min<std::chrono::milliseconds::rep>(timeout.count(), 1 << 30));
}

}  // namespace

HostPort split_address(std::string_view address) {
  HostPort hp;
  if (!address.empty() && address.front() == '[') {
    auto close = address.find(']');
    if (close == std::string_view::npos || close + 1 >= address.size() || address[close + 1] != ':') {
      throw UsageError("malformed address '" + std::string(address) + "', expected [host]:port");
    }
    hp.host = std::string(address.substr(1, close - 1));
    hp.port = std::string(address.substr(close + 2));
  } else {
    auto colon = address.rfind(':');
    if (colon == std::string_view::npos) {
      throw UsageError("malformed address '" + std::string(address) + "', expected host:port");
    }
    hp.host = std::string(address.substr(0, colon));
    hp.port = std::string(address.substr(colon + 1));
  }
  if (hp.port.empty() || hp.port.size() > 5 || hp.port.find_first_not_of("0123456789") != std::string::npos ||
      std::stoul(hp.port) > 65535) {
    throw UsageError("malformed port in address '" + std::string(address) + "'");
  }
  return hp;
}

void Socket::reset() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown_both() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

IoStatus wait_readable(const Socket& s, std::chrono::milliseconds timeout) {
  pollfd pfd{s.fd(), POLLIN, 0};
  for (;;) {
    int rc = ::poll(&pfd, 1, poll_ms(timeout));
    if (rc > 0) return IoStatus::ok;
    if (rc == 0) return IoStatus::timeout;
    if (errno != EINTR) return IoStatus::error;
  }
}

IoStatus recv_exact(const Socket& s, std::span<std::uint8_t> buf, std::chrono::milliseconds timeout,
                    std::size_t* got) {
  std::size_t done = 0;
  auto report = [&](IoStatus st) {
    if (got) *got = done;
    return st;
  };
  while (done < buf.size()) {
    if (auto st = wait_readable(s, timeout); st != IoStatus::ok) return report(st);
    ssize_t n = ::recv(s.fd(), buf.data() + done, buf.size() - done, 0);
    if (n == 0) return report(IoStatus::eof);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return report(IoStatus::error);
    }
    done += static_cast<std::size_t>(n);
  }
  return report(IoStatus::ok);
}

bool send_all(const Socket& s, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

Socket connect_to(std::string_view address, std::chrono::milliseconds timeout) {
  const HostPort hp = split_address(address);
  AddrInfoPtr list = resolve(hp, false);
  std::string last_error = "no usable address";
  for (addrinfo* ai = list.get(); ai; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!sock.valid()) {
      last_error = std::strerror(errno);
      continue;
    }
    // Non-blocking connect so the timeout applies to the handshake too.
    int flags = ::fcntl(sock.fd(), F_GETFL, 0);
    ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd pfd{sock.fd(), POLLOUT, 0};
      rc = ::poll(&pfd, 1, poll_ms(timeout));
      if (rc == 0) {
        last_error = "connect timed out";
        continue;
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        last_error = std::strerror(err);
        continue;
      }
      rc = 0;
    }
    if (rc < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    ::fcntl(sock.fd(), F_SETFL, flags);
    return sock;
  }
  throw TransportError("cannot connect to " + std::string(address) + ": " + last_error);
}

Socket listen_on(std::string_view address, int backlog) {
  const HostPort hp = split_address(address);
  AddrInfoPtr list;
  try {
    list = resolve(hp, true);
  } catch (const TransportError& e) {
    throw IoError(e.what());
  }
  std::string last_error = "no usable address";
  for (addrinfo* ai = list.get(); ai; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!sock.valid()) {
      last_error = std::strerror(errno);
      continue;
    }
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(sock.fd(), ai->ai_addr, ai->ai_addrlen) < 0 || ::listen(sock.fd(), backlog) < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    return sock;
  }
  throw IoError("cannot bind " + std::string(address) + ": " + last_error);
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len) < 0) return 0;
  if (ss.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  if (ss.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
  return 0;
}

std::string peer_name(const Socket& s) {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getpeername(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len) < 0) return "?";
  char host[NI_MAXHOST] = {};
  char port[NI_MAXSERV] = {};
  if (::getnameinfo(reinterpret_cast<sockaddr*>(&ss), len, host, sizeof host, port, sizeof port,
                    NI_NUMERICHOST | NI_NUMERICSERV) != 0) {
    return "?";
  }
  return std::string(host) + ":" + port;
}

}  // namespace keywatch::net
