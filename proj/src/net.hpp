#pragma once

// Thin RAII layer over POSIX stream sockets. Private to the library.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace keywatch::net {

struct HostPort {
  std::string host;
  std::string port;
};

/// "host:port" or "[v6addr]:port". Throws UsageError.
HostPort split_address(std::string_view address);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void reset() noexcept;
  void shutdown_both() noexcept;

 private:
  int fd_ = -1;
};

enum class IoStatus { ok, eof, timeout, error };

/// Waits up to `timeout` for readability. Returns ok when data (or EOF) is ready.
IoStatus wait_readable(const Socket& s, std::chrono::milliseconds timeout);

/// Reads exactly buf.size() bytes, each wait bounded by `timeout`. On eof,
/// `got` reports how many bytes arrived first.
IoStatus recv_exact(const Socket& s, std::span<std::uint8_t> buf, std::chrono::milliseconds timeout,
                    std::size_t* got = nullptr);

bool send_all(const Socket& s, std::span<const std::uint8_t> data);

/// Throws TransportError with the last connect failure.
Socket connect_to(std::string_view address, std::chrono::milliseconds timeout);

/// Throws IoError when no resolved address can be bound.
Socket listen_on(std::string_view address, int backlog = 64);

std::uint16_t local_port(const Socket& s);
std::string peer_name(const Socket& s);

}  // namespace keywatch::net
