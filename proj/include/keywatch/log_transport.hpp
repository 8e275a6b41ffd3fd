#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "keywatch/event_model.hpp"
#include "keywatch/hill_cipher.hpp"

namespace keywatch {

// Wire and log-file record:
//   "KLF1" | version (1 byte, = 1) | payload_len (u32 big-endian) | CipherBlob bytes
inline constexpr std::size_t kFrameHeaderSize = 9;
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kDefaultMaxFrameBytes = std::size_t{1} << 20;
inline constexpr std::size_t kMinMaxFrameBytes = 64;
inline constexpr std::uint8_t kAck = 0x06;
inline constexpr std::uint8_t kNack = 0x15;
inline constexpr std::string_view kDefaultBindAddress = "localhost:7700";

/// Throws FrameError(too_large) when the serialized blob exceeds `max_payload`.
Bytes frame_encode(const CipherBlob& blob, std::size_t max_payload = kDefaultMaxFrameBytes);

struct DecodedFrame {
  CipherBlob blob;
  std::size_t consumed = 0;
};

/// Decodes the frame at the front of `bytes`; trailing bytes are left alone.
DecodedFrame frame_decode(std::span<const std::uint8_t> bytes);

struct ServerConfig {
  std::string bind_address = std::string(kDefaultBindAddress);
  std::filesystem::path log_path;
  std::size_t max_frame_bytes = kDefaultMaxFrameBytes;
  /// When set, each received batch is decrypted only to report its event
  /// count to the operator. Frames are stored as received either way.
  std::optional<HillKey> display_key;
  /// Operator-visible output; nullptr silences it.
  std::ostream* operator_out = nullptr;
  /// A connection idle this long mid-session is dropped.
  std::chrono::milliseconds idle_timeout{30'000};
};

/// Concurrent frame collector. Construction binds the socket and opens the
/// log, so startup errors surface before start(). Every accepted frame is
/// appended whole under one lock, then acked.
class LogServer {
 public:
  explicit LogServer(ServerConfig config);
  ~LogServer();
  LogServer(const LogServer&) = delete;
  LogServer& operator=(const LogServer&) = delete;

  /// Actual bound port (useful with port 0).
  std::uint16_t port() const noexcept;
  /// Spawns the accept loop and returns.
  void start();
  /// Runs the accept loop on the calling thread until stop().
  void serve();
  /// Idempotent. Closes the listener and every live connection, then joins.
  void stop();

  std::size_t frames_written() const noexcept;
  std::size_t sessions_rejected() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocks forever serving `config` (until the process is signalled).
[[noreturn]] void run_server(ServerConfig config);

struct SendOptions {
  std::size_t batch_size = 32;
  std::chrono::milliseconds ack_timeout{10'000};
  std::size_t max_frame_bytes = kDefaultMaxFrameBytes;
};

/// Serializes, encrypts and frames `script` in batches, waiting for an ack
/// after each frame. Returns the number of frames acked. Throws
/// TransportError if the server cannot be reached, DeliveryError on a nack
/// or missing ack.
std::size_t send_log(std::string_view address, const EventScript& script, const HillKey& key,
                     const SendOptions& options = {});

/// Decrypts every frame of a log file and merges the batches in file order.
/// Timestamp ordering is checked within each batch; separate sessions may
/// restart their clocks.
EventScript read_log(const std::filesystem::path& log_path, const HillKey& key);

}  // namespace keywatch
