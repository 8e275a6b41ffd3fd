#include "keywatch/log_transport.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iostream>
#include <iterator>
#include <list>
#include <mutex>
#include <thread>

#include <sys/socket.h>

#include "net.hpp"

namespace keywatch {

namespace {

constexpr std::array<std::uint8_t, 4> kFrameMagic = {'K', 'L', 'F', '1'};
constexpr auto kPollSlice = std::chrono::milliseconds(100);

std::uint32_t get_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

}  // namespace

Bytes frame_encode(const CipherBlob& blob, std::size_t max_payload) {
  const Bytes payload = serialize_blob(blob);
  if (payload.size() > max_payload || payload.size() > UINT32_MAX) {
    throw FrameError(FrameError::Kind::too_large, "frame payload of " + std::to_string(payload.size()) +
                                                      " bytes exceeds limit of " + std::to_string(max_payload));
  }
  Bytes out(kFrameMagic.begin(), kFrameMagic.end());
  out.reserve(kFrameHeaderSize + payload.size());
  out.push_back(kFrameVersion);
  const auto len = static_cast<std::uint32_t>(payload.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

DecodedFrame frame_decode(std::span<const std::uint8_t> bytes) {
  using K = FrameError::Kind;
  const std::size_t magic_seen = std::min(bytes.size(), kFrameMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_seen), kFrameMagic.begin())) {
    throw FrameError(K::format, "bad frame magic");
  }
  if (bytes.size() < kFrameHeaderSize) {
    throw FrameError(K::truncation, "truncated frame header (" + std::to_string(bytes.size()) + " of " +
                                        std::to_string(kFrameHeaderSize) + " bytes)");
  }
  if (bytes[4] != kFrameVersion) {
    throw FrameError(K::version, "unsupported frame version " + std::to_string(bytes[4]));
  }
  const std::size_t len = get_be32(bytes.data() + 5);
  if (bytes.size() - kFrameHeaderSize < len) {
    throw FrameError(K::truncation, "frame payload truncated: need " + std::to_string(len) + " bytes, have " +
                                        std::to_string(bytes.size() - kFrameHeaderSize));
  }
  DecodedFrame out;
  out.blob = parse_blob(bytes.subspan(kFrameHeaderSize, len));
  out.consumed = kFrameHeaderSize + len;
  return out;
}

// ---------------------------------------------------------------------------
// Server

struct LogServer::Impl {
  ServerConfig config;
  net::Socket listener;
  std::uint16_t port = 0;

  std::mutex log_mutex;
  std::ofstream log;
  std::mutex out_mutex;

  std::atomic<bool> stopping{false};
  std::atomic<std::size_t> frames{0};
  std::atomic<std::size_t> rejected{0};
  std::thread accept_thread;

  struct Connection {
    net::Socket socket;
    std::thread worker;
    std::atomic<bool> done{false};
  };
  std::mutex conn_mutex;
  std::list<Connection> connections;

  template <typename... Parts>
  void say(const Parts&... parts) {
    if (!config.operator_out) return;
    std::lock_guard lock(out_mutex);
    ((*config.operator_out) << ... << parts) << '\n' << std::flush;
  }

  void accept_loop();
  void reap(bool all);
  void handle(Connection& conn);
  void reject(const net::Socket& s, const std::string& peer, const std::string& why);
  std::string describe_batch(const CipherBlob& blob) const;
};

LogServer::LogServer(ServerConfig config) : impl_(std::make_unique<Impl>()) {
  if (config.max_frame_bytes < kMinMaxFrameBytes) {
    throw UsageError("max_frame_bytes must be at least " + std::to_string(kMinMaxFrameBytes));
  }
  if (config.log_path.empty()) throw UsageError("server needs a log path");
  impl_->config = std::move(config);
  impl_->log.open(impl_->config.log_path, std::ios::binary | std::ios::app);
  if (!impl_->log) throw IoError("cannot open log file " + impl_->config.log_path.string() + " for append");
  impl_->listener = net::listen_on(impl_->config.bind_address);
  impl_->port = net::local_port(impl_->listener);
}

LogServer::~LogServer() { stop(); }

std::uint16_t LogServer::port() const noexcept { return impl_->port; }
std::size_t LogServer::frames_written() const noexcept { return impl_->frames.load(); }
std::size_t LogServer::sessions_rejected() const noexcept { return impl_->rejected.load(); }

void LogServer::start() {
  if (impl_->accept_thread.joinable()) return;
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void LogServer::serve() { impl_->accept_loop(); }

void LogServer::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  impl_->reap(true);
  impl_->listener.reset();
}

void LogServer::Impl::accept_loop() {
  say("listening on ", config.bind_address, " (port ", port, "), appending to ", config.log_path.string());
  while (!stopping.load()) {
    reap(false);
    if (net::wait_readable(listener, kPollSlice) != net::IoStatus::ok) continue;
    int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(conn_mutex);
    auto& conn = connections.emplace_back();
    conn.socket = net::Socket(fd);
    conn.worker = std::thread([this, &conn] {
      handle(conn);
      conn.done.store(true);
    });
  }
}

void LogServer::Impl::reap(bool all) {
  std::lock_guard lock(conn_mutex);
  for (auto it = connections.begin(); it != connections.end();) {
    if (all && !it->done.load()) it->socket.shutdown_both();
    if (all || it->done.load()) {
      if (it->worker.joinable()) it->worker.join();
      it = connections.erase(it);
    } else {
      ++it;
    }
  }
}

void LogServer::Impl::reject(const net::Socket& s, const std::string& peer, const std::string& why) {
  const std::uint8_t nack = kNack;
  net::send_all(s, std::span(&nack, 1));
  rejected.fetch_add(1);
  say("[", peer, "] rejected: ", why);
}

std::string LogServer::Impl::describe_batch(const CipherBlob& blob) const {
  if (!config.display_key) return std::to_string(blob.original_len) + " encrypted bytes";
  try {
    const Bytes plain = decrypt(blob, *config.display_key);
    const auto script = parse_event_script(std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
    return std::to_string(script.events.size()) + (script.events.size() == 1 ? " event" : " events");
  } catch (const Error&) {
    return "undecodable with the display key";
  }
}

void LogServer::Impl::handle(Connection& conn) {
  const net::Socket& s = conn.socket;
  const std::string peer = net::peer_name(s);
  std::size_t accepted = 0;

  // Waits in short slices so stop() is noticed; gives up after idle_timeout.
  auto read = [&](std::span<std::uint8_t> buf, std::size_t* got) {
    std::size_t done = 0;
    auto waited = std::chrono::milliseconds(0);
    while (done < buf.size()) {
      if (stopping.load()) {
        *got = done;
        return net::IoStatus::error;
      }
      std::size_t chunk = 0;
      auto st = net::recv_exact(s, buf.subspan(done), kPollSlice, &chunk);
      done += chunk;
      if (st == net::IoStatus::ok) break;
      if (st != net::IoStatus::timeout) {
        *got = done;
        return st;
      }
      waited = chunk ? std::chrono::milliseconds(0) : waited + kPollSlice;
      if (waited >= config.idle_timeout) {
        *got = done;
        return net::IoStatus::timeout;
      }
    }
    *got = done;
    return net::IoStatus::ok;
  };

  say("[", peer, "] connected");
  for (;;) {
    std::array<std::uint8_t, kFrameHeaderSize> header{};
    std::size_t got = 0;

    // Magic first, so garbage is refused without waiting for a full header.
    auto st = read(std::span(header).first(kFrameMagic.size()), &got);
    if (st == net::IoStatus::eof && got == 0) break;
    if (st != net::IoStatus::ok) {
      if (got > 0 && std::equal(header.begin(), header.begin() + got, kFrameMagic.begin())) {
        reject(s, peer, "truncated frame header");
      } else if (got > 0) {
        reject(s, peer, "bad frame magic");
      } else {
        say("[", peer, "] idle connection dropped");
      }
      break;
    }
    if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), header.begin())) {
      reject(s, peer, "bad frame magic");
      break;
    }
    if (read(std::span(header).subspan(kFrameMagic.size()), &got) != net::IoStatus::ok) {
      reject(s, peer, "truncated frame header");
      break;
    }
    if (header[4] != kFrameVersion) {
      reject(s, peer, "unsupported frame version " + std::to_string(header[4]));
      break;
    }
    const std::size_t len = get_be32(header.data() + 5);
    if (len > config.max_frame_bytes) {
      reject(s, peer, "payload of " + std::to_string(len) + " bytes exceeds limit");
      break;
    }

    Bytes frame(header.begin(), header.end());
    frame.resize(kFrameHeaderSize + len);
    if (read(std::span(frame).subspan(kFrameHeaderSize), &got) != net::IoStatus::ok) {
      reject(s, peer, "truncated frame payload (" + std::to_string(got) + " of " + std::to_string(len) + " bytes)");
      break;
    }

    CipherBlob blob;
    try {
      blob = parse_blob(std::span(frame).subspan(kFrameHeaderSize));
    } catch (const FrameError& e) {
      reject(s, peer, e.what());
      break;
    }

    bool stored = false;
    {
      std::lock_guard lock(log_mutex);
      log.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
      log.flush();
      stored = static_cast<bool>(log);
      if (!stored) log.clear();
    }
    if (!stored) {
      reject(s, peer, "log write failed");
      break;
    }
    frames.fetch_add(1);
    ++accepted;

    const std::uint8_t ack = kAck;
    if (!net::send_all(s, std::span(&ack, 1))) break;
    say("[", peer, "] frame ", accepted, ": ", describe_batch(blob));
  }
  say("[", peer, "] closed after ", accepted, " frame(s)");
}

void run_server(ServerConfig config) {
  LogServer server(std::move(config));
  for (;;) server.serve();
}

// ---------------------------------------------------------------------------
// Client

std::size_t send_log(std::string_view address, const EventScript& script, const HillKey& key,
                     const SendOptions& options) {
  if (options.batch_size == 0) throw UsageError("batch size must be positive");
  net::Socket sock = net::connect_to(address, options.ack_timeout);

  std::size_t acked = 0;
  for (std::size_t begin = 0; begin < script.events.size(); begin += options.batch_size) {
    const std::size_t end = std::min(script.events.size(), begin + options.batch_size);
    EventScript batch;
    batch.events.assign(script.events.begin() + static_cast<std::ptrdiff_t>(begin),
                        script.events.begin() + static_cast<std::ptrdiff_t>(end));
    const Bytes frame = frame_encode(encrypt(serialize_events(batch), key), options.max_frame_bytes);

    if (!net::send_all(sock, frame)) throw DeliveryError(acked, "connection lost while sending");
    std::uint8_t reply = 0;
    switch (net::recv_exact(sock, std::span(&reply, 1), options.ack_timeout)) {
      case net::IoStatus::ok: break;
      case net::IoStatus::timeout: throw DeliveryError(acked, "timed out waiting for ack");
      default: throw DeliveryError(acked, "connection closed before ack");
    }
    if (reply == kNack) throw DeliveryError(acked, "server rejected frame");
    if (reply != kAck) throw DeliveryError(acked, "unexpected reply byte " + std::to_string(reply));
    ++acked;
  }
  return acked;
}

EventScript read_log(const std::filesystem::path& log_path, const HillKey& key) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw IoError("cannot open log file " + log_path.string());
  const Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + log_path.string());

  EventScript merged;
  merged.source_label = log_path.string();
  std::size_t offset = 0;
  std::size_t index = 0;
  while (offset < data.size()) {
    DecodedFrame frame;
    try {
      frame = frame_decode(std::span(data).subspan(offset));
    } catch (const FrameError& e) {
      throw FrameError(e.kind(), "at byte offset " + std::to_string(offset) + ": " + e.what());
    }
    const Bytes plain = decrypt(frame.blob, key);
    EventScript batch;
    try {
      batch = parse_event_script(std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
    } catch (const ParseError& e) {
      throw ContentError("frame " + std::to_string(index) + " at byte offset " + std::to_string(offset) +
                         " does not decrypt to an event script (wrong key?): " + e.what());
    }
    merged.events.insert(merged.events.end(), std::make_move_iterator(batch.events.begin()),
                         std::make_move_iterator(batch.events.end()));
    offset += frame.consumed;
    ++index;
  }
  return merged;
}

}  // namespace keywatch
