#include "keywatch/tree_walk.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <system_error>
#include <thread>

#include "keywatch/error.hpp"

namespace fs = std::filesystem;

namespace keywatch {

namespace {

void visit(const fs::path& p, WalkResult& out) {
  std::error_code ec;
  const fs::file_status st = fs::symlink_status(p, ec);
  if (ec) {
    out.errors.push_back({p, "stat failed: " + ec.message()});
    return;
  }
  if (fs::is_symlink(st)) {
    out.errors.push_back({p, kSymlinkSkipped});
    return;
  }
  if (fs::is_regular_file(st)) {
    out.files.push_back(p);
    return;
  }
  if (!fs::is_directory(st)) {
    out.errors.push_back({p, kNotRegularSkipped});
    return;
  }

  fs::directory_iterator it(p, ec);
  if (ec) {
    out.errors.push_back({p, "cannot list directory: " + ec.message()});
    return;
  }
  std::vector<fs::path> children;
  for (const fs::directory_iterator end; it != end; it.increment(ec)) {
    children.push_back(it->path());
  }
  if (ec) out.errors.push_back({p, "directory listing interrupted: " + ec.message()});
  std::sort(children.begin(), children.end(), path_less);
  for (const auto& child : children) visit(child, out);
}

}  // namespace

void read_file_chunks(const fs::path& path, std::size_t limit,
                      const std::function<void(std::span<const std::uint8_t>)>& sink) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC | O_NOFOLLOW | O_NONBLOCK);
  if (fd < 0) throw IoError(std::string("open failed: ") + std::strerror(errno));
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};

  std::array<std::uint8_t, 64 * 1024> buf;
  std::size_t remaining = limit;
  while (remaining > 0) {
    const ssize_t n = ::read(fd, buf.data(), std::min(buf.size(), remaining));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) break;
    sink(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)));
    remaining -= static_cast<std::size_t>(n);
  }
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

bool path_less(const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); }

WalkResult walk_tree(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(fs::symlink_status(root, ec))) {
    throw UsageError("scan root does not exist: " + root.string());
  }
  WalkResult out;
  visit(root, out);
  std::sort(out.files.begin(), out.files.end(), path_less);
  std::stable_sort(out.errors.begin(), out.errors.end(),
                   [](const ScanError& a, const ScanError& b) { return path_less(a.path, b.path); });
  return out;
}

}  // namespace keywatch
