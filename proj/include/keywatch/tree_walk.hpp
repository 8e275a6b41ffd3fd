#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace keywatch {

/// One path the scanners could not examine, with a short reason.
struct ScanError {
  std::filesystem::path path;
  std::string reason;

  friend bool operator==(const ScanError&, const ScanError&) = default;
};

inline constexpr const char* kSymlinkSkipped = "symlink-skipped";
inline constexpr const char* kNotRegularSkipped = "not-regular-skipped";

struct WalkResult {
  std::vector<std::filesystem::path> files;  // regular files, sorted
  std::vector<ScanError> errors;             // sorted by path
};

/// Depth-first listing of every regular file under `root` (or `root` itself
/// if it is a file). Symlinks are never followed; they and special files are
/// recorded as errors, as are directories that cannot be listed. Throws
/// UsageError if `root` does not exist.
WalkResult walk_tree(const std::filesystem::path& root);

/// Reads up to `limit` bytes of a regular file in chunks. Throws IoError
/// whose message is a short reason ("open failed: ..."), without the path.
void read_file_chunks(const std::filesystem::path& path, std::size_t limit,
                      const std::function<void(std::span<const std::uint8_t>)>& sink);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). `body` must not throw.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Lexicographic order on the generic (slash-separated) form.
bool path_less(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace keywatch
