#pragma once

#include <sys/stat.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string templ = (fs::temp_directory_path() / "keywatch-test-XXXXXX").string();
    if (!::mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
    // Traversable by the unprivileged user ScopedUnprivileged switches to.
    fs::permissions(path_, fs::perms::owner_all | fs::perms::group_read | fs::perms::group_exec |
                               fs::perms::others_read | fs::perms::others_exec);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const fs::path& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, std::string_view content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Root ignores permission bits, so tests that need an unreadable file drop
/// to `nobody` for the duration of the scope (effective ids only; the saved
/// root id lets the destructor switch back).
class ScopedUnprivileged {
 public:
  ScopedUnprivileged() {
    if (::geteuid() != 0) return;
    if (::setegid(65534) != 0 || ::seteuid(65534) != 0) throw std::runtime_error("cannot drop privileges");
    dropped_ = true;
  }
  ~ScopedUnprivileged() {
    if (dropped_) {
      if (::seteuid(0) != 0 || ::setegid(0) != 0) std::abort();
    }
  }
  ScopedUnprivileged(const ScopedUnprivileged&) = delete;
  ScopedUnprivileged& operator=(const ScopedUnprivileged&) = delete;

 private:
  bool dropped_ = false;
};

inline void make_unreadable(const fs::path& p) { fs::permissions(p, fs::perms::none); }

/// Directories created under a TempDir default to 0755 via umask, files 0644;
/// this re-applies that so nothing depends on the ambient umask.
inline void open_up_tree(const fs::path& root) {
  for (auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_directory()) {
      fs::permissions(e.path(), fs::perms::owner_all | fs::perms::group_read | fs::perms::group_exec |
                                    fs::perms::others_read | fs::perms::others_exec);
    } else if (e.is_regular_file()) {
      fs::permissions(e.path(), fs::perms::owner_read | fs::perms::owner_write | fs::perms::group_read |
                                    fs::perms::others_read);
    }
  }
}

inline std::string random_bytes(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng() & 0xff);
  return s;
}

}  // namespace fixtures
