#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keywatch/error.hpp"
#include "keywatch/tree_walk.hpp"

namespace keywatch {

enum class DigestAlgo { sha1 };
enum class DigestMode { full_file, header_prefix };

inline constexpr std::size_t kDefaultHeaderLen = 1024;

struct DigestParams {
  DigestAlgo algo = DigestAlgo::sha1;
  DigestMode mode = DigestMode::full_file;
  std::size_t header_len = kDefaultHeaderLen;  // only read in header_prefix mode
};

/// Known-keylogger digests. Keys are 40-char lowercase hex.
struct SignatureDb {
  std::map<std::string, std::optional<std::string>> entries;
  DigestParams params;
  /// Lines whose digest repeated an earlier one (first label kept).
  std::size_t duplicates = 0;

  bool contains(std::string_view digest) const { return entries.find(std::string(digest)) != entries.end(); }
  std::size_t size() const noexcept { return entries.size(); }
};

/// `<hex-digest>[<whitespace><label>]` per line; '#' comments and blank lines
/// skipped; digests lowercased. Throws IoError / ParseError.
SignatureDb parse_signatures(std::string_view text, DigestParams params = {});
SignatureDb load_signatures(const std::filesystem::path& path, DigestParams params = {});

std::string sha1_hex(std::string_view bytes);

/// Streams the file (or its first header_len bytes). Throws IoError.
std::string file_digest(const std::filesystem::path& path, const DigestParams& params = {});

struct AffectedFile {
  std::filesystem::path path;
  std::string digest;
  std::optional<std::string> label;

  friend bool operator==(const AffectedFile&, const AffectedFile&) = default;
};

struct ScanReport {
  std::filesystem::path root;
  std::vector<AffectedFile> affected;  // sorted by path
  std::size_t scanned_count = 0;
  std::vector<ScanError> error_entries;  // sorted by path
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
  std::size_t db_size = 0;
  DigestParams params;
};

struct ScanOptions {
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Hashes every regular file under `root` and reports those whose digest is
/// in `db`. Per-file failures land in error_entries. Throws UsageError if
/// `root` does not exist.
ScanReport scan(const std::filesystem::path& root, const SignatureDb& db, const ScanOptions& options = {});

struct ReportPaths {
  std::filesystem::path affected;
  std::filesystem::path errors;
  std::filesystem::path result;
};

/// Writes affected.txt, errors.txt and result.txt into `out_dir` (created if
/// missing). Throws IoError naming the first file that could not be written.
ReportPaths write_reports(const ScanReport& report, const std::filesystem::path& out_dir);

}  // namespace keywatch
