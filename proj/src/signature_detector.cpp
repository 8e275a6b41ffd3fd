#include "keywatch/signature_detector.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "keywatch/error.hpp"

namespace fs = std::filesystem;

namespace keywatch {

namespace {

constexpr std::size_t kSha1HexLen = 40;

class Sha1 {
 public:
  Sha1() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha1(), nullptr) != 1) throw IoError("SHA-1 init failed");
  }
  void update(const void* data, std::size_t len) { EVP_DigestUpdate(ctx_.get(), data, len); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
      out += kDigits[md[i] >> 4];
      out += kDigits[md[i] & 0xf];
    }
    return out;
  }

 private:
  struct Free {
    void operator()(EVP_MD_CTX* c) const noexcept { EVP_MD_CTX_free(c); }
  };
  std::unique_ptr<EVP_MD_CTX, Free> ctx_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_time(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view mode_name(DigestMode mode) { return mode == DigestMode::full_file ? "full_file" : "header_prefix"; }

std::ofstream open_report(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void finish_report(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw IoError("write failed on " + p.string());
}

}  // namespace

SignatureDb parse_signatures(std::string_view text, DigestParams params) {
  SignatureDb db;
  db.params = params;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    std::size_t split = 0;
    while (split < line.size() && !std::isspace(static_cast<unsigned char>(line[split]))) ++split;
    std::string digest(line.substr(0, split));
    const std::string_view label = trim(line.substr(split));

    if (digest.size() != kSha1HexLen) {
      throw ParseError(line_no, "digest '" + digest + "' has " + std::to_string(digest.size()) +
                                    " characters, sha1 needs " + std::to_string(kSha1HexLen));
    }
    for (char& c : digest) {
      if (!std::isxdigit(static_cast<unsigned char>(c))) {
        throw ParseError(line_no, "digest '" + digest + "' is not hexadecimal");
      }
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    auto [it, inserted] =
        db.entries.emplace(std::move(digest), label.empty() ? std::nullopt : std::optional<std::string>(label));
    if (!inserted) ++db.duplicates;
  }
  return db;
}

SignatureDb load_signatures(const fs::path& path, DigestParams params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open signature file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on signature file " + path.string());
  return parse_signatures(buf.str(), params);
}

std::string sha1_hex(std::string_view bytes) {
  Sha1 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string file_digest(const fs::path& path, const DigestParams& params) {
  Sha1 h;
  const std::size_t limit =
      params.mode == DigestMode::header_prefix ? params.header_len : std::numeric_limits<std::size_t>::max();
  read_file_chunks(path, limit, [&](std::span<const std::uint8_t> chunk) { h.update(chunk.data(), chunk.size()); });
  return h.hex();
}

ScanReport scan(const fs::path& root, const SignatureDb& db, const ScanOptions& options) {
  ScanReport report;
  report.root = root;
  report.db_size = db.size();
  report.params = db.params;
  report.started = std::chrono::system_clock::now();

  WalkResult walk = walk_tree(root);

  // One slot per file; workers never share a slot, so no locking.
  struct Outcome {
    std::string digest;
    std::string error;
  };
  std::vector<Outcome> outcomes(walk.files.size());
  parallel_for(walk.files.size(), options.threads, [&](std::size_t i) {
    try {
      outcomes[i].digest = file_digest(walk.files[i], db.params);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  report.error_entries = std::move(walk.errors);
  for (std::size_t i = 0; i < walk.files.size(); ++i) {
    if (!outcomes[i].error.empty()) {
      report.error_entries.push_back({walk.files[i], outcomes[i].error});
      continue;
    }
    ++report.scanned_count;
    if (auto it = db.entries.find(outcomes[i].digest); it != db.entries.end()) {
      report.affected.push_back({walk.files[i], it->first, it->second});
    }
  }
  std::stable_sort(report.error_entries.begin(), report.error_entries.end(),
                   [](const ScanError& a, const ScanError& b) { return path_less(a.path, b.path); });
  report.finished = std::chrono::system_clock::now();
  return report;
}

ReportPaths write_reports(const ScanReport& report, const fs::path& out_dir) {
  ReportPaths paths{out_dir / "affected.txt", out_dir / "errors.txt", out_dir / "result.txt"};
  std::error_code ec;
  fs::create_directories(out_dir, ec);  // a failure shows up as the first open below

  {
    auto out = open_report(paths.affected);
    for (const auto& a : report.affected) out << a.path.string() << '\t' << a.digest << '\t' << a.label.value_or("") << '\n';
    finish_report(out, paths.affected);
  }
  {
    auto out = open_report(paths.errors);
    for (const auto& e : report.error_entries) out << e.path.string() << '\t' << e.reason << '\n';
    finish_report(out, paths.errors);
  }
  {
    auto out = open_report(paths.result);
    out << "root: " << report.root.string() << '\n'
        << "algorithm: sha1\n"
        << "mode: " << mode_name(report.params.mode) << '\n';
    if (report.params.mode == DigestMode::header_prefix) out << "header_len: " << report.params.header_len << '\n';
    out << "signatures: " << report.db_size << '\n'
        << "scanned: " << report.scanned_count << '\n'
        << "affected: " << report.affected.size() << '\n'
        << "errors: " << report.error_entries.size() << '\n'
        << "started: " << format_time(report.started) << '\n'
        << "finished: " << format_time(report.finished) << '\n';
    finish_report(out, paths.result);
  }
  return paths;
}

}  // namespace keywatch
