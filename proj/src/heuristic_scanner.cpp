#include "keywatch/heuristic_scanner.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "keywatch/error.hpp"

namespace fs = std::filesystem;

namespace keywatch {

namespace {

constexpr std::string_view kDefaultRules =
    "# weight<TAB>token<TAB>description\n"
    "threshold 2\n"
    "3\tSetWindowsHookEx\tinstalls a system-wide hook procedure\n"
    "2\tWH_KEYBOARD_LL\tlow-level keyboard hook id\n"
    "1\tWH_MOUSE_LL\tlow-level mouse hook id\n"
    "2\tGetAsyncKeyState\tpolls key state outside the message loop\n"
    "2\tGetKeyboardState\tcopies the 256-entry virtual key state table\n"
    "1\tkeyboard state table\tkey-state table polling\n"
    "1\tGetForegroundWindow\ttracks the active window\n"
    "2\tJNativeHook\tJava global input hook library\n"
    "2\tpynput\tPython input monitoring package\n"
    "1\tkeyboard.Listener\tpynput keyboard listener\n";

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    fn(++line_no, line);
  }
}

bool blank_or_comment(std::string_view line) {
  const auto first = line.find_first_not_of(" \t");
  return first == std::string_view::npos || line[first] == '#';
}

std::optional<unsigned> parse_positive(std::string_view s) {
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) return std::nullopt;
  return v;
}

std::string normalize(const fs::path& p) {
  std::error_code ec;
  fs::path abs = fs::weakly_canonical(fs::absolute(p, ec), ec);
  if (ec) abs = fs::absolute(p).lexically_normal();
  return abs.generic_string();
}

}  // namespace

std::string_view default_rules_text() { return kDefaultRules; }

RuleSet parse_rules(std::string_view text) {
  RuleSet rules;
  std::optional<unsigned> threshold;
  std::unordered_map<std::string, std::size_t> seen;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (blank_or_comment(line)) return;
    if (line.starts_with("threshold")) {
      std::string_view rest = line.substr(9);
      const auto start = rest.find_first_not_of(" \t");
      if (start == 0 || start == std::string_view::npos) throw ParseError(line_no, "expected 'threshold <N>'");
      rest = rest.substr(start);
      rest = rest.substr(0, rest.find_last_not_of(" \t") + 1);
      if (threshold) throw ParseError(line_no, "threshold given twice");
      threshold = parse_positive(rest);
      if (!threshold) throw ParseError(line_no, "threshold must be a positive integer");
      return;
    }

    const auto tab1 = line.find('\t');
    if (tab1 == std::string_view::npos) throw ParseError(line_no, "expected <weight>\\t<token>\\t<description>");
    const auto tab2 = line.find('\t', tab1 + 1);
    const std::string_view weight_text = line.substr(0, tab1);
    const std::string_view token =
        tab2 == std::string_view::npos ? line.substr(tab1 + 1) : line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string_view description = tab2 == std::string_view::npos ? std::string_view{} : line.substr(tab2 + 1);

    const auto weight = parse_positive(weight_text);
    if (!weight) throw ParseError(line_no, "weight '" + std::string(weight_text) + "' must be a positive integer");
    if (token.empty()) throw ParseError(line_no, "empty token");
    if (auto it = seen.find(std::string(token)); it != seen.end()) {
      throw ParseError(line_no, "duplicate token '" + std::string(token) + "' (first on line " +
                                    std::to_string(it->second) + ")");
    }
    seen.emplace(token, line_no);
    rules.rules.push_back({std::string(token), *weight, std::string(description)});
  });

  if (!threshold) throw ParseError(0, "missing 'threshold <N>' line");
  rules.threshold = *threshold;
  unsigned long long total = 0;
  for (const auto& r : rules.rules) total += r.weight;
  if (rules.threshold > total) {
    throw ParseError(0, "threshold " + std::to_string(rules.threshold) + " exceeds total rule weight " +
                            std::to_string(total) + "; nothing could ever be flagged");
  }
  return rules;
}

RuleSet load_rules(const fs::path& path) { return parse_rules(read_text(path, "rule file")); }

void Allowlist::add(const fs::path& path) { paths_.insert(normalize(path)); }

bool Allowlist::contains(const fs::path& path) const { return paths_.count(normalize(path)) > 0; }

Allowlist parse_allowlist(std::string_view text) {
  Allowlist list;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (blank_or_comment(line)) return;
    const auto first = line.find_first_not_of(" \t");
    const auto last = line.find_last_not_of(" \t");
    const fs::path p(std::string(line.substr(first, last - first + 1)));
    if (!p.is_absolute()) throw ParseError(line_no, "allowlist entry '" + p.string() + "' is not an absolute path");
    list.add(p);
  });
  return list;
}

Allowlist load_allowlist(const fs::path& path) { return parse_allowlist(read_text(path, "allowlist")); }

std::vector<std::size_t> matching_rules(std::string_view bytes, const RuleSet& rules) {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    if (bytes.find(rules.rules[i].token) != std::string_view::npos) hits.push_back(i);
  }
  return hits;
}

namespace {

// Streams the file, keeping a (longest token - 1) byte tail so matches that
// straddle chunk boundaries are still seen.
std::vector<bool> scan_file(const fs::path& path, const RuleSet& rules) {
  std::size_t longest = 0;
  for (const auto& r : rules.rules) longest = std::max(longest, r.token.size());
  std::vector<bool> hit(rules.rules.size(), false);
  std::size_t remaining = rules.rules.size();
  std::string window;
  read_file_chunks(path, std::numeric_limits<std::size_t>::max(), [&](std::span<const std::uint8_t> chunk) {
    if (remaining == 0) return;
    window.append(reinterpret_cast<const char*>(chunk.data()), chunk.size());
    for (std::size_t i = 0; i < hit.size(); ++i) {
      if (!hit[i] && window.find(rules.rules[i].token) != std::string::npos) {
        hit[i] = true;
        --remaining;
      }
    }
    if (longest == 0) window.clear();
    else if (window.size() >= longest) window.erase(0, window.size() - (longest - 1));
  });
  return hit;
}

}  // namespace

HeuristicReport heuristic_scan(const fs::path& root, const RuleSet& rules, const Allowlist& allowlist,
                               unsigned threads) {
  HeuristicReport report;
  report.root = root;
  WalkResult walk = walk_tree(root);

  struct Outcome {
    std::vector<bool> hit;
    std::string error;
  };
  std::vector<Outcome> outcomes(walk.files.size());
  parallel_for(walk.files.size(), threads, [&](std::size_t i) {
    try {
      outcomes[i].hit = scan_file(walk.files[i], rules);
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
    Finding f{walk.files[i], 0, {}};
    for (std::size_t r = 0; r < rules.rules.size(); ++r) {
      if (!outcomes[i].hit[r]) continue;
      f.score += rules.rules[r].weight;
      f.tokens.push_back(rules.rules[r].token);
    }
    if (f.score >= rules.threshold && !allowlist.contains(f.path)) report.findings.push_back(std::move(f));
  }

  std::sort(report.findings.begin(), report.findings.end(), [](const Finding& a, const Finding& b) {
    if (a.score != b.score) return a.score > b.score;
    return path_less(a.path, b.path);
  });
  std::stable_sort(report.error_entries.begin(), report.error_entries.end(),
                   [](const ScanError& a, const ScanError& b) { return path_less(a.path, b.path); });
  return report;
}

fs::path write_heuristic_report(const HeuristicReport& report, const fs::path& out_dir) {
  const fs::path target = out_dir / "heuristic.txt";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + target.string());
  for (const auto& f : report.findings) {
    out << f.path.string() << '\t' << f.score << '\t';
    for (std::size_t i = 0; i < f.tokens.size(); ++i) out << (i ? "," : "") << f.tokens[i];
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed on " + target.string());
  return target;
}

}  // namespace keywatch
