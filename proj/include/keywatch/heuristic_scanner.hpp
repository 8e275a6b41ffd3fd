#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "keywatch/error.hpp"
#include "keywatch/tree_walk.hpp"

namespace keywatch {

struct Rule {
  std::string token;  // raw bytes, matched case-sensitively
  unsigned weight = 1;
  std::string description;
};

struct RuleSet {
  std::vector<Rule> rules;
  unsigned threshold = 1;
};

/// Lines are `<weight>\t<token>\t<description>` plus exactly one
/// `threshold <N>`. Rejects duplicate tokens, non-positive weights and a
/// threshold no file could reach.
RuleSet parse_rules(std::string_view text);
RuleSet load_rules(const std::filesystem::path& path);

/// Rules shipped with the tool: API names and phrases typical of hooking
/// and key-state polling keyloggers.
std::string_view default_rules_text();

/// Paths the user has unblocked. Stored normalized and absolute.
class Allowlist {
 public:
  Allowlist() = default;
  void add(const std::filesystem::path& path);
  bool contains(const std::filesystem::path& path) const;
  std::size_t size() const noexcept { return paths_.size(); }
  const std::set<std::string>& paths() const noexcept { return paths_; }

 private:
  std::set<std::string> paths_;
};

/// One absolute path per line; blanks and '#' comments skipped.
Allowlist parse_allowlist(std::string_view text);
Allowlist load_allowlist(const std::filesystem::path& path);

struct Finding {
  std::filesystem::path path;
  unsigned score = 0;
  std::vector<std::string> tokens;  // in rule order

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct HeuristicReport {
  std::filesystem::path root;
  std::vector<Finding> findings;  // by descending score, then path
  std::size_t scanned_count = 0;
  std::vector<ScanError> error_entries;
};

/// Indices of the rules whose token occurs somewhere in `bytes`.
std::vector<std::size_t> matching_rules(std::string_view bytes, const RuleSet& rules);

/// Scores every regular file under `root`; each rule counts at most once per
/// file. Traversal and error handling match the signature scan.
HeuristicReport heuristic_scan(const std::filesystem::path& root, const RuleSet& rules,
                               const Allowlist& allowlist = {}, unsigned threads = 0);

/// heuristic.txt: `path\tscore\ttoken,token,...` per finding.
std::filesystem::path write_heuristic_report(const HeuristicReport& report, const std::filesystem::path& out_dir);

}  // namespace keywatch
