// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "keywatch/event_model.hpp"
#include "keywatch/heuristic_scanner.hpp"
#include "keywatch/hill_cipher.hpp"
#include "keywatch/log_transport.hpp"
#include "keywatch/signature_detector.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"

using namespace keywatch;
namespace fs = std::filesystem;
using fixtures::TempDir;
using fixtures::write_file;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string as_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

HillKey random_key(std::mt19937_64& rng, std::size_t n, std::uint32_t m) {
  for (;;) {
    std::vector<std::vector<std::int64_t>> e(n, std::vector<std::int64_t>(n));
    for (auto& row : e)
      for (auto& v : row) v = static_cast<std::int64_t>(rng() % m);
    try {
      return make_key(e, m);
    } catch (const KeyError&) {
    }
  }
}

oracle::Matrix to_matrix(const HillKey& k) {
  oracle::Matrix out(k.n(), std::vector<std::int64_t>(k.n()));
  for (std::size_t r = 0; r < k.n(); ++r)
    for (std::size_t c = 0; c < k.n(); ++c) out[r][c] = k.at(r, c);
  return out;
}

ServerConfig loopback(const fs::path& log) {
  ServerConfig c;
  c.bind_address = "127.0.0.1:0";
  c.log_path = log;
  c.operator_out = nullptr;
  return c;
}

std::string ac1() {
  const HillKey textbook = make_key({{3, 3}, {2, 5}}, 26);
  const std::string oracle_ct = oracle::hill2_letters("HELP", {3, 3, 2, 5});
  const CipherBlob help = encrypt(std::string_view("HELP"), textbook);
  expect(oracle_ct == "HIAT", "oracle disagrees with textbook HIAT");
  expect(as_string(help.body) == "HIAT", "HELP encrypted to " + as_string(help.body));
  expect(as_string(decrypt(help, textbook)) == "HELP", "HIAT did not decrypt to HELP");

  std::mt19937_64 rng(500);
  std::size_t pairs = 0;
  for (std::size_t n : {2, 3}) {
    for (std::uint32_t m : {26u, 256u}) {
      for (int i = 0; i < 130; ++i) {
        const HillKey key = random_key(rng, n, m);
        std::string p(rng() % 97, '\0');
        for (auto& ch : p) ch = static_cast<char>(m == 26 ? 'A' + rng() % 26 : rng() % 256);
        const CipherBlob blob = encrypt(p, key);
        const CipherBlob wire = parse_blob(serialize_blob(blob));
        expect(as_string(decrypt(wire, key)) == p, "round trip failed for n=" + std::to_string(n));
        if (n == 2 && m == 26) {
          const std::string want = oracle::hill2_letters(p, {static_cast<int>(key.at(0, 0)), static_cast<int>(key.at(0, 1)),
                                                             static_cast<int>(key.at(1, 0)), static_cast<int>(key.at(1, 1))});
          expect(as_string(blob.body) == want, "ciphertext differs from the per-block oracle");
        }
        ++pairs;
      }
    }
  }
  return std::to_string(pairs) + " pairs round-tripped; HELP->HIAT->HELP";
}

std::string ac2() {
  std::mt19937_64 rng(200);
  std::size_t keys = 0;
  for (std::size_t n = 2; n <= 8; ++n) {
    for (std::uint32_t m : {26u, 256u}) {
      for (int i = 0; i < 15; ++i) {
        const HillKey k = random_key(rng, n, m);
        const oracle::Matrix a = to_matrix(k);
        const oracle::Matrix b = to_matrix(invert_key(k));
        for (const auto& prod : {oracle::mat_mul_mod(a, b, m), oracle::mat_mul_mod(b, a, m)})
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) expect(prod[r][c] == (r == c), "K*K^-1 != I");
        ++keys;
      }
    }
  }

  // Every 2x2 matrix with entries in [0, 16): even det -> rejected, odd det -> accepted.
  std::size_t even = 0;
  for (std::int64_t v = 0; v < 16 * 16 * 16 * 16; ++v) {
    const std::int64_t a = v & 15, b = (v >> 4) & 15, c = (v >> 8) & 15, d = (v >> 12) & 15;
    const bool is_even = ((a * d - b * c) % 2) == 0;
    bool rejected = false;
    try {
      make_key({{a, b}, {c, d}}, 256);
    } catch (const KeyError&) {
      rejected = true;
    }
    expect(rejected == is_even, "make_key parity verdict wrong");
    even += is_even;
  }
  // Random even-determinant matrices for n = 3..8: make one row even-scaled.
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 3 + rng() % 6;
    std::vector<std::vector<std::int64_t>> e(n, std::vector<std::int64_t>(n));
    for (auto& row : e)
      for (auto& val : row) val = static_cast<std::int64_t>(rng() % 256);
    for (auto& val : e[rng() % n]) val = (val * 2) % 256;
    // An all-even row forces an even determinant; cross-check where cofactor expansion is cheap.
    if (n <= 5) expect(oracle::det_mod(e, 2) == 0, "generator produced an odd determinant");
    bool rejected = false;
    try {
      make_key(e, 256);
    } catch (const KeyError&) {
      rejected = true;
    }
    expect(rejected, "even-determinant " + std::to_string(n) + "x" + std::to_string(n) + " key accepted");
    ++even;
  }
  return std::to_string(keys) + " keys inverted; " + std::to_string(even) + " even-det matrices rejected";
}

std::string ac3() {
  TempDir dir;
  std::mt19937_64 rng(3);
  std::vector<fs::path> files;
  for (int i = 0; i < 200; ++i) {
    const fs::path p = dir / "tree" / ("d" + std::to_string(i % 9)) / ("e" + std::to_string(i % 4)) /
                       ("f" + std::to_string(i) + ".bin");
    write_file(p, "unique-" + std::to_string(i) + fixtures::random_bytes(rng, rng() % 4096));
    files.push_back(p);
  }
  std::shuffle(files.begin(), files.end(), rng);
  std::set<std::string> planted;
  std::string sigs = "# planted\n";
  for (int i = 0; i < 20; ++i) {
    const std::string d = oracle::sha1_hex(oracle::read_all(files[static_cast<std::size_t>(i)]));
    planted.insert(d);
    sigs += d + " planted-" + std::to_string(i) + "\n";
  }
  for (int i = 0; i < 30; ++i) sigs += oracle::sha1_hex("absent-" + std::to_string(i)) + "\n";
  write_file(dir / "signatures.txt", sigs);

  const SignatureDb db = load_signatures(dir / "signatures.txt");
  const auto expected = oracle::affected_paths(dir / "tree", planted);
  expect(expected.size() == 20, "oracle found " + std::to_string(expected.size()));

  const ScanReport first = scan(dir / "tree", db);
  const ScanReport second = scan(dir / "tree", db);
  std::set<std::string> got;
  for (const auto& a : first.affected) got.insert(a.path.generic_string());
  std::size_t fp = 0, fn = 0;
  for (const auto& p : got) fp += expected.count(p) == 0;
  for (const auto& p : expected) fn += got.count(p) == 0;
  expect(fp == 0 && fn == 0, std::to_string(fp) + " false positives, " + std::to_string(fn) + " false negatives");
  expect(first.affected == second.affected && first.error_entries == second.error_entries &&
             first.scanned_count == second.scanned_count,
         "second run differs");
  write_reports(first, dir / "r1");
  write_reports(second, dir / "r2");
  expect(fixtures::read_file(dir / "r1/affected.txt") == fixtures::read_file(dir / "r2/affected.txt") &&
             fixtures::read_file(dir / "r1/errors.txt") == fixtures::read_file(dir / "r2/errors.txt"),
         "report files differ between runs");
  return "200 files, 20 planted: 0 FP, 0 FN, identical reports on rerun";
}

std::string ac4() {
  TempDir dir;
  const fs::path work = dir / "work";
  fs::create_directories(work);
  fs::permissions(work, fs::perms::all);
  std::string sigs;
  for (int i = 0; i < 30; ++i) {
    const std::string body = "content-" + std::to_string(i);
    write_file(dir / "tree" / ("g" + std::to_string(i % 3)) / ("f" + std::to_string(i)), body);
    if (i % 10 == 0) sigs += oracle::sha1_hex(body) + "\n";
  }
  write_file(dir / "sigs.txt", sigs);
  fixtures::open_up_tree(dir.path());
  fs::permissions(work, fs::perms::all);
  // The build tree may sit somewhere `nobody` cannot reach; run a copy.
  const fs::path exe = dir / "keywatch";
  fs::copy_file(KEYWATCH_BINARY, exe);
  fs::permissions(exe, fs::perms::owner_all | fs::perms::group_exec | fs::perms::group_read |
                           fs::perms::others_exec | fs::perms::others_read);

  const std::set<std::string> expected_files = {"affected.txt", "errors.txt", "result.txt"};
  std::string detail;
  for (std::size_t k : {0u, 1u, 5u}) {
    for (std::size_t i = 0; i < k; ++i)
      fixtures::make_unreadable(dir / "tree" / ("g" + std::to_string((i * 2 + 1) % 3)) /
                                ("f" + std::to_string(i * 2 + 1)));
    const fs::path out = work / ("out-k" + std::to_string(k));
    process::Result r;
    {
      fixtures::ScopedUnprivileged nobody;
      r = process::run(exe,
                       {"detect", "--root", (dir / "tree").string(), "--signatures", (dir / "sigs.txt").string(),
                        "--out", out.string()},
                       work);
    }
    expect(r.exit_code == 4, "detect exited " + std::to_string(r.exit_code) + ": " + r.err);
    std::set<std::string> present;
    for (const auto& e : fs::directory_iterator(out)) present.insert(e.path().filename().string());
    expect(present == expected_files, "unexpected report file set for k=" + std::to_string(k));
    const std::string errors = fixtures::read_file(out / "errors.txt");
    const auto lines = static_cast<std::size_t>(std::count(errors.begin(), errors.end(), '\n'));
    expect(lines == k, "k=" + std::to_string(k) + " but errors.txt has " + std::to_string(lines) + " lines");
    const std::string affected = fixtures::read_file(out / "affected.txt");
    expect(std::count(affected.begin(), affected.end(), '\n') == 3, "affected count changed with k");
    expect(fixtures::read_file(out / "result.txt").find("scanned: " + std::to_string(30 - k) + "\n") !=
               std::string::npos,
           "result.txt scanned count wrong");
    fixtures::open_up_tree(dir / "tree");
    detail += (detail.empty() ? "" : ", ") + ("k=" + std::to_string(k) + " -> " + std::to_string(lines));
  }
  return "exactly 3 report files; errors.txt lines " + detail;
}

std::string ac5() {
  TempDir dir;
  const std::string original = serialize_events(generate_synthetic(2024, 100));
  write_file(dir / "script.txt", original);
  // Replay: parse the file and canonicalise before sending.
  const EventScript script = parse_event_script(fixtures::read_file(dir / "script.txt"), "script.txt");
  expect(script.events.size() == 100, "script size");
  const HillKey key = make_key({{1, 2, 3}, {0, 1, 4}, {5, 6, 0}}, 256);
  const HillKey other = make_key({{1, 0, 0}, {5, 1, 0}, {0, 0, 1}}, 256);

  LogServer server(loopback(dir / "server.log"));
  server.start();
  const std::size_t frames = send_log("127.0.0.1:" + std::to_string(server.port()), script, key);
  server.stop();
  expect(frames == 4, "expected 4 frames, got " + std::to_string(frames));

  const EventScript back = read_log(dir / "server.log", key);
  expect(back.events == script.events, "events differ after the round trip");
  expect(serialize_events(back) == original, "canonical text differs");
  try {
    read_log(dir / "server.log", other);
    throw Failure("wrong key did not fail");
  } catch (const ContentError&) {
  }
  return "100 events field-exact in 4 frames; wrong key -> content error";
}

std::string ac6() {
  TempDir dir;
  const HillKey key = make_key({{3, 3}, {2, 5}}, 256);
  LogServer server(loopback(dir / "server.log"));
  server.start();
  const std::string addr = "127.0.0.1:" + std::to_string(server.port());
  std::size_t acked[2] = {};
  std::string errors[2];
  {
    std::vector<std::jthread> clients;
    for (int c = 0; c < 2; ++c) {
      clients.emplace_back([&, c] {
        try {
          SendOptions opts;
          opts.batch_size = 1;
          acked[c] = send_log(addr, generate_synthetic(static_cast<std::uint64_t>(c + 1), 10), key, opts);
        } catch (const std::exception& e) {
          errors[c] = e.what();
        }
      });
    }
  }
  server.stop();
  expect(errors[0].empty() && errors[1].empty(), "client failed: " + errors[0] + errors[1]);
  expect(acked[0] == 10 && acked[1] == 10, "acks " + std::to_string(acked[0]) + "+" + std::to_string(acked[1]));

  const std::string raw = fixtures::read_file(dir / "server.log");
  std::span<const std::uint8_t> rest(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size());
  std::size_t frames = 0;
  while (!rest.empty()) {
    const DecodedFrame f = frame_decode(rest);
    const Bytes plain = decrypt(f.blob, key);
    const auto batch = parse_event_script(std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
    expect(batch.events.size() == 1, "frame does not hold exactly one event");
    rest = rest.subspan(f.consumed);
    ++frames;
  }
  expect(frames == 20, "log decodes into " + std::to_string(frames) + " frames");
  return "2 clients x 10 frames -> 20 valid frames";
}

std::string ac7() {
  TempDir dir;
  const RuleSet rules = parse_rules(default_rules_text());
  const fs::path suspect = dir / "tree/poller.c";
  const fs::path benign = dir / "tree/docs/notes.md";
  write_file(suspect, "for (;;) { if (GetAsyncKeyState(vk) & 0x8000) log(vk); }");
  write_file(benign, "This library does not call GetAsyncKeyState; see the FAQ.");
  write_file(dir / "tree/plain.c", "int main(void) { return 0; }");

  auto score_of = [](const HeuristicReport& r, const fs::path& p) -> long {
    for (const auto& f : r.findings)
      if (f.path == p) return static_cast<long>(f.score);
    return -1;
  };
  const HeuristicReport r = heuristic_scan(dir / "tree", rules);
  expect(score_of(r, suspect) >= static_cast<long>(rules.threshold), "suspect file not flagged");
  expect(score_of(r, benign) >= static_cast<long>(rules.threshold), "benign file not flagged");
  expect(score_of(r, dir / "tree/plain.c") == -1, "plain file flagged");

  const Allowlist allow = parse_allowlist(suspect.string() + "\n");
  const HeuristicReport allowed = heuristic_scan(dir / "tree", rules, allow);
  expect(score_of(allowed, suspect) == -1, "allowlisted file still flagged");
  expect(score_of(allowed, benign) >= 0, "allowlist hid an unrelated file");
  return "token file flagged (score " + std::to_string(score_of(r, suspect)) + " >= " +
         std::to_string(rules.threshold) + "); allowlisted not flagged; benign mention flagged";
}

std::string ac8() {
  TempDir dir;
  write_file(dir / "tree/a.txt", "harmless");
  write_file(dir / "tree/b/planted.bin", "planted payload");
  write_file(dir / "hit.sigs", oracle::sha1_hex("planted payload") + " planted\n");
  write_file(dir / "miss.sigs", oracle::sha1_hex("never present") + "\n");
  write_file(dir / "key.txt", "2 256\n3 3\n2 5\n");
  write_file(dir / "s.txt", "1 key_press A\n2 key_release A\n");

  const auto planted = process::run(KEYWATCH_BINARY,
                                    {"detect", "--root", (dir / "tree").string(), "--signatures",
                                     (dir / "hit.sigs").string(), "--out", (dir / "o1").string()},
                                    dir.path());
  const auto clean = process::run(KEYWATCH_BINARY,
                                  {"detect", "--root", (dir / "tree").string(), "--signatures",
                                   (dir / "miss.sigs").string(), "--out", (dir / "o2").string()},
                                  dir.path());
  std::uint16_t port = 0;
  {
    LogServer probe(loopback(dir / "probe.log"));
    port = probe.port();
  }  // closed again: nothing listens on `port` now
  const auto down = process::run(KEYWATCH_BINARY,
                                 {"send", "--to", "127.0.0.1:" + std::to_string(port), "--script",
                                  (dir / "s.txt").string(), "--key", (dir / "key.txt").string()},
                                 dir.path());
  expect(planted.exit_code == 4, "planted detect exited " + std::to_string(planted.exit_code));
  expect(clean.exit_code == 0, "clean detect exited " + std::to_string(clean.exit_code));
  expect(down.exit_code == 3, "server-down send exited " + std::to_string(down.exit_code));
  return "planted detect 4, clean detect 0, server-down send 3";
}

struct Criterion {
  const char* id;
  const char* name;
  double limit_s;  // 0: no time bound
  std::function<std::string()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "hill round-trip", 5.0, ac1},
      {"AC2", "key inversion", 2.0, ac2},
      {"AC3", "detector oracle equivalence", 5.0, ac3},
      {"AC4", "report file contract", 0.0, ac4},
      {"AC5", "loopback pipeline", 5.0, ac5},
      {"AC6", "concurrent append", 0.0, ac6},
      {"AC7", "heuristic behavior", 0.0, ac7},
      {"AC8", "CLI verdict codes", 0.0, ac8},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.body();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && c.limit_s > 0 && secs >= c.limit_s) {
      ok = false;
      detail += "; too slow";
    }
    std::ostringstream timing;
    timing.precision(3);
    timing << std::fixed << secs << " s";
    if (c.limit_s > 0) timing << " (limit " << c.limit_s << " s)";
    std::cout << c.id << ' ' << (ok ? "PASS" : "FAIL") << "  " << c.name << ": " << detail << " [" << timing.str()
              << "]\n";
    failed += !ok;
  }
  std::cout << (failed ? "acceptance: FAILED (" + std::to_string(failed) + ")" : std::string("acceptance: all passed"))
            << '\n';
  return failed ? 1 : 0;
}
