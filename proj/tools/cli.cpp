#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "keywatch/error.hpp"
#include "keywatch/event_model.hpp"
#include "keywatch/heuristic_scanner.hpp"
#include "keywatch/hill_cipher.hpp"
#include "keywatch/log_transport.hpp"
#include "keywatch/signature_detector.hpp"

namespace fs = std::filesystem;

namespace keywatch::cli {

namespace {

constexpr std::string_view kConsentBanner =
    "=====================================================================\n"
    " keywatch capture: CONSENTED FOREGROUND CAPTURE\n"
    " Everything you type into THIS terminal from now on is recorded as\n"
    " key events and written to the output file named on the command line.\n"
    " Nothing outside this session is observed. Finish with Ctrl-D (EOF).\n"
    "=====================================================================\n";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on " + p.string());
  return buf.str();
}

void spill(const fs::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write failed on " + p.string());
}

EventScript load_script(const fs::path& p) { return parse_event_script(slurp(p), p.string()); }

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case Error::Category::usage: return kUsage;
    case Error::Category::io: return kIo;
    case Error::Category::format: return kProtocol;
  }
  return kUsage;
}

struct Options {
  fs::path out, script, log, key, root, signatures, rules, allow, in_file;
  std::string bind = std::string(kDefaultBindAddress);
  std::string to;
  std::size_t batch = 32;
  std::string mode = "full";
  std::size_t header_len = kDefaultHeaderLen;
};

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"keywatch: input-event logging pipeline and keylogger detector"};
  app.require_subcommand(1, 1);
  Options o;

  auto* capture = app.add_subcommand("capture", "Consented capture of lines typed on stdin into an event script");
  capture->add_option("--out", o.out, "Event script to write")->required();

  auto* replay = app.add_subcommand("replay", "Validate an event script and rewrite it in canonical form");
  replay->add_option("--script", o.script, "Event script to read")->required();
  replay->add_option("--out", o.out, "Canonical event script to write")->required();

  auto* serve = app.add_subcommand("serve", "Run the log server until interrupted");
  serve->add_option("--bind", o.bind, "Listen address host:port")->capture_default_str();
  serve->add_option("--log", o.log, "Log file frames are appended to")->required();
  serve->add_option("--key", o.key, "Optional key file; used only to show event counts per batch");

  auto* send = app.add_subcommand("send", "Encrypt an event script and ship it to a server");
  send->add_option("--to", o.to, "Server address host:port")->required();
  send->add_option("--script", o.script, "Event script to send")->required();
  send->add_option("--key", o.key, "Hill key file")->required();
  send->add_option("--batch", o.batch, "Events per frame")->capture_default_str()->check(CLI::PositiveNumber);

  auto* read_log_cmd = app.add_subcommand("read-log", "Decrypt a server log and print its events");
  read_log_cmd->add_option("--log", o.log, "Log file to read")->required();
  read_log_cmd->add_option("--key", o.key, "Hill key file")->required();

  auto* detect = app.add_subcommand("detect", "Signature scan: hash files and match against a signature file");
  detect->add_option("--root", o.root, "File or directory to scan")->required();
  detect->add_option("--signatures", o.signatures, "Signature file")->required();
  detect->add_option("--mode", o.mode, "Digest over the full file or its header prefix")
      ->check(CLI::IsMember({"full", "header"}))
      ->capture_default_str();
  detect->add_option("--header-len", o.header_len, "Header prefix length in bytes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  detect->add_option("--out", o.out, "Directory for affected.txt, errors.txt, result.txt")->required();

  auto* heuristic = app.add_subcommand("heuristic", "Token-scoring scan for keylogger traits");
  heuristic->add_option("--root", o.root, "File or directory to scan")->required();
  heuristic->add_option("--rules", o.rules, "Rule file")->required();
  heuristic->add_option("--allow", o.allow, "Allowlist file (absolute paths never flagged)");
  heuristic->add_option("--out", o.out, "Directory for heuristic.txt")->required();

  auto* hill = app.add_subcommand("hill", "Hill cipher file encryption");
  hill->require_subcommand(1, 1);
  auto* hill_enc = hill->add_subcommand("encrypt", "Encrypt a file into a cipher blob");
  auto* hill_dec = hill->add_subcommand("decrypt", "Decrypt a cipher blob");
  for (auto* sub : {hill_enc, hill_dec}) {
    sub->add_option("--key", o.key, "Hill key file")->required();
    sub->add_option("--in", o.in_file, "Input file")->required();
    sub->add_option("--out", o.out, "Output file")->required();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) {
      failing = sub;
      for (auto* nested : sub->get_subcommands()) failing = nested;
    }
    err << failing->help();
    return kUsage;
  }

  try {
    if (capture->parsed()) {
      err << kConsentBanner << std::flush;
      int code = kOk;
      EventScript script;
      try {
        script = capture_interactive(in);
      } catch (const CaptureError& e) {
        err << "capture interrupted: " << e.what() << "; keeping " << e.partial().events.size() << " events\n";
        script = e.partial();
        code = kIo;
      }
      spill(o.out, serialize_events(script));
      err << "captured " << script.events.size() << " events into " << o.out.string() << '\n';
      return code;
    }

    if (replay->parsed()) {
      const EventScript script = load_script(o.script);
      spill(o.out, serialize_events(script));
      out << "replayed " << script.events.size() << " events from " << o.script.string() << " into "
          << o.out.string() << '\n';
      return kOk;
    }

    if (serve->parsed()) {
      ServerConfig config;
      config.bind_address = o.bind;
      config.log_path = o.log;
      config.operator_out = &out;
      if (!o.key.empty()) config.display_key = load_key_file(o.key);
      run_server(std::move(config));
    }

    if (send->parsed()) {
      const EventScript script = load_script(o.script);
      const HillKey key = load_key_file(o.key);
      SendOptions opts;
      opts.batch_size = o.batch;
      const std::size_t frames = send_log(o.to, script, key, opts);
      out << "sent " << script.events.size() << " events in " << frames << " frame(s) to " << o.to << '\n';
      return kOk;
    }

    if (read_log_cmd->parsed()) {
      const EventScript script = read_log(o.log, load_key_file(o.key));
      out << serialize_events(script);
      return kOk;
    }

    if (detect->parsed()) {
      DigestParams params;
      params.mode = o.mode == "header" ? DigestMode::header_prefix : DigestMode::full_file;
      params.header_len = o.header_len;
      const SignatureDb db = load_signatures(o.signatures, params);
      if (db.duplicates) err << "note: " << db.duplicates << " duplicate signature(s) ignored\n";
      const ScanReport report = scan(o.root, db);
      const ReportPaths paths = write_reports(report, o.out);
      out << "scanned " << report.scanned_count << " file(s) against " << db.size() << " signature(s): "
          << report.affected.size() << " affected, " << report.error_entries.size() << " error(s)\n";
      for (const auto& a : report.affected) out << "  AFFECTED " << a.path.string() << '\n';
      out << "Reports: " << paths.affected.string() << ", " << paths.errors.string() << ", "
          << paths.result.string() << '\n';
      if (!report.affected.empty()) {
        out << "Review each file listed in affected.txt and decide what action to take; "
               "keywatch never deletes or quarantines files.\n";
      }
      return report.affected.empty() ? kOk : kAffected;
    }

    if (heuristic->parsed()) {
      const RuleSet rules = load_rules(o.rules);
      const Allowlist allow = o.allow.empty() ? Allowlist{} : load_allowlist(o.allow);
      const HeuristicReport report = heuristic_scan(o.root, rules, allow);
      const fs::path written = write_heuristic_report(report, o.out);
      out << "scanned " << report.scanned_count << " file(s): " << report.findings.size() << " flagged (threshold "
          << rules.threshold << ")\n";
      for (const auto& f : report.findings) out << "  " << f.score << "  " << f.path.string() << '\n';
      for (const auto& e : report.error_entries) err << "  skipped " << e.path.string() << ": " << e.reason << '\n';
      out << "Findings: " << written.string() << '\n';
      if (!report.findings.empty()) {
        out << "Heuristic hits can be false positives; add reviewed paths to an allowlist file (--allow) "
               "to unblock them.\n";
      }
      return kOk;
    }

    if (hill_enc->parsed()) {
      const HillKey key = load_key_file(o.key);
      const std::string plain = slurp(o.in_file);
      const Bytes blob = serialize_blob(encrypt(plain, key));
      spill(o.out, std::string_view(reinterpret_cast<const char*>(blob.data()), blob.size()));
      return kOk;
    }

    if (hill_dec->parsed()) {
      const HillKey key = load_key_file(o.key);
      const std::string raw = slurp(o.in_file);
      const CipherBlob blob =
          parse_blob(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
      const Bytes plain = decrypt(blob, key);
      spill(o.out, std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace keywatch::cli
