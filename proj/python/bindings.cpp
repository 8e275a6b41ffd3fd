#include <pybind11/chrono.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "keywatch/error.hpp"
#include "keywatch/event_model.hpp"
#include "keywatch/heuristic_scanner.hpp"
#include "keywatch/hill_cipher.hpp"
#include "keywatch/log_transport.hpp"
#include "keywatch/signature_detector.hpp"

namespace py = pybind11;
namespace kw = keywatch;

namespace {

py::bytes to_py_bytes(const kw::Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

kw::Bytes from_py_bytes(const py::bytes& b) {
  std::string_view view = b;
  return kw::Bytes(view.begin(), view.end());
}

void bind_errors(py::module_& m) {
  static py::exception<kw::Error> base(m, "KeywatchError");
  py::register_exception<kw::UsageError>(m, "UsageError", base);
  py::register_exception<kw::IoError>(m, "IoError", base);
  py::register_exception<kw::ParseError>(m, "ParseError", base);
  py::register_exception<kw::KeyError>(m, "KeyError", base);
  py::register_exception<kw::DimensionError>(m, "DimensionError", base);
  py::register_exception<kw::ArithmeticError>(m, "ArithmeticError", base);
  py::register_exception<kw::CodecError>(m, "CodecError", base);
  py::register_exception<kw::DecryptError>(m, "DecryptError", base);
  py::register_exception<kw::FrameError>(m, "FrameError", base);
  py::register_exception<kw::ContentError>(m, "ContentError", base);
  py::register_exception<kw::TransportError>(m, "TransportError", base);
  py::register_exception<kw::DeliveryError>(m, "DeliveryError", base);
  py::register_exception<kw::CaptureError>(m, "CaptureError", base);
}

void bind_events(py::module_& m) {
  py::enum_<kw::EventKind>(m, "EventKind")
      .value("key_press", kw::EventKind::key_press)
      .value("key_release", kw::EventKind::key_release)
      .value("mouse_move", kw::EventKind::mouse_move)
      .value("mouse_click", kw::EventKind::mouse_click);
  py::enum_<kw::MouseButton>(m, "MouseButton")
      .value("left", kw::MouseButton::left)
      .value("right", kw::MouseButton::right)
      .value("middle", kw::MouseButton::middle);

  py::class_<kw::InputEvent>(m, "InputEvent")
      .def_readonly("timestamp_ms", &kw::InputEvent::timestamp_ms)
      .def_readonly("kind", &kw::InputEvent::kind)
      .def_readonly("key", &kw::InputEvent::key)
      .def_readonly("x", &kw::InputEvent::x)
      .def_readonly("y", &kw::InputEvent::y)
      .def_readonly("button", &kw::InputEvent::button)
      .def_static("key_press", &kw::InputEvent::key_press)
      .def_static("key_release", &kw::InputEvent::key_release)
      .def_static("mouse_move", &kw::InputEvent::mouse_move)
      .def_static("mouse_click", &kw::InputEvent::mouse_click)
      .def(py::self == py::self)
      .def("__repr__", [](const kw::InputEvent& e) {
        kw::EventScript one{{e}, {}};
        auto line = kw::serialize_events(one);
        line.pop_back();
        return "<InputEvent " + line + ">";
      });

  py::class_<kw::EventScript>(m, "EventScript")
      .def(py::init<>())
      .def_readwrite("events", &kw::EventScript::events)
      .def_readwrite("source_label", &kw::EventScript::source_label)
      .def("__len__", [](const kw::EventScript& s) { return s.events.size(); });

  m.def("parse_event_script", [](std::string_view text, std::string label) {
    return kw::parse_event_script(text, std::move(label));
  }, py::arg("text"), py::arg("source_label") = "");
  m.def("serialize_events", &kw::serialize_events);
  m.def("generate_synthetic", &kw::generate_synthetic, py::arg("seed"), py::arg("count"));
  m.def("capture_lines", [](const std::vector<std::string>& lines) {
    std::ostringstream joined;
    for (const auto& l : lines) joined << l << '\n';
    std::istringstream in(joined.str());
    std::uint64_t tick = 0;
    return kw::capture_interactive(in, [&tick] { return tick++; }, "python");
  }, "Feeds lines through the interactive capture mapping with a counting clock.");
}

void bind_hill(py::module_& m) {
  py::enum_<kw::Modulus>(m, "Modulus")
      .value("letters", kw::Modulus::letters)
      .value("bytes", kw::Modulus::bytes);

  py::class_<kw::HillKey>(m, "HillKey")
      .def_property_readonly("n", &kw::HillKey::n)
      .def_property_readonly("m", &kw::HillKey::m)
      .def_property_readonly("entries", [](const kw::HillKey& k) {
        std::vector<std::vector<std::uint32_t>> rows(k.n());
        for (std::size_t r = 0; r < k.n(); ++r)
          for (std::size_t c = 0; c < k.n(); ++c) rows[r].push_back(k.at(r, c));
        return rows;
      })
      .def(py::self == py::self)
      .def("__repr__", [](const kw::HillKey& k) { return "<HillKey\n" + kw::format_key(k) + ">"; });

  py::class_<kw::CipherBlob>(m, "CipherBlob")
      .def_readonly("n", &kw::CipherBlob::n)
      .def_readonly("modulus", &kw::CipherBlob::modulus)
      .def_readonly("original_len", &kw::CipherBlob::original_len)
      .def_property_readonly("body", [](const kw::CipherBlob& b) { return to_py_bytes(b.body); })
      .def(py::self == py::self);

  m.def("make_key", &kw::make_key, py::arg("entries"), py::arg("m"));
  m.def("invert_key", &kw::invert_key);
  m.def("determinant_mod", &kw::determinant_mod);
  m.def("mod_inverse", &kw::mod_inverse, py::arg("a"), py::arg("m"));
  m.def("encrypt", [](const py::bytes& p, const kw::HillKey& k) { return kw::encrypt(std::string_view(p), k); });
  m.def("decrypt", [](const kw::CipherBlob& b, const kw::HillKey& k) { return to_py_bytes(kw::decrypt(b, k)); });
  m.def("serialize_blob", [](const kw::CipherBlob& b) { return to_py_bytes(kw::serialize_blob(b)); });
  m.def("parse_blob", [](const py::bytes& b) { return kw::parse_blob(from_py_bytes(b)); });
  m.def("parse_key", &kw::parse_key);
  m.def("format_key", &kw::format_key);
  m.def("load_key_file", &kw::load_key_file);
}

void bind_transport(py::module_& m) {
  m.attr("ACK") = kw::kAck;
  m.attr("NACK") = kw::kNack;
  m.def("frame_encode", [](const kw::CipherBlob& b, std::size_t max_payload) {
    return to_py_bytes(kw::frame_encode(b, max_payload));
  }, py::arg("blob"), py::arg("max_payload") = kw::kDefaultMaxFrameBytes);
  m.def("frame_decode", [](const py::bytes& b) {
    auto decoded = kw::frame_decode(from_py_bytes(b));
    return py::make_tuple(decoded.blob, decoded.consumed);
  }, "Returns (blob, bytes_consumed).");

  py::class_<kw::LogServer>(m, "LogServer")
      .def(py::init([](std::string bind_address, std::filesystem::path log_path, std::size_t max_frame_bytes,
                       std::optional<kw::HillKey> display_key) {
             kw::ServerConfig config;
             config.bind_address = std::move(bind_address);
             config.log_path = std::move(log_path);
             config.max_frame_bytes = max_frame_bytes;
             config.display_key = std::move(display_key);
             return std::make_unique<kw::LogServer>(std::move(config));
           }),
           py::arg("bind_address"), py::arg("log_path"), py::arg("max_frame_bytes") = kw::kDefaultMaxFrameBytes,
           py::arg("display_key") = std::nullopt)
      .def_property_readonly("port", &kw::LogServer::port)
      .def_property_readonly("frames_written", &kw::LogServer::frames_written)
      .def("start", &kw::LogServer::start)
      .def("stop", &kw::LogServer::stop, py::call_guard<py::gil_scoped_release>())
      .def("__enter__", [](kw::LogServer& s) -> kw::LogServer& { s.start(); return s; },
           py::return_value_policy::reference)
      .def("__exit__", [](kw::LogServer& s, py::args) { py::gil_scoped_release nogil; s.stop(); });

  m.def("send_log", [](const std::string& address, const kw::EventScript& script, const kw::HillKey& key,
                       std::size_t batch_size, double timeout_s) {
    kw::SendOptions opts;
    opts.batch_size = batch_size;
    opts.ack_timeout = std::chrono::milliseconds(static_cast<long>(timeout_s * 1000));
    return kw::send_log(address, script, key, opts);
  }, py::arg("address"), py::arg("script"), py::arg("key"), py::arg("batch_size") = 32,
     py::arg("timeout") = 10.0, py::call_guard<py::gil_scoped_release>());
  m.def("read_log", &kw::read_log, py::arg("log_path"), py::arg("key"));
}

void bind_detectors(py::module_& m) {
  py::enum_<kw::DigestMode>(m, "DigestMode")
      .value("full_file", kw::DigestMode::full_file)
      .value("header_prefix", kw::DigestMode::header_prefix);

  py::class_<kw::SignatureDb>(m, "SignatureDb")
      .def_readonly("entries", &kw::SignatureDb::entries)
      .def_readonly("duplicates", &kw::SignatureDb::duplicates)
      .def("__len__", &kw::SignatureDb::size)
      .def("__contains__", &kw::SignatureDb::contains);

  auto params = [](kw::DigestMode mode, std::size_t header_len) {
    kw::DigestParams p;
    p.mode = mode;
    p.header_len = header_len;
    return p;
  };
  m.def("load_signatures", [params](const std::filesystem::path& p, kw::DigestMode mode, std::size_t header_len) {
    return kw::load_signatures(p, params(mode, header_len));
  }, py::arg("path"), py::arg("mode") = kw::DigestMode::full_file, py::arg("header_len") = kw::kDefaultHeaderLen);
  m.def("parse_signatures", [params](std::string_view text, kw::DigestMode mode, std::size_t header_len) {
    return kw::parse_signatures(text, params(mode, header_len));
  }, py::arg("text"), py::arg("mode") = kw::DigestMode::full_file, py::arg("header_len") = kw::kDefaultHeaderLen);
  m.def("sha1_hex", [](const py::bytes& b) { return kw::sha1_hex(std::string_view(b)); });
  m.def("file_digest", [params](const std::filesystem::path& p, kw::DigestMode mode, std::size_t header_len) {
    return kw::file_digest(p, params(mode, header_len));
  }, py::arg("path"), py::arg("mode") = kw::DigestMode::full_file, py::arg("header_len") = kw::kDefaultHeaderLen);

  py::class_<kw::ScanError>(m, "ScanError")
      .def_readonly("path", &kw::ScanError::path)
      .def_readonly("reason", &kw::ScanError::reason);
  py::class_<kw::AffectedFile>(m, "AffectedFile")
      .def_readonly("path", &kw::AffectedFile::path)
      .def_readonly("digest", &kw::AffectedFile::digest)
      .def_readonly("label", &kw::AffectedFile::label);
  py::class_<kw::ScanReport>(m, "ScanReport")
      .def_readonly("root", &kw::ScanReport::root)
      .def_readonly("affected", &kw::ScanReport::affected)
      .def_readonly("scanned_count", &kw::ScanReport::scanned_count)
      .def_readonly("error_entries", &kw::ScanReport::error_entries)
      .def_readonly("started", &kw::ScanReport::started)
      .def_readonly("finished", &kw::ScanReport::finished);

  m.def("scan", [](const std::filesystem::path& root, const kw::SignatureDb& db, unsigned threads) {
    return kw::scan(root, db, kw::ScanOptions{threads});
  }, py::arg("root"), py::arg("db"), py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("write_reports", [](const kw::ScanReport& r, const std::filesystem::path& out) {
    auto p = kw::write_reports(r, out);
    return py::make_tuple(p.affected, p.errors, p.result);
  });

  py::class_<kw::Rule>(m, "Rule")
      .def_readonly("token", &kw::Rule::token)
      .def_readonly("weight", &kw::Rule::weight)
      .def_readonly("description", &kw::Rule::description);
  py::class_<kw::RuleSet>(m, "RuleSet")
      .def_readonly("rules", &kw::RuleSet::rules)
      .def_readonly("threshold", &kw::RuleSet::threshold);
  py::class_<kw::Allowlist>(m, "Allowlist")
      .def(py::init<>())
      .def("add", &kw::Allowlist::add)
      .def("__contains__", &kw::Allowlist::contains)
      .def("__len__", &kw::Allowlist::size);
  py::class_<kw::Finding>(m, "Finding")
      .def_readonly("path", &kw::Finding::path)
      .def_readonly("score", &kw::Finding::score)
      .def_readonly("tokens", &kw::Finding::tokens);
  py::class_<kw::HeuristicReport>(m, "HeuristicReport")
      .def_readonly("findings", &kw::HeuristicReport::findings)
      .def_readonly("scanned_count", &kw::HeuristicReport::scanned_count)
      .def_readonly("error_entries", &kw::HeuristicReport::error_entries);

  m.def("parse_rules", &kw::parse_rules);
  m.def("load_rules", &kw::load_rules);
  m.def("default_rules_text", [] { return std::string(kw::default_rules_text()); });
  m.def("parse_allowlist", &kw::parse_allowlist);
  m.def("load_allowlist", &kw::load_allowlist);
  m.def("heuristic_scan", &kw::heuristic_scan, py::arg("root"), py::arg("rules"),
        py::arg("allowlist") = kw::Allowlist{}, py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("write_heuristic_report", &kw::write_heuristic_report);
}

}  // namespace

PYBIND11_MODULE(_keywatch, m) {
  m.doc() = "Event logging pipeline, Hill cipher, and keylogger detectors";
  bind_errors(m);
  bind_events(m);
  bind_hill(m);
  bind_transport(m);
  bind_detectors(m);
}
