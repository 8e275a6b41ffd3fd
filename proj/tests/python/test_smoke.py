import hashlib
import os

import pytest

import keywatch as kw


KEY = [[3, 3], [2, 5]]


def test_hill_letters_example():
    key = kw.make_key(KEY, 26)
    blob = kw.encrypt(b"HELP", key)
    assert blob.body == b"HIAT"
    assert kw.decrypt(blob, key) == b"HELP"
    inv = kw.invert_key(key)
    assert inv.entries == [[15, 17], [20, 9]]


def test_hill_bytes_round_trip_through_wire_formats():
    key = kw.make_key([[1, 2, 3], [0, 1, 4], [0, 0, 1]], 256)
    data = bytes(range(256)) + b"tail"
    blob = kw.parse_blob(kw.serialize_blob(kw.encrypt(data, key)))
    assert kw.decrypt(blob, key) == data
    frame = kw.frame_encode(blob)
    decoded, consumed = kw.frame_decode(frame)
    assert consumed == len(frame)
    assert kw.decrypt(decoded, key) == data


def test_key_errors_are_typed():
    with pytest.raises(kw.KeyError, match="odd"):
        kw.make_key([[2, 4], [6, 8]], 256)
    with pytest.raises(kw.DimensionError):
        kw.make_key([[1]], 26)
    with pytest.raises(kw.ArithmeticError):
        kw.mod_inverse(13, 26)
    assert issubclass(kw.DimensionError, kw.KeywatchError)


def test_event_script_round_trip():
    script = kw.parse_event_script("10 key_press A\n20 mouse_click 100 200 left\n")
    assert len(script) == 2
    assert script.events[1].button == kw.MouseButton.left
    assert kw.serialize_events(script) == "10 key_press A\n20 mouse_click 100 200 left\n"
    with pytest.raises(kw.ParseError, match="line 1"):
        kw.parse_event_script("10 key_press")
    synthetic = kw.generate_synthetic(42, 50)
    assert kw.serialize_events(kw.parse_event_script(kw.serialize_events(synthetic))) == kw.serialize_events(synthetic)
    captured = kw.capture_lines(["hi"])
    assert [e.key for e in captured.events] == ["h", "i", "ENTER"]


def test_loopback_send_and_read_log(tmp_path):
    key = kw.make_key([[1, 2, 3], [0, 1, 4], [0, 0, 1]], 256)
    script = kw.generate_synthetic(7, 100)
    log = tmp_path / "server.log"
    with kw.LogServer("127.0.0.1:0", str(log)) as server:
        acked = kw.send_log(f"127.0.0.1:{server.port}", script, key, batch_size=32)
        assert acked == 4
    assert server.frames_written == 4
    back = kw.read_log(str(log), key)
    assert kw.serialize_events(back) == kw.serialize_events(script)
    wrong = kw.make_key([[1, 0, 0], [5, 1, 0], [0, 0, 1]], 256)
    with pytest.raises(kw.ContentError):
        kw.read_log(str(log), wrong)


def test_signature_scan_and_reports(tmp_path):
    root = tmp_path / "tree"
    (root / "sub").mkdir(parents=True)
    (root / "clean.txt").write_bytes(b"clean")
    (root / "sub" / "bad.bin").write_bytes(b"bad payload")
    digest = hashlib.sha1(b"bad payload").hexdigest()
    assert kw.sha1_hex(b"abc") == hashlib.sha1(b"abc").hexdigest()
    db = kw.parse_signatures(f"{digest} demo\n")
    assert digest in db
    report = kw.scan(str(root), db)
    assert [str(a.path) for a in report.affected] == [str(root / "sub" / "bad.bin")]
    assert report.affected[0].label == "demo"
    assert report.scanned_count == 2
    paths = kw.write_reports(report, str(tmp_path / "out"))
    for name in ("affected.txt", "errors.txt", "result.txt"):
        assert (tmp_path / "out" / name).exists()
    assert len(paths) == 3


def test_heuristic_scan_with_allowlist(tmp_path):
    root = tmp_path / "tree"
    root.mkdir()
    flagged = root / "hook.c"
    flagged.write_text("SetWindowsHookEx(WH_KEYBOARD_LL, proc, 0, 0);")
    (root / "plain.c").write_text("int main(void) { return 0; }")
    rules = kw.parse_rules(kw.default_rules_text())
    report = kw.heuristic_scan(str(root), rules)
    assert [os.fspath(f.path) for f in report.findings] == [str(flagged)]
    assert report.findings[0].score == 5
    allow = kw.parse_allowlist(f"{flagged}\n")
    assert kw.heuristic_scan(str(root), rules, allow).findings == []
    with pytest.raises(kw.ParseError):
        kw.parse_rules("1\tabc\tx\n")
