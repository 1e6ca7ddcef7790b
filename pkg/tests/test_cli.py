"""End-to-end tests for the command-line interface.

Every test drives ``python -m mechsketch`` in a subprocess, so argument
parsing, exit codes, printed output, and written artifacts are exercised
exactly as a shell user sees them.
"""

from __future__ import annotations

import json
import math
import re
import signal
import socket
import subprocess
import sys
import threading
import xml.etree.ElementTree as ET

import numpy as np

from mechsketch.server import WSClient
from mechsketch.sketch import SketchDocument, StrokeMode

from .conftest import FIXTURE_DIR
from .oracles import rocker_limit_travel

CSV_HEADER = "t,x,y,link_id,px,py"


def run_cli(*args, timeout=60):
    return subprocess.run(
        [sys.executable, "-m", "mechsketch", *map(str, args)],
        capture_output=True, text=True, timeout=timeout)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_four_bar_writes_csv_and_svg(tmp_path):
    csv_path = tmp_path / "trace.csv"
    svg_path = tmp_path / "trace.svg"
    res = run_cli("simulate", FIXTURE_DIR / "fb1.mech.json",
                  "--csv", csv_path, "--svg", svg_path)
    assert res.returncode == 0, res.stderr
    assert "instance 1: mobility 1, Grashof crank-rocker" in res.stdout
    assert "steps: 360, status: ok" in res.stdout
    assert f"wrote {csv_path}" in res.stdout
    assert f"wrote {svg_path}" in res.stdout

    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 361          # one sample per step plus the start
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == 6
        [float(f) for f in fields]        # every cell is numeric

    root = ET.parse(svg_path).getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall(".//{*}polyline")) >= 1   # the traced path
    assert len(root.findall(".//{*}circle")) >= 4     # one marker per joint


def test_simulate_csv_output_is_byte_identical_across_runs(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        res = run_cli("simulate", FIXTURE_DIR / "fb1.mech.json", "--csv", path)
        assert res.returncode == 0, res.stderr
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_simulate_duration_and_dt_flags_control_stepping():
    res = run_cli("simulate", FIXTURE_DIR / "fb1.mech.json",
                  "--duration", "0.5", "--dt", "0.01")
    assert res.returncode == 0, res.stderr
    assert "steps: 50, status: ok" in res.stdout


def test_simulate_driver_override_rescales_the_cycle():
    # Doubling the rate halves the cycle duration; the default step is still
    # one degree of crank travel, so a full cycle is 360 steps either way.
    res = run_cli("simulate", FIXTURE_DIR / "fb1.mech.json",
                  "--driver", "5=2.0", "--cycles", "1")
    assert res.returncode == 0, res.stderr
    assert "steps: 360, status: ok" in res.stdout


def test_simulate_rejects_malformed_driver_flag():
    res = run_cli("simulate", FIXTURE_DIR / "fb1.mech.json", "--driver", "5")
    assert res.returncode == 1
    assert res.stderr.startswith("error:")


def test_simulate_structure_fails_cleanly():
    res = run_cli("simulate", FIXTURE_DIR / "triangle.mech.json")
    assert res.returncode == 1
    assert res.stderr.startswith("error:")
    assert "mobility 0" in res.stderr


def test_simulate_rocker_halts_at_the_travel_limit():
    res = run_cli("simulate", FIXTURE_DIR / "rocker.mech.json")
    assert res.returncode == 2
    assert "status: locked" in res.stdout
    match = re.search(r"blocked at joint 5, driver coordinate (\S+)",
                      res.stdout)
    assert match, res.stdout
    assert math.isclose(float(match.group(1)), rocker_limit_travel(),
                        abs_tol=1e-6)


def test_simulate_reports_unreadable_and_malformed_files(tmp_path):
    res = run_cli("simulate", tmp_path / "missing.mech.json")
    assert res.returncode == 1
    assert res.stderr.startswith("error:")

    bad = tmp_path / "bad.mech.json"
    bad.write_text("this is not a document {{{", encoding="utf-8")
    res = run_cli("simulate", bad)
    assert res.returncode == 1
    assert res.stderr.startswith("error:")
    assert "malformed" in res.stderr


# ---------------------------------------------------------------------------
# recognize
# ---------------------------------------------------------------------------

def test_recognize_reports_links_joints_and_instances():
    res = run_cli("recognize", FIXTURE_DIR / "fb1.mech.json")
    assert res.returncode == 0, res.stderr
    assert "links: 4" in res.stdout
    assert "joints: 4" in res.stdout
    assert res.stdout.count("revolute") == 4
    assert "instances: 1" in res.stdout
    assert "instance 1: links [1, 2, 3, 4], mobility 1" in res.stdout


def test_recognize_empty_document(tmp_path):
    path = tmp_path / "empty.mech.json"
    path.write_bytes(SketchDocument().save())
    res = run_cli("recognize", path)
    assert res.returncode == 0, res.stderr
    assert "no ink strokes" in res.stdout
    assert "links: 0" in res.stdout
    assert "joints: 0" in res.stdout


def test_recognize_warns_on_dangling_gesture(tmp_path):
    doc = SketchDocument()
    angles = 2.0 * math.pi * np.arange(48) / 48.0
    circle = np.column_stack([0.3 * np.cos(angles), 0.3 * np.sin(angles)])
    doc.add_stroke(circle, [float(i) for i in range(48)], StrokeMode.GESTURE)
    path = tmp_path / "dangling.mech.json"
    path.write_bytes(doc.save())

    res = run_cli("recognize", path)
    assert res.returncode == 0, res.stderr
    assert "warning:" in res.stdout
    assert "touches 0 link(s)" in res.stdout


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def test_serve_reports_bind_failure():
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        res = run_cli("serve", "--host", "127.0.0.1", "--port", port)
    finally:
        blocker.close()
    assert res.returncode == 1
    assert f"error: cannot bind 127.0.0.1:{port}" in res.stderr


def test_serve_accepts_connections_and_stops_on_interrupt(tmp_path):
    config = tmp_path / "server.json"
    config.write_text(json.dumps({"host": "127.0.0.1", "port": 0}),
                      encoding="utf-8")
    proc = subprocess.Popen(
        [sys.executable, "-u", "-m", "mechsketch", "serve",
         "--config", str(config)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    watchdog = threading.Timer(30, proc.kill)
    watchdog.start()
    try:
        line = proc.stdout.readline()
        match = re.match(r"listening on 127\.0\.0\.1:(\d+)", line)
        assert match, f"unexpected banner: {line!r}"
        port = int(match.group(1))

        client = WSClient("127.0.0.1", port)
        try:
            reply = client.request("create_session")
            assert reply["event"] == "session_created"
            assert reply["revision"] == 0
        finally:
            client.close()

        proc.send_signal(signal.SIGINT)
        assert proc.wait(timeout=15) == 0
    finally:
        watchdog.cancel()
        proc.kill()
        proc.wait(timeout=15)
