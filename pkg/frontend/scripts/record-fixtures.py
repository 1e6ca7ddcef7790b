"""Record genuine session-protocol event streams for the UI tests.

Starts the Python session server, drives it over a real WebSocket, and dumps
every server event verbatim to tests/fixtures/fb1-session.json.  The UI test
suite replays these streams through the client store and view-model, so the
node-for-node comparisons are against actual server output, not hand-written
mocks.

Run from the repository root (the Python package must be installed):

    python3 frontend/scripts/record-fixtures.py
"""

from __future__ import annotations

import json
import math
import pathlib

from mechsketch.server import SessionServer, WSClient

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "tests" / "fixtures" / "fb1-session.json"
FB1_TEXT = (ROOT.parent / "fixtures" / "fb1.mech.json").read_text(encoding="utf-8")


class Recorder:
    """Sends commands and keeps every server event, in arrival order."""

    def __init__(self, client: WSClient):
        self.client = client
        self.events: list[dict] = []
        self.session: str | None = None

    def command(self, cmd: str, terminal: str, record: bool = True, **fields) -> dict:
        if self.session is not None:
            fields.setdefault("session", self.session)
        seq = self.client.send({"cmd": cmd, **fields})
        while True:
            event = self.client.recv(timeout=30)
            if event is None:
                raise ConnectionError("server closed during recording")
            if record:
                self.events.append(event)
            if event.get("seq") == seq:
                if event.get("event") == "error":
                    raise RuntimeError(f"{event['error']}: {event['message']}")
                if event.get("event") == terminal:
                    return event

    def start_session(self) -> None:
        created = self.command("create_session", terminal="session_created")
        self.session = created["session"]


def record_recognize(server) -> dict:
    """Sketch-to-mechanism flow: strokes, recognition, build, input choice."""
    client = WSClient(server.host, server.port)
    try:
        rec = Recorder(client)
        rec.start_session()
        for stroke in json.loads(FB1_TEXT)["strokes"]:
            rec.command("add_stroke", terminal="delta", points=stroke["points"],
                        t=stroke["t"], mode=stroke["mode"])
        rec.command("recognize", terminal="hypotheses")
        rec.command("build", terminal="built")
        rec.command("mark_ground", terminal="delta", link=1)
        rec.command("select_input", terminal="delta", joint=5)
        rec.command("set_driver", terminal="delta", joint=5, rate=1.0)
        snapshot = rec.command("snapshot", terminal="snapshot", record=False)
        return {"events": rec.events, "snapshot": snapshot}
    finally:
        client.close()


def record_drag(server, steps: int = 18) -> dict:
    """Input-joint drag: scrub the driver from 0 to 90 degrees."""
    client = WSClient(server.host, server.port)
    try:
        rec = Recorder(client)
        rec.start_session()
        rec.command("load", terminal="delta", data=FB1_TEXT)
        for k in range(1, steps + 1):
            rec.command("scrub", terminal="scrubbed", joint=5,
                        target=k * (math.pi / 2.0) / steps)
        snapshot = rec.command("snapshot", terminal="snapshot", record=False)
        return {"events": rec.events, "snapshot": snapshot}
    finally:
        client.close()


def record_run(server) -> dict:
    """Full-cycle run streaming the coupler-midpoint trace."""
    client = WSClient(server.host, server.port)
    try:
        rec = Recorder(client)
        rec.start_session()
        rec.command("load", terminal="delta", data=FB1_TEXT)
        rec.command("run", terminal="run_finished", duration=2.0 * math.pi,
                    throttle=120.0)
        snapshot = rec.command("snapshot", terminal="snapshot", record=False)
        return {"events": rec.events, "snapshot": snapshot}
    finally:
        client.close()


def main() -> int:
    server = SessionServer("127.0.0.1", 0)
    server.start()
    try:
        fixture = {
            "recognize": record_recognize(server),
            "drag": record_drag(server),
            "run": record_run(server),
        }
    finally:
        server.shutdown()

    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    with open(FIXTURE, "w", encoding="utf-8") as fh:
        json.dump(fixture, fh, indent=1)
        fh.write("\n")
    sizes = {k: len(v["events"]) for k, v in fixture.items()}
    print(f"wrote {FIXTURE} ({FIXTURE.stat().st_size} bytes), events: {sizes}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
