"""WebSocket transport for the session service.

Implements the server side of RFC 6455 directly on top of ``socket`` — the
handshake, frame codec, ping/pong heartbeat, and close handshake — plus a
small blocking client used by the tests and available to scripts.  Every
message is one JSON object per text frame; the semantics of those objects
live in :mod:`.service` and PROTOCOL.md.

Threads per connection: a reader (parses frames, dispatches commands) and a
writer (drains an outbox queue), so slow consumers never stall the
simulation workers that broadcast into the outbox.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import queue
import socket
import struct
import threading
import time

from .errors import MechSketchError
from .service import DEFAULT_THROTTLE, SessionHub, error_event

log = logging.getLogger("mechsketch.server")

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_FRAME = 32 * 1024 * 1024


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def _mask(payload: bytes, key: bytes) -> bytes:
    # XOR with the 4-byte key, vectorized via int; fast enough for our sizes
    if not payload:
        return payload
    extended = (key * (len(payload) // 4 + 1))[:len(payload)]
    return (int.from_bytes(payload, "big") ^ int.from_bytes(extended, "big")) \
        .to_bytes(len(payload), "big")


def encode_frame(opcode: int, payload: bytes, masked: bool) -> bytes:
    head = bytearray([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if masked else 0
    if n < 126:
        head.append(mask_bit | n)
    elif n < 1 << 16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if masked:
        key = os.urandom(4)
        return bytes(head) + key + _mask(payload, key)
    return bytes(head) + payload


class _SocketReader:
    """Buffered exact-count reads over a socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buffer = b""

    def read_exact(self, n: int) -> bytes:
        while len(self.buffer) < n:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("connection closed")
            self.buffer += chunk
        out, self.buffer = self.buffer[:n], self.buffer[n:]
        return out

    def read_until(self, marker: bytes, limit: int = 65536) -> bytes:
        while marker not in self.buffer:
            if len(self.buffer) > limit:
                raise ConnectionError("handshake too large")
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("connection closed during handshake")
            self.buffer += chunk
        idx = self.buffer.index(marker) + len(marker)
        out, self.buffer = self.buffer[:idx], self.buffer[idx:]
        return out


def read_frame(reader: _SocketReader) -> tuple[int, bool, bytes]:
    """Read one frame; returns (opcode, fin, unmasked payload)."""
    b0, b1 = reader.read_exact(2)
    fin = bool(b0 & 0x80)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    n = b1 & 0x7F
    if n == 126:
        (n,) = struct.unpack(">H", reader.read_exact(2))
    elif n == 127:
        (n,) = struct.unpack(">Q", reader.read_exact(8))
    if n > MAX_FRAME:
        raise ConnectionError(f"frame of {n} bytes exceeds limit")
    key = reader.read_exact(4) if masked else None
    payload = reader.read_exact(n)
    if key:
        payload = _mask(payload, key)
    return opcode, fin, payload


def read_message(reader: _SocketReader, on_control) -> tuple[int, bytes] | None:
    """Read one complete (possibly fragmented) data message.

    Control frames interleaved between fragments go to ``on_control``.
    Returns None when the peer sent a close frame.
    """
    opcode = None
    parts: list[bytes] = []
    while True:
        op, fin, payload = read_frame(reader)
        if op == OP_CLOSE:
            return None
        if op in (OP_PING, OP_PONG):
            on_control(op, payload)
            continue
        if op == OP_CONT:
            if opcode is None:
                raise ConnectionError("continuation frame without a start")
        else:
            opcode = op
        parts.append(payload)
        if fin:
            return opcode, b"".join(parts)


class _Connection:
    """One accepted client: reader + writer threads and an outbox."""

    def __init__(self, server: "SessionServer", sock: socket.socket, peer):
        self.server = server
        self.sock = sock
        self.peer = peer
        self.reader = _SocketReader(sock)
        self.outbox: "queue.Queue[bytes | None]" = queue.Queue()
        self.alive = True
        self.last_seen = time.monotonic()
        self.reader_thread = threading.Thread(target=self._read_loop, daemon=True)
        self.writer_thread = threading.Thread(target=self._write_loop, daemon=True)

    # -- sending ---------------------------------------------------------

    def send_event(self, event: dict) -> None:
        data = json.dumps(event, ensure_ascii=False).encode("utf-8")
        self.send_frame(encode_frame(OP_TEXT, data, masked=False))

    def send_frame(self, frame: bytes) -> None:
        if self.alive:
            self.outbox.put(frame)

    def _write_loop(self) -> None:
        while True:
            frame = self.outbox.get()
            if frame is None:
                break
            try:
                self.sock.sendall(frame)
            except OSError:
                break
        self._teardown()

    # -- receiving ---------------------------------------------------------

    def _handshake(self) -> bool:
        request = self.reader.read_until(b"\r\n\r\n").decode("latin-1")
        lines = request.split("\r\n")
        parts = lines[0].split(" ")
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                name, _, value = line.partition(":")
                headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if (len(parts) < 3 or parts[0] != "GET"
                or "websocket" not in headers.get("upgrade", "").lower()
                or not key):
            self.sock.sendall(b"HTTP/1.1 400 Bad Request\r\n"
                              b"Connection: close\r\n\r\n")
            return False
        response = ("HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n")
        self.sock.sendall(response.encode("ascii"))
        return True

    def _on_control(self, op: int, payload: bytes) -> None:
        self.last_seen = time.monotonic()
        if op == OP_PING:
            self.send_frame(encode_frame(OP_PONG, payload, masked=False))

    def _read_loop(self) -> None:
        try:
            while self.alive:
                message = read_message(self.reader, self._on_control)
                if message is None:  # peer closed; close() echoes the frame
                    break
                self.last_seen = time.monotonic()
                opcode, data = message
                if opcode != OP_TEXT:
                    continue
                self._dispatch(data)
        except (ConnectionError, OSError):
            pass
        except Exception:
            log.exception("connection %s: reader failed", self.peer)
        finally:
            self.close()

    def _dispatch(self, data: bytes) -> None:
        seq = None
        try:
            envelope = json.loads(data.decode("utf-8"))
            if isinstance(envelope, dict):
                seq = envelope.get("seq")
            replies = self.server.hub.handle(envelope, outbox=self.send_event)
        except MechSketchError as exc:
            session = None
            if isinstance(envelope, dict):
                session = self.server.hub.sessions.get(envelope.get("session"))
            self.send_event(error_event(seq, exc, session))
        except (ValueError, TypeError) as exc:  # bad JSON and kin
            self.send_event({"event": "error", "seq": seq,
                             "error": "BadEnvelope", "message": str(exc)})
        else:
            for event in replies:
                self.send_event(event)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        ok = False
        try:
            ok = self._handshake()
        except (ConnectionError, OSError):
            pass
        if not ok:
            self._teardown()
            return
        self.writer_thread.start()
        self.reader_thread.start()

    def close(self) -> None:
        if not self.alive:
            return
        self.alive = False
        self.outbox.put(encode_frame(OP_CLOSE, b"", masked=False))
        self.outbox.put(None)  # flush, then writer tears down the socket
        self.server._forget(self)

    def _teardown(self) -> None:
        self.alive = False
        try:
            self.sock.close()
        except OSError:
            pass
        self.server._forget(self)


class SessionServer:
    """Serves the session protocol over WebSocket on host:port."""

    def __init__(self, host: str, port: int, throttle: float = DEFAULT_THROTTLE,
                 ping_interval: float = 10.0, ping_timeout: float = 30.0):
        self.hub = SessionHub(throttle=throttle)
        self.ping_interval = ping_interval
        self.ping_timeout = ping_timeout
        self._sock = socket.create_server((host, port))
        self.host, self.port = self._sock.getsockname()[:2]
        self._stop = threading.Event()
        self._connections: set[_Connection] = set()
        self._conn_lock = threading.Lock()
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)
        self._heartbeat_thread = threading.Thread(target=self._heartbeat_loop,
                                                  daemon=True)
        self._started = False

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        if not self._started:
            self._started = True
            self._accept_thread.start()
            self._heartbeat_thread.start()

    def serve_forever(self) -> None:
        self.start()
        while not self._stop.wait(0.2):
            pass

    def shutdown(self) -> None:
        if self._stop.is_set():
            return
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        with self._conn_lock:
            connections = list(self._connections)
        for conn in connections:
            conn.close()
        self.hub.shutdown()

    # -- internals -----------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, peer = self._sock.accept()
            except OSError:
                break
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(self, sock, peer)
            with self._conn_lock:
                self._connections.add(conn)
            conn.start()

    def _heartbeat_loop(self) -> None:
        while not self._stop.wait(self.ping_interval):
            now = time.monotonic()
            with self._conn_lock:
                connections = list(self._connections)
            for conn in connections:
                if now - conn.last_seen > self.ping_timeout:
                    log.info("connection %s: heartbeat timeout", conn.peer)
                    conn.close()
                else:
                    conn.send_frame(encode_frame(OP_PING, b"hb", masked=False))

    def _forget(self, conn: _Connection) -> None:
        with self._conn_lock:
            self._connections.discard(conn)


class WSClient:
    """Small blocking WebSocket client for tests and scripting.

    Collects every incoming event in arrival order; :meth:`request` sends a
    command and returns the events answering its seq, buffering everything
    else (broadcast deltas, run updates) for later inspection.
    """

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.reader = _SocketReader(self.sock)
        self.timeout = timeout
        self._seq = 0
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        request = (f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
                   "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                   f"Sec-WebSocket-Key: {key}\r\n"
                   "Sec-WebSocket-Version: 13\r\n\r\n")
        self.sock.sendall(request.encode("ascii"))
        response = self.reader.read_until(b"\r\n\r\n").decode("latin-1")
        status = response.split("\r\n")[0]
        if " 101 " not in f" {status} ":
            raise ConnectionError(f"handshake rejected: {status}")
        headers = {}
        for line in response.split("\r\n")[1:]:
            if ":" in line:
                name, _, value = line.partition(":")
                headers[name.strip().lower()] = value.strip()
        if headers.get("sec-websocket-accept") != accept_key(key):
            raise ConnectionError("handshake accept key mismatch")

    # -- frames -> events -----------------------------------------------------

    def _on_control(self, op: int, payload: bytes) -> None:
        if op == OP_PING:
            self.sock.sendall(encode_frame(OP_PONG, payload, masked=True))

    def recv(self, timeout: float | None = None) -> dict | None:
        """Next event, or None if the server closed. Raises TimeoutError.

        The timeout is a deadline over the whole call: interleaved control
        frames (heartbeat pings) are answered without restarting the clock,
        so a steady ping stream cannot stall a bounded wait forever.
        """
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        opcode = None
        parts: list[bytes] = []
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("no event within timeout")
            self.sock.settimeout(remaining)
            try:
                op, fin, payload = read_frame(self.reader)
            except socket.timeout:
                raise TimeoutError("no event within timeout") from None
            if op == OP_CLOSE:
                try:
                    self.sock.sendall(encode_frame(OP_CLOSE, b"", masked=True))
                except OSError:
                    pass
                return None
            if op in (OP_PING, OP_PONG):
                self._on_control(op, payload)
                continue
            if op == OP_CONT:
                if opcode is None:
                    raise ConnectionError("continuation frame without a start")
            else:
                opcode = op
            parts.append(payload)
            if fin:
                return json.loads(b"".join(parts).decode("utf-8"))

    def send(self, envelope: dict) -> int:
        if "seq" not in envelope:
            self._seq += 1
            envelope = {"seq": self._seq, **envelope}
        data = json.dumps(envelope, ensure_ascii=False).encode("utf-8")
        self.sock.sendall(encode_frame(OP_TEXT, data, masked=True))
        return envelope["seq"]

    # -- conveniences ------------------------------------------------------

    def wait_for(self, predicate, timeout: float | None = None) -> dict:
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("predicate not satisfied within timeout")
            event = self.recv(timeout=remaining)
            if event is None:
                raise ConnectionError("server closed while waiting")
            if predicate(event):
                return event

    def request(self, cmd: str, **fields) -> dict:
        """Send a command and return the first event carrying its seq.

        Raises the protocol error as a RuntimeError when the reply is an
        error event.
        """
        seq = self.send({"cmd": cmd, **fields})
        event = self.wait_for(lambda e: e.get("seq") == seq)
        if event.get("event") == "error":
            raise RuntimeError(f"{event['error']}: {event['message']}")
        return event

    def drain(self, duration: float = 0.05) -> list[dict]:
        """Collect whatever arrives within ``duration`` seconds."""
        events = []
        deadline = time.monotonic() + duration
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return events
            try:
                event = self.recv(timeout=remaining)
            except TimeoutError:
                return events
            if event is None:
                return events
            events.append(event)

    def close(self) -> None:
        try:
            self.sock.sendall(encode_frame(OP_CLOSE, b"", masked=True))
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass
