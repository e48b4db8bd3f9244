"""Challenge-response authentication with a prover-side trajectory gate.

The verifier issues a random challenge; the prover computes a keyed MAC
response only if its proximity gate passes (the live candidate path matches
an enrolled reference path) or the user explicitly confirms proximity. A
relay adversary can be inserted between the endpoints: it forwards frames
verbatim in both directions, which defeats radio-proximity checks but not
the trajectory gate.

Wire format: big-endian u16 length, one type byte, payload. The channel is
pluggable; an in-process queue pair gives deterministic tests and a TCP
loopback pair backs the demo scenario.
"""

from __future__ import annotations

import hashlib
import hmac
import queue
import random
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

from .errors import ChannelClosed, MacMismatch, NoReferencePath
from .repository import Repository, ReferencePath, confirm_and_update
from .trajectory import PrimitiveSequence

CHALLENGE = 0x01
RESPONSE = 0x02
ACCEPT = 0x03
REJECT = 0x04

NONCE_LEN = 16
KEY_LEN = 32
DEFAULT_MAX_ATTEMPTS = 10


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

class InProcEndpoint:
    """Socket-shaped endpoint over a pair of byte queues."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._inbox = inbox
        self._outbox = outbox
        self._buffer = b""
        self._closed = False
        self._peer_eof = False

    def sendall(self, data: bytes) -> None:
        if self._closed:
            raise ChannelClosed("endpoint is closed")
        self._outbox.put(bytes(data))

    def recv(self, n: int) -> bytes:
        if self._buffer:
            out, self._buffer = self._buffer[:n], self._buffer[n:]
            return out
        if self._peer_eof:
            return b""
        chunk = self._inbox.get()
        if chunk is None:
            self._peer_eof = True
            return b""
        self._buffer = chunk
        return self.recv(n)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


def inproc_pair() -> tuple[InProcEndpoint, InProcEndpoint]:
    a_to_b, b_to_a = queue.Queue(), queue.Queue()
    return InProcEndpoint(b_to_a, a_to_b), InProcEndpoint(a_to_b, b_to_a)


class SocketEndpoint:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._closed = False

    def sendall(self, data: bytes) -> None:
        if self._closed:
            raise ChannelClosed("endpoint is closed")
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from None

    def recv(self, n: int) -> bytes:
        try:
            return self._sock.recv(n)
        except OSError:
            return b""

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

def _recv_exact(ep, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = ep.recv(n - len(buf))
        if not chunk:
            raise ChannelClosed("peer closed mid-frame" if buf else "peer closed")
        buf += chunk
    return buf


def send_frame(ep, ftype: int, payload: bytes = b"") -> None:
    body = bytes([ftype]) + payload
    ep.sendall(struct.pack(">H", len(body)) + body)


def recv_frame(ep) -> tuple[int, bytes]:
    header = _recv_exact(ep, 2)
    (length,) = struct.unpack(">H", header)
    body = _recv_exact(ep, length)
    return body[0], body[1:]


def recv_raw_frame(ep) -> bytes:
    """One frame as the exact bytes that crossed the wire."""
    header = _recv_exact(ep, 2)
    (length,) = struct.unpack(">H", header)
    return header + _recv_exact(ep, length)


class TranscriptTap:
    """Endpoint wrapper recording every frame sent and received."""

    def __init__(self, ep, log: list, side: str):
        self._ep = ep
        self._log = log
        self._side = side

    def sendall(self, data: bytes) -> None:
        self._log.append((self._side, "send", bytes(data)))
        self._ep.sendall(data)

    def recv(self, n: int) -> bytes:
        data = self._ep.recv(n)
        if data:
            self._log.append((self._side, "recv", bytes(data)))
        return data

    def close(self) -> None:
        self._ep.close()


# ---------------------------------------------------------------------------
# relay adversary
# ---------------------------------------------------------------------------

@dataclass
class RelayAdversary:
    """Dolev-Yao relay: forwards frames verbatim, never altering payloads."""

    latency_s: float = 0.0
    transcript: list = field(default_factory=list)

    def _pump(self, src, dst, direction: str):
        while True:
            try:
                raw = recv_raw_frame(src)
            except ChannelClosed:
                dst.close()
                return
            self.transcript.append((direction, raw))
            if self.latency_s:
                time.sleep(self.latency_s)
            try:
                dst.sendall(raw)
            except ChannelClosed:
                src.close()
                return

    def forward(self, endpoint_a, endpoint_b) -> list[threading.Thread]:
        """Start bidirectional forwarding; returns joinable task handles."""
        tasks = [
            threading.Thread(target=self._pump, args=(endpoint_a, endpoint_b, "a->b"), daemon=True),
            threading.Thread(target=self._pump, args=(endpoint_b, endpoint_a, "b->a"), daemon=True),
        ]
        for t in tasks:
            t.start()
        return tasks


def relay_forward(endpoint_a, endpoint_b, latency_s: float = 0.0) -> RelayAdversary:
    """Insert a forwarding adversary between two open endpoints; the returned
    adversary holds the transcript and the running task handles."""
    relay = RelayAdversary(latency_s=latency_s)
    relay.tasks = relay.forward(endpoint_a, endpoint_b)
    return relay


# ---------------------------------------------------------------------------
# credentials
# ---------------------------------------------------------------------------

def compute_response(key: bytes, nonce: bytes, verifier_id: str) -> bytes:
    return hmac.new(key, nonce + verifier_id.encode("utf-8"), hashlib.sha256).digest()


def verify_response(key: bytes, nonce: bytes, verifier_id: str, mac: bytes) -> None:
    expected = compute_response(key, nonce, verifier_id)
    if not hmac.compare_digest(expected, mac):
        raise MacMismatch("response MAC does not verify")


def save_keys(keys: dict[str, bytes], path) -> None:
    """One `verifier_id hex(key)` line per verifier; keys are 32 bytes."""
    with open(path, "w", encoding="utf-8") as fh:
        for vid, key in keys.items():
            fh.write(f"{vid} {key.hex()}\n")


def load_keys(path) -> dict[str, bytes]:
    keys = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vid, hexkey = line.split()
            key = bytes.fromhex(hexkey)
            if len(key) != KEY_LEN:
                raise ValueError(f"key for {vid!r} must be {KEY_LEN} bytes")
            keys[vid] = key
    return keys


# ---------------------------------------------------------------------------
# actors
# ---------------------------------------------------------------------------

class SessionResult(Enum):
    ACCEPTED = "Accepted"
    FALLBACK = "FallbackToExplicit"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class GateDecision:
    passed: bool
    attempts_used: int
    best_score: int | None


@dataclass(frozen=True)
class SessionOutcome:
    result: SessionResult
    attempts_used: int
    gate_score: int | None
    verifier_accepted: bool


def verify_proximity(ref_path: ReferencePath, candidate_source,
                     max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> GateDecision:
    """Gate decision: up to `max_attempts` comparisons at one-second steps.

    Each attempt trims the live sequence to the reference length and scores
    it against the medoid; the gate passes on the first score above the
    mixed threshold. `candidate_source(step)` yields the live sequence as
    seen `step` seconds after the trigger.
    """
    if ref_path is None:
        raise NoReferencePath("no reference path for this verifier")
    best = None
    for attempt in range(max_attempts):
        seq = candidate_source(attempt)
        ok, score = ref_path.verify(seq)
        best = score if best is None else max(best, score)
        if ok:
            return GateDecision(True, attempt + 1, best)
    return GateDecision(False, max_attempts, best)


def stationary_source(step: int) -> PrimitiveSequence:
    """A prover sitting still produces no comparable primitives."""
    return PrimitiveSequence()


def static_source(seq: PrimitiveSequence):
    return lambda step: seq


class Verifier:
    """Issues challenges and checks MAC responses; knows nothing about the
    trajectory gate (the defense is prover-local by design)."""

    def __init__(self, verifier_id: str, key: bytes):
        self.verifier_id = verifier_id
        self.key = key

    def handle_session(self, ep, nonce: bytes) -> str:
        send_frame(ep, CHALLENGE, nonce + self.verifier_id.encode("utf-8"))
        try:
            ftype, payload = recv_frame(ep)
        except ChannelClosed:
            return "no_response"
        if ftype == RESPONSE:
            try:
                verify_response(self.key, nonce, self.verifier_id, payload)
            except MacMismatch:
                send_frame(ep, REJECT)
                return "rejected"
            send_frame(ep, ACCEPT)
            return "accepted"
        return "declined"


class Prover:
    def __init__(self, keys: dict[str, bytes], repo: Repository, candidate_source,
                 gate_enabled: bool = True, user_confirms: bool = False,
                 max_attempts: int = DEFAULT_MAX_ATTEMPTS):
        self.keys = keys
        self.repo = repo
        self.candidate_source = candidate_source
        self.gate_enabled = gate_enabled
        self.user_confirms = user_confirms
        self.max_attempts = max_attempts

    def handle_session(self, ep) -> dict:
        ftype, payload = recv_frame(ep)
        if ftype != CHALLENGE:
            ep.close()
            return {"state": "protocol_error"}
        nonce, vid = payload[:NONCE_LEN], payload[NONCE_LEN:].decode("utf-8")
        ref = self.repo.reference_paths(vid)[0]
        fallback = False
        if self.gate_enabled:
            gate = verify_proximity(ref, self.candidate_source, self.max_attempts)
            if not gate.passed:
                if not self.user_confirms:
                    # user declined: credentials stay locked, no response ever
                    send_frame(ep, REJECT)
                    return {"state": "declined", "gate": gate}
                fallback = True
                candidate = self.candidate_source(self.max_attempts - 1)
                if len(candidate):
                    self.repo.paths[vid][0] = confirm_and_update(ref, candidate)
        else:
            gate = GateDecision(True, 0, None)
        send_frame(ep, RESPONSE, compute_response(self.keys[vid], nonce, vid))
        try:
            verdict, _ = recv_frame(ep)
        except ChannelClosed:
            verdict = REJECT
        return {
            "state": "accepted" if verdict == ACCEPT else "rejected",
            "gate": gate,
            "fallback": fallback,
        }


# ---------------------------------------------------------------------------
# session driver
# ---------------------------------------------------------------------------

def _tcp_listener():
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind(("127.0.0.1", 0))
    srv.listen(1)
    return srv, srv.getsockname()[1]


def _connect(port: int) -> SocketEndpoint:
    return SocketEndpoint(socket.create_connection(("127.0.0.1", port)))


def run_session(prover: Prover, verifier: Verifier, transport: str = "inproc",
                relay: RelayAdversary | None = None, seed: int = 0,
                transcript: list | None = None) -> SessionOutcome:
    """Drive one full challenge-response session and join all actors.

    With a relay, the prover talks to the adversary's endpoint and the
    adversary forwards verbatim to the verifier, mimicking an artificially
    extended radio channel.
    """
    nonce = random.Random(seed).randbytes(NONCE_LEN)
    log = transcript if transcript is not None else []

    if transport == "inproc":
        if relay is not None:
            p_end, r_end_p = inproc_pair()
            r_end_v, v_end = inproc_pair()
            relay.forward(r_end_p, r_end_v)
        else:
            p_end, v_end = inproc_pair()
    elif transport == "tcp":
        srv_v, port_v = _tcp_listener()
        accepted_v = {}

        def accept_v():
            conn, _ = srv_v.accept()
            accepted_v["ep"] = SocketEndpoint(conn)

        t_acc = threading.Thread(target=accept_v, daemon=True)
        t_acc.start()
        if relay is not None:
            srv_r, port_r = _tcp_listener()
            accepted_r = {}

            def accept_r():
                conn, _ = srv_r.accept()
                accepted_r["ep"] = SocketEndpoint(conn)

            t_acc_r = threading.Thread(target=accept_r, daemon=True)
            t_acc_r.start()
            p_end = _connect(port_r)
            t_acc_r.join()
            relay_to_v = _connect(port_v)
            t_acc.join()
            relay.forward(accepted_r["ep"], relay_to_v)
            srv_r.close()
        else:
            p_end = _connect(port_v)
            t_acc.join()
        v_end = accepted_v["ep"]
        srv_v.close()
    else:
        raise ValueError(f"unknown transport {transport!r}")

    p_end = TranscriptTap(p_end, log, "prover")
    result = {}

    def run_verifier():
        result["verifier"] = verifier.handle_session(v_end, nonce)
        v_end.close()

    t_v = threading.Thread(target=run_verifier, daemon=True)
    t_v.start()
    try:
        report = prover.handle_session(p_end)
    finally:
        # unblock the verifier even when the prover dies mid-session
        p_end.close()
        t_v.join()

    verifier_accepted = result.get("verifier") == "accepted"
    gate = report.get("gate")
    if report["state"] == "declined":
        outcome = SessionResult.REJECTED
    elif verifier_accepted and report.get("fallback"):
        outcome = SessionResult.FALLBACK
    elif verifier_accepted:
        outcome = SessionResult.ACCEPTED
    else:
        outcome = SessionResult.REJECTED
    return SessionOutcome(
        result=outcome,
        attempts_used=gate.attempts_used if gate else 0,
        gate_score=gate.best_score if gate else None,
        verifier_accepted=verifier_accepted,
    )
