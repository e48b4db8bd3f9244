"""Trajectory primitives: the M/S/L/R symbol sequences and their plumbing.

A trajectory is a temporally ordered sequence of primitives. Movement mode
symbols (M = moving, S = stationary) arrive at a fixed cadence, one per
5-second block; turn symbols (L/R, one per 15 degrees of turn) arrive
opportunistically and take precedence over movement symbols that overlap
them in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError

SYMBOLS = ("M", "S", "L", "R")
MOVEMENT_BLOCK_NS = 5_000_000_000  # one M/S primitive covers 5 s


@dataclass(frozen=True)
class Primitive:
    symbol: str
    t_ns: int

    def __post_init__(self):
        if self.symbol not in SYMBOLS:
            raise ValueError(f"unknown primitive symbol {self.symbol!r}")


@dataclass(frozen=True)
class PrimitiveSequence:
    """An immutable, time-ordered list of primitives."""

    primitives: tuple[Primitive, ...] = field(default_factory=tuple)

    def __post_init__(self):
        prims = tuple(self.primitives)
        object.__setattr__(self, "primitives", prims)
        for a, b in zip(prims, prims[1:]):
            if b.t_ns < a.t_ns:
                raise ValueError("primitive timestamps must be non-decreasing")

    def __len__(self):
        return len(self.primitives)

    def __iter__(self):
        return iter(self.primitives)

    def __getitem__(self, i):
        return self.primitives[i]

    @property
    def symbols(self) -> str:
        return "".join(p.symbol for p in self.primitives)

    @property
    def duration_s(self) -> float:
        if not self.primitives:
            return 0.0
        return (self.primitives[-1].t_ns - self.primitives[0].t_ns) / 1e9

    @classmethod
    def from_pairs(cls, pairs) -> "PrimitiveSequence":
        return cls(tuple(Primitive(sym, int(t)) for sym, t in pairs))


def merge_streams(ms_stream, turn_events) -> PrimitiveSequence:
    """Combine movement primitives and turn events, turns taking precedence.

    An M/S primitive is taken to cover the 5 s block starting at its
    timestamp; any such block that overlaps a turn's [t_begin, t_end]
    interval is dropped. Each turn contributes its run of L or R symbols,
    all stamped at t_begin.
    """
    intervals = [(ev.t_begin_ns, ev.t_end_ns) for ev in turn_events]
    out = []
    for prim in ms_stream:
        block = (prim.t_ns, prim.t_ns + MOVEMENT_BLOCK_NS)
        if any(b0 < block[1] and block[0] < b1 for b0, b1 in intervals):
            continue
        out.append(prim)
    for ev in turn_events:
        for sym in ev.symbols:
            out.append(Primitive(sym, ev.t_begin_ns))
    out.sort(key=lambda p: p.t_ns)
    return PrimitiveSequence(tuple(out))


def strip_stationary(seq: PrimitiveSequence) -> PrimitiveSequence:
    """Drop all S primitives; survivors keep their timestamps."""
    return PrimitiveSequence(tuple(p for p in seq if p.symbol != "S"))


def trim_to_duration(seq: PrimitiveSequence, duration_s: float) -> PrimitiveSequence:
    """Keep the trailing `duration_s` seconds, anchored at the last primitive.

    The interval is closed: a primitive exactly at t_last - duration is
    retained. Sequences shorter than the window pass through unchanged.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    if not seq.primitives:
        return seq
    t_last = seq.primitives[-1].t_ns
    cutoff = t_last - int(round(duration_s * 1e9))
    return PrimitiveSequence(tuple(p for p in seq if p.t_ns >= cutoff))


def serialize(seq: PrimitiveSequence) -> str:
    """One primitive per line, `symbol,t_ns`."""
    return "".join(f"{p.symbol},{p.t_ns}\n" for p in seq)


def parse(text: str) -> PrimitiveSequence:
    prims = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected `symbol,t_ns`, got {line!r}", line=lineno)
        sym, t_text = parts
        if sym not in SYMBOLS:
            raise ParseError(f"unknown symbol {sym!r}", line=lineno)
        try:
            t_ns = int(t_text)
        except ValueError:
            raise ParseError(f"bad timestamp {t_text!r}", line=lineno) from None
        prims.append(Primitive(sym, t_ns))
    try:
        return PrimitiveSequence(tuple(prims))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load(path) -> PrimitiveSequence:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def save(seq: PrimitiveSequence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(seq))
