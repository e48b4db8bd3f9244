import hypothesis.strategies as st
import pytest
from hypothesis import given

from stash.errors import ParseError
from stash.trajectory import (
    MOVEMENT_BLOCK_NS,
    Primitive,
    PrimitiveSequence,
    merge_streams,
    parse,
    serialize,
    strip_stationary,
    trim_to_duration,
)
from stash.turns import TurnEvent


def seq(pairs):
    return PrimitiveSequence.from_pairs(pairs)


@st.composite
def sequences(draw):
    n = draw(st.integers(0, 20))
    times = sorted(draw(st.lists(st.integers(0, 10**12), min_size=n, max_size=n)))
    syms = draw(st.lists(st.sampled_from("MSLR"), min_size=n, max_size=n))
    return seq(list(zip(syms, times)))


def reference_merge(ms_stream, turn_events):
    """Straightforward O(n^2) merge oracle: drop overlapped blocks, insert
    turn runs at t_begin, sort by time."""
    out = []
    for prim in ms_stream:
        overlapped = False
        for ev in turn_events:
            if prim.t_ns < ev.t_end_ns and ev.t_begin_ns < prim.t_ns + MOVEMENT_BLOCK_NS:
                overlapped = True
        if not overlapped:
            out.append(prim)
    for ev in turn_events:
        out.extend(Primitive(ev.direction, ev.t_begin_ns) for _ in range(ev.count))
    return sorted(out, key=lambda p: p.t_ns)


SEC = 1_000_000_000


def test_merge_without_turns_is_identity():
    ms = seq([("M", 0), ("S", 5 * SEC), ("M", 10 * SEC)])
    assert merge_streams(ms, []).primitives == ms.primitives


def test_merge_drops_block_spanned_by_turn():
    ms = seq([("M", 0), ("M", 5 * SEC), ("M", 10 * SEC)])
    ev = TurnEvent(t_begin_ns=5 * SEC, t_end_ns=10 * SEC, angle_deg=45.0,
                   count=3, direction="R")
    merged = merge_streams(ms, [ev])
    assert merged.symbols == "MRRRM"
    assert [p.t_ns for p in merged if p.symbol == "R"] == [5 * SEC] * 3


@given(sequences(), st.lists(st.tuples(st.integers(0, 900), st.integers(1, 60),
                                       st.integers(1, 4),
                                       st.sampled_from("LR")), max_size=4))
def test_merge_matches_reference_oracle(ms, turn_specs):
    ms_only = PrimitiveSequence(tuple(p for p in ms if p.symbol in "MS"))
    events = sorted(
        (TurnEvent(t_begin_ns=b * SEC, t_end_ns=(b + d) * SEC, angle_deg=15.0 * n,
                   count=n, direction=s) for b, d, n, s in turn_specs),
        key=lambda e: e.t_begin_ns,
    )
    got = merge_streams(ms_only, events)
    want = reference_merge(ms_only, events)
    assert list(got) == want


def test_merge_is_deterministic_and_idempotent():
    ms = seq([("M", i * 5 * SEC) for i in range(6)])
    ev = TurnEvent(t_begin_ns=7 * SEC, t_end_ns=12 * SEC, angle_deg=30.0,
                   count=2, direction="R")
    first = merge_streams(ms, [ev])
    second = merge_streams(ms, [ev])
    assert first == second


def test_strip_stationary_examples():
    assert strip_stationary(seq([("M", 0), ("S", 1), ("M", 2), ("S", 3)])).symbols == "MM"
    assert strip_stationary(seq([("S", 0), ("S", 1)])).symbols == ""


@given(sequences())
def test_strip_preserves_non_s_count_and_timestamps(s):
    stripped = strip_stationary(s)
    assert len(stripped) == sum(1 for p in s if p.symbol != "S")
    assert all(p.symbol != "S" for p in stripped)
    survivors = [p for p in s if p.symbol != "S"]
    assert list(stripped) == survivors


@given(sequences())
def test_strip_is_idempotent(s):
    once = strip_stationary(s)
    assert strip_stationary(once) == once


def test_trim_keeps_trailing_window():
    s = seq([("M", i * 5 * SEC) for i in range(120)])  # 10 minutes
    trimmed = trim_to_duration(s, 120.0)
    assert trimmed[0].t_ns == s[-1].t_ns - 120 * SEC
    assert len(trimmed) == 25  # closed interval: boundary primitive retained


def test_trim_longer_than_sequence_unchanged():
    s = seq([("M", 0), ("M", 5 * SEC)])
    assert trim_to_duration(s, 3600.0) == s


def test_trim_boundary_is_closed():
    s = seq([("M", 0), ("L", 10 * SEC), ("M", 20 * SEC)])
    trimmed = trim_to_duration(s, 10.0)
    assert trimmed.symbols == "LM"


@given(sequences(), st.floats(1.0, 1000.0))
def test_trim_never_reorders_or_relabels(s, window):
    trimmed = trim_to_duration(s, window)
    assert [p.symbol for p in trimmed] == [p.symbol for p in s][len(s) - len(trimmed):]


def test_serialize_format():
    assert serialize(seq([("M", 0), ("L", 123)])) == "M,0\nL,123\n"


@given(sequences())
def test_parse_serialize_roundtrip(s):
    assert parse(serialize(s)) == s


def test_parse_rejects_unknown_symbol():
    with pytest.raises(ParseError) as err:
        parse("M,0\nQ,5\n")
    assert err.value.line == 2


def test_parse_rejects_bad_timestamp():
    with pytest.raises(ParseError):
        parse("M,zero\n")


def test_parse_empty_text():
    assert parse("") == PrimitiveSequence()


def test_sequence_rejects_time_regression():
    with pytest.raises(ValueError):
        seq([("M", 10), ("M", 5)])
