"""Raw inertial recordings: loading, validation, resampling, gravity.

Recordings are 6-axis (3-axis accelerometer in m/s^2, 3-axis gyroscope in
rad/s) with int-nanosecond timestamps. Two on-disk formats are supported:
CSV with header ``t_ns,ax,ay,az,gx,gy,gz`` and an equivalent JSONL with the
same keys per line.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStream, LengthMismatch, OrderError, ParseError

CSV_HEADER = "t_ns,ax,ay,az,gx,gy,gz"
_FIELDS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class ImuSample:
    t_ns: int
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]


@dataclass
class SensorStream:
    """Time-ordered 6-axis samples; `rate_hz` is set once resampled."""

    t_ns: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    rate_hz: float | None = None

    def __post_init__(self):
        self.t_ns = np.asarray(self.t_ns, dtype=np.int64)
        self.accel = np.asarray(self.accel, dtype=np.float64).reshape(-1, 3)
        self.gyro = np.asarray(self.gyro, dtype=np.float64).reshape(-1, 3)
        if not (len(self.t_ns) == len(self.accel) == len(self.gyro)):
            raise LengthMismatch("t/accel/gyro lengths differ")
        if len(self.t_ns) > 1 and not (np.diff(self.t_ns) > 0).all():
            raise OrderError("timestamps must be strictly increasing")
        if not (np.isfinite(self.accel).all() and np.isfinite(self.gyro).all()):
            raise ValueError("sensor values must be finite")

    def __len__(self):
        return len(self.t_ns)

    @property
    def duration_s(self) -> float:
        if len(self.t_ns) < 2:
            return 0.0
        return (self.t_ns[-1] - self.t_ns[0]) / 1e9

    def sample(self, i: int) -> ImuSample:
        return ImuSample(int(self.t_ns[i]), tuple(self.accel[i]), tuple(self.gyro[i]))

    @classmethod
    def empty(cls) -> "SensorStream":
        return cls(np.zeros(0, dtype=np.int64), np.zeros((0, 3)), np.zeros((0, 3)))


@dataclass
class GravityEstimate:
    """Low-passed gravity vector per sample plus a stability flag.

    `stable[i]` is False inside the settling window after a detected
    orientation step; downstream turn detection must not trust yaw rates
    from unstable samples.
    """

    t_ns: np.ndarray
    vec: np.ndarray
    stable: np.ndarray

    def __len__(self):
        return len(self.t_ns)

    @property
    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.vec, axis=1)


def _parse_row(values, lineno):
    if len(values) != 7:
        raise ParseError(f"expected 7 fields, got {len(values)}", line=lineno)
    try:
        t = int(values[0])
        floats = [float(v) for v in values[1:]]
    except (TypeError, ValueError):
        raise ParseError(f"malformed row {values!r}", line=lineno) from None
    if not all(math.isfinite(v) for v in floats):
        raise ParseError("non-finite sensor value", line=lineno)
    return t, floats


def load_recording(path, format: str = "csv") -> SensorStream:
    """Read a recording file; the original sample rate is preserved.

    Raises ParseError (with a line number) on malformed rows and OrderError
    if timestamps regress.
    """
    ts, accels, gyros = [], [], []

    def push(t, floats, lineno):
        if ts and t <= ts[-1]:
            raise OrderError(f"line {lineno}: timestamp {t} does not advance past {ts[-1]}")
        ts.append(t)
        accels.append(floats[0:3])
        gyros.append(floats[3:6])

    with open(path, "r", encoding="utf-8") as fh:
        if format == "csv":
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if lineno == 1 and line == CSV_HEADER:
                    continue
                t, floats = _parse_row(line.split(","), lineno)
                push(t, floats, lineno)
        elif format == "jsonl":
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError:
                    raise ParseError("invalid JSON", line=lineno) from None
                if not isinstance(obj, dict) or set(_FIELDS) - set(obj):
                    raise ParseError(f"missing fields {set(_FIELDS) - set(obj)}", line=lineno)
                t, floats = _parse_row([obj[k] for k in _FIELDS], lineno)
                push(t, floats, lineno)
        else:
            raise ValueError(f"unknown format {format!r}")

    if not ts:
        return SensorStream.empty()
    return SensorStream(np.array(ts), np.array(accels), np.array(gyros))


def save_recording(stream: SensorStream, path, format: str = "csv") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if format == "csv":
            fh.write(CSV_HEADER + "\n")
            for i in range(len(stream)):
                row = [str(int(stream.t_ns[i]))]
                row += [repr(float(v)) for v in stream.accel[i]]
                row += [repr(float(v)) for v in stream.gyro[i]]
                fh.write(",".join(row) + "\n")
        elif format == "jsonl":
            for i in range(len(stream)):
                obj = dict(zip(_FIELDS[1:4], (float(v) for v in stream.accel[i])))
                obj.update(zip(_FIELDS[4:7], (float(v) for v in stream.gyro[i])))
                fh.write(json.dumps({"t_ns": int(stream.t_ns[i]), **obj}) + "\n")
        else:
            raise ValueError(f"unknown format {format!r}")


def resample(stream: SensorStream, target_hz: float = 20.0) -> SensorStream:
    """Linear interpolation onto the exact 1/target_hz grid from the first
    timestamp; never extrapolates past the last sample."""
    if len(stream) == 0:
        raise EmptyStream("cannot resample an empty stream")
    if target_hz <= 0:
        raise ValueError("target rate must be positive")
    step_ns = 1e9 / target_hz
    t0 = int(stream.t_ns[0])
    n_out = int(np.floor((stream.t_ns[-1] - t0) / step_ns)) + 1
    grid = t0 + np.round(np.arange(n_out) * step_ns).astype(np.int64)
    accel = np.column_stack(
        [np.interp(grid, stream.t_ns, stream.accel[:, k]) for k in range(3)]
    )
    gyro = np.column_stack(
        [np.interp(grid, stream.t_ns, stream.gyro[:, k]) for k in range(3)]
    )
    return SensorStream(grid, accel, gyro, rate_hz=target_hz)


def estimate_gravity(
    stream: SensorStream,
    time_constant_s: float = 1.0,
    settle_window_s: float = 3.0,
    instability_angle_deg: float = 25.0,
) -> GravityEstimate:
    """First-order low-pass of the accelerometer as a software gravity sensor.

    An orientation step is flagged whenever the raw acceleration departs from
    the current estimate by more than `instability_angle_deg`; the stability
    flag then stays False until `settle_window_s` after the last disturbance.
    """
    if len(stream) == 0:
        raise EmptyStream("cannot estimate gravity from an empty stream")
    if stream.rate_hz is None:
        raise ValueError("stream must be resampled to a fixed rate first")
    dt = 1.0 / stream.rate_hz
    k = 1.0 - math.exp(-dt / time_constant_s)
    n = len(stream)
    vec = np.empty((n, 3))
    stable = np.ones(n, dtype=bool)
    vec[0] = stream.accel[0]
    unstable_until = -np.inf
    cos_limit = math.cos(math.radians(instability_angle_deg))
    for i in range(1, n):
        prev = vec[i - 1]
        a = stream.accel[i]
        denom = np.linalg.norm(prev) * np.linalg.norm(a)
        cos_angle = float(prev @ a) / denom if denom > 0 else 1.0
        t_s = (stream.t_ns[i] - stream.t_ns[0]) / 1e9
        if cos_angle < cos_limit:
            unstable_until = t_s + settle_window_s
        stable[i] = t_s >= unstable_until
        vec[i] = prev + k * (a - prev)
    return GravityEstimate(stream.t_ns.copy(), vec, stable)


def linear_acceleration(stream: SensorStream, gravity: GravityEstimate) -> np.ndarray:
    """Element-wise accel minus gravity on an aligned grid."""
    if len(stream) != len(gravity) or not np.array_equal(stream.t_ns, gravity.t_ns):
        raise LengthMismatch("stream and gravity estimate are not aligned")
    return stream.accel - gravity.vec


@dataclass(frozen=True)
class RingBufferSpec:
    capacity_duration_s: float = 3600.0
    rate_hz: float = 20.0
    precision_bits: int = 32

    @property
    def capacity(self) -> int:
        return int(self.capacity_duration_s * self.rate_hz)


class SampleRingBuffer:
    """Overwrite-oldest store for resampled samples, keyed by timestamp.

    Single writer; readers take a consistent snapshot under the lock.
    Overflow silently evicts the oldest samples, matching streaming use.
    """

    def __init__(self, spec: RingBufferSpec = RingBufferSpec()):
        self.spec = spec
        dtype = np.float32 if spec.precision_bits == 32 else np.float64
        self._t = np.zeros(spec.capacity, dtype=np.int64)
        self._data = np.zeros((spec.capacity, 6), dtype=dtype)
        self._head = 0
        self._count = 0
        self._lock = threading.Lock()

    def __len__(self):
        return self._count

    @property
    def nbytes(self) -> int:
        return self._t.nbytes + self._data.nbytes

    def append(self, t_ns: int, accel, gyro) -> None:
        with self._lock:
            self._t[self._head] = t_ns
            self._data[self._head, 0:3] = accel
            self._data[self._head, 3:6] = gyro
            self._head = (self._head + 1) % self.spec.capacity
            self._count = min(self._count + 1, self.spec.capacity)

    def extend(self, stream: SensorStream) -> None:
        for i in range(len(stream)):
            self.append(int(stream.t_ns[i]), stream.accel[i], stream.gyro[i])

    def snapshot(self) -> SensorStream:
        with self._lock:
            if self._count < self.spec.capacity:
                idx = np.arange(self._count)
            else:
                idx = (np.arange(self.spec.capacity) + self._head) % self.spec.capacity
            t = self._t[idx].copy()
            data = self._data[idx].astype(np.float64)
        return SensorStream(t, data[:, 0:3], data[:, 3:6], rate_hz=self.spec.rate_hz)


class LabelRingBuffer:
    """1 Hz classification results as 8-bit values on an implicit grid."""

    def __init__(self, capacity_duration_s: float = 3600.0, rate_hz: float = 1.0):
        self.capacity = int(capacity_duration_s * rate_hz)
        self._labels = np.zeros(self.capacity, dtype=np.int8)
        self._head = 0
        self._count = 0

    def __len__(self):
        return self._count

    @property
    def nbytes(self) -> int:
        return self._labels.nbytes

    def append(self, moving: bool) -> None:
        self._labels[self._head] = 1 if moving else 0
        self._head = (self._head + 1) % self.capacity
        self._count = min(self._count + 1, self.capacity)


def buffer_memory_bytes(
    sample_buffer: SampleRingBuffer, label_buffer: LabelRingBuffer | None = None
) -> int:
    """Total bytes held by the preallocated buffers (allocation audit)."""
    total = sample_buffer.nbytes
    if label_buffer is not None:
        total += label_buffer.nbytes
    return total
