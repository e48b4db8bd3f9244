"""Turn detection: gyroscope + gravity streams to quantized L/R primitives.

Pipeline: project the gyroscope onto the gravity direction to get a yaw
rate, condition it (drift high-pass, stationary flattening), integrate to a
heading angle, then cut turns where the rolling standard deviation of the
heading exceeds the detection threshold. Each turn of signed angle d emits
n = |round(d / granularity)| symbols, R for d > 0 and L for d < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyStream, LengthMismatch
from .imu import GravityEstimate, SensorStream


@dataclass(frozen=True)
class TurnDetectorConfig:
    sigma1_deg: float = 3.0        # rolling-std threshold that opens a turn
    sigma2_deg: float = 1.0        # fine-tune threshold for begin/end
    window_s: float = 2.0          # trailing rolling-std window
    granularity_deg: float = 15.0  # degrees per emitted symbol
    highpass_floor_dps: float = 8.6
    flatten_std: float = 0.01      # rad/s; below this trailing std the rate is zeroed
    stability_gate: bool = True    # drop events touching gravity-unstable samples

    def __post_init__(self):
        if self.sigma2_deg >= self.sigma1_deg:
            raise ValueError("sigma2 must be smaller than sigma1")
        if self.granularity_deg <= 0:
            raise ValueError("granularity must be positive")


@dataclass
class YawRateStream:
    """Scalar yaw rate in deg/s with a per-sample reliability flag."""

    t_ns: np.ndarray
    rate_dps: np.ndarray
    reliable: np.ndarray

    def __len__(self):
        return len(self.t_ns)


@dataclass
class HeadingTrace:
    t_ns: np.ndarray
    alpha_deg: np.ndarray
    rolling_std_deg: np.ndarray
    reliable: np.ndarray

    def __len__(self):
        return len(self.t_ns)


@dataclass(frozen=True)
class TurnEvent:
    t_begin_ns: int
    t_end_ns: int
    angle_deg: float
    count: int
    direction: str  # "L" or "R"

    def __post_init__(self):
        if self.direction not in ("L", "R"):
            raise ValueError("direction must be L or R")
        if self.t_begin_ns >= self.t_end_ns:
            raise ValueError("turn must span positive time")

    @property
    def symbols(self) -> str:
        return self.direction * self.count


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5))


def _trailing_std(values: np.ndarray, window: int) -> np.ndarray:
    """Population std over the trailing `window` samples (growing prefix at
    the start). O(n) via prefix sums."""
    n = len(values)
    if n == 0:
        return np.zeros(0)
    c1 = np.concatenate(([0.0], np.cumsum(values)))
    c2 = np.concatenate(([0.0], np.cumsum(values * values)))
    idx = np.arange(n)
    lo = np.maximum(idx - window + 1, 0)
    cnt = idx - lo + 1
    s1 = c1[idx + 1] - c1[lo]
    s2 = c2[idx + 1] - c2[lo]
    var = s2 / cnt - (s1 / cnt) ** 2
    return np.sqrt(np.maximum(var, 0.0))


def project_to_ground(stream: SensorStream, gravity: GravityEstimate,
                      stability_gate: bool = True) -> YawRateStream:
    """Yaw rate = gyro . unit(gravity), in deg/s.

    Samples inside gravity settling windows are marked unreliable and carry
    no weight during integration.
    """
    if len(stream) != len(gravity) or not np.array_equal(stream.t_ns, gravity.t_ns):
        raise LengthMismatch("gyro stream and gravity estimate are not aligned")
    norms = np.linalg.norm(gravity.vec, axis=1)
    norms = np.where(norms > 0, norms, 1.0)
    unit = gravity.vec / norms[:, None]
    rate_rps = np.einsum("ij,ij->i", stream.gyro, unit)
    reliable = gravity.stable.copy() if stability_gate else np.ones(len(stream), bool)
    return YawRateStream(stream.t_ns.copy(), np.degrees(rate_rps), reliable)


def condition_gyro(yaw: YawRateStream, config: TurnDetectorConfig = TurnDetectorConfig(),
                   rate_hz: float = 20.0) -> YawRateStream:
    """Drift suppression on the yaw-rate stream.

    Rates below the high-pass floor are scaled by exp(|rate|/floor - 1),
    continuous at the floor and decaying to e^-1 at zero. Windows whose
    trailing rate std (in rad/s) falls below `flatten_std` are treated as
    stationary and zeroed outright.
    """
    window = max(int(round(config.window_s * rate_hz)), 1)
    rate = yaw.rate_dps
    std_rps = _trailing_std(np.radians(rate), window)
    floor = config.highpass_floor_dps
    att = np.where(np.abs(rate) < floor, rate * np.exp(np.abs(rate) / floor - 1.0), rate)
    out = np.where(std_rps < config.flatten_std, 0.0, att)
    return YawRateStream(yaw.t_ns.copy(), out, yaw.reliable.copy())


def integrate_heading(yaw: YawRateStream, window_s: float = 2.0) -> HeadingTrace:
    """Heading angle by rectangle-rule integration, alpha(t_0) = 0.

    Unreliable samples contribute zero (the heading holds through them).
    The rolling std is computed on the unwrapped angle over the trailing
    window.
    """
    if len(yaw) == 0:
        raise EmptyStream("cannot integrate an empty yaw-rate stream")
    dt = np.diff(yaw.t_ns) / 1e9
    steps = yaw.rate_dps[1:] * dt
    steps = np.where(yaw.reliable[1:], steps, 0.0)
    alpha = np.concatenate(([0.0], np.cumsum(steps)))
    if len(yaw) > 1:
        rate_hz = 1e9 / float(np.median(np.diff(yaw.t_ns)))
    else:
        rate_hz = 1.0
    window = max(int(round(window_s * rate_hz)), 1)
    std = _trailing_std(alpha, window)
    return HeadingTrace(yaw.t_ns.copy(), alpha, std, yaw.reliable.copy())


def _runs(mask: np.ndarray):
    """Contiguous True runs as (start, end) inclusive index pairs."""
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(idx) - 1]))
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]


def detect_turns(trace: HeadingTrace, config: TurnDetectorConfig = TurnDetectorConfig(),
                 rate_hz: float = 20.0) -> list[TurnEvent]:
    """Cut the heading trace into quantized turn events.

    A turn opens while the rolling std exceeds sigma1; its extent is the
    surrounding region where the std stays above sigma2. Because the std
    window trails, the begin time is pulled back by up to one window (never
    into the previous region) so the event captures rotation accrued before
    the threshold crossing. Adjacent turns sharing one sigma2 region are
    split at the rolling-std minimum between them. Events rounding to zero
    symbols are dropped, as are events touching unreliable samples.
    """
    std = trace.rolling_std_deg
    window = max(int(round(config.window_s * rate_hz)), 1)
    events = []
    prev_region_end = -1
    for s2, e2 in _runs(std > config.sigma2_deg):
        peaks = [(ps, pe) for ps, pe in _runs(std > config.sigma1_deg)
                 if ps >= s2 and pe <= e2]
        if not peaks:
            prev_region_end = e2
            continue
        # split boundaries between adjacent sigma1 clusters: argmin of std
        bounds = [s2]
        for (_, pe_a), (ps_b, _) in zip(peaks, peaks[1:]):
            gap = std[pe_a:ps_b + 1]
            bounds.append(pe_a + int(np.argmin(gap)))
        bounds.append(e2)
        for k in range(len(peaks)):
            seg_start = bounds[k]
            seg_end = bounds[k + 1]
            if k == 0:
                # trailing window lag: rotation started inside the window
                seg_start = max(seg_start - (window - 1), prev_region_end + 1, 0)
            d = float(trace.alpha_deg[seg_end] - trace.alpha_deg[seg_start])
            n = _round_half_away(d / config.granularity_deg)
            if n == 0:
                continue
            if config.stability_gate and not trace.reliable[seg_start:seg_end + 1].all():
                continue
            events.append(TurnEvent(
                t_begin_ns=int(trace.t_ns[seg_start]),
                t_end_ns=int(trace.t_ns[seg_end]),
                angle_deg=d,
                count=n,
                direction="R" if d > 0 else "L",
            ))
        prev_region_end = e2
    return events


def turns_from_stream(stream: SensorStream, gravity: GravityEstimate,
                      config: TurnDetectorConfig = TurnDetectorConfig()) -> list[TurnEvent]:
    """Full turn pipeline from a resampled 6-axis stream."""
    rate = stream.rate_hz or 20.0
    yaw = project_to_ground(stream, gravity, stability_gate=config.stability_gate)
    conditioned = condition_gyro(yaw, config, rate_hz=rate)
    trace = integrate_heading(conditioned, window_s=config.window_s)
    return detect_turns(trace, config, rate_hz=rate)
