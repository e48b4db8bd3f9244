"""Synthetic IMU signal generation.

Stands in for real device recordings: labeled move/still streams for
training the movement classifier, yaw-rate profiles with known turn ground
truth for the turn detector, and full 6-axis route recordings for pipeline
runs. Turns use a raised-cosine rate profile (no flat plateau, so the
stationary-flattening rule never bites mid-turn) whose integral equals the
requested angle exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imu import SensorStream
from .pathmodel import RouteSegment
from .turns import YawRateStream

GRAVITY = np.array([0.0, 0.0, 9.81])

# moving vs stationary signal levels (m/s^2 and rad/s)
MOVING_ACC_STD = 0.8
MOVING_GYRO_STD = 0.05
STILL_ACC_STD = 0.02
STILL_GYRO_STD = 0.003


@dataclass(frozen=True)
class TurnSpec:
    angle_deg: float
    duration_s: float

    @property
    def count(self) -> int:
        return int(math.floor(abs(self.angle_deg) / 15.0 + 0.5))

    @property
    def direction(self) -> str:
        return "R" if self.angle_deg > 0 else "L"


def raised_cosine_rate(angle_deg: float, duration_s: float, rate_hz: float) -> np.ndarray:
    """Yaw-rate samples (deg/s) integrating to `angle_deg` over the duration.

    r(t) = (A/D) * (1 - cos(2*pi*t/D)): zero at both ends, peak 2A/D.
    """
    n = int(round(duration_s * rate_hz))
    t = np.arange(1, n + 1) / rate_hz
    return (angle_deg / duration_s) * (1.0 - np.cos(2.0 * math.pi * t / duration_s))


def yaw_rate_profile(
    turns: list[TurnSpec],
    quiet_s: float = 8.0,
    noise_std_dps: float = 0.5,
    rate_hz: float = 20.0,
    seed: int = 0,
) -> YawRateStream:
    """Quiet stretches interleaved with raised-cosine turns plus Gaussian
    rate noise; the ground truth is the TurnSpec list itself."""
    rng = np.random.default_rng(seed)
    chunks = [np.zeros(int(quiet_s * rate_hz))]
    for spec in turns:
        chunks.append(raised_cosine_rate(spec.angle_deg, spec.duration_s, rate_hz))
        chunks.append(np.zeros(int(quiet_s * rate_hz)))
    rate = np.concatenate(chunks)
    if noise_std_dps > 0:
        rate = rate + rng.normal(0.0, noise_std_dps, size=len(rate))
    step_ns = int(round(1e9 / rate_hz))
    t_ns = np.arange(len(rate), dtype=np.int64) * step_ns
    return YawRateStream(t_ns, rate, np.ones(len(rate), dtype=bool))


def motion_labeled_stream(
    segments: list[tuple[float, bool]],
    rate_hz: float = 20.0,
    seed: int = 0,
    t0_ns: int = 0,
) -> tuple[SensorStream, list[str]]:
    """6-axis stream from (duration_s, moving) segments plus per-second
    ground-truth labels. Used to train and score the M/S classifier."""
    rng = np.random.default_rng(seed)
    accel_parts, gyro_parts, labels = [], [], []
    for duration_s, moving in segments:
        n = int(round(duration_s * rate_hz))
        acc_std = MOVING_ACC_STD if moving else STILL_ACC_STD
        gyr_std = MOVING_GYRO_STD if moving else STILL_GYRO_STD
        accel = GRAVITY + rng.normal(0.0, acc_std, size=(n, 3))
        if moving:
            # pedaling-like oscillation on top of the road noise
            t = np.arange(n) / rate_hz
            accel[:, 0] += 0.6 * np.sin(2 * math.pi * 1.7 * t + rng.uniform(0, 2 * math.pi))
        gyro = rng.normal(0.0, gyr_std, size=(n, 3))
        accel_parts.append(accel)
        gyro_parts.append(gyro)
        labels.extend(["M" if moving else "S"] * int(round(duration_s)))
    accel = np.vstack(accel_parts)
    gyro = np.vstack(gyro_parts)
    step_ns = int(round(1e9 / rate_hz))
    t_ns = t0_ns + np.arange(len(accel), dtype=np.int64) * step_ns
    return SensorStream(t_ns, accel, gyro, rate_hz=rate_hz), labels


def training_segments(seed: int = 0, n_segments: int = 30) -> list[tuple[float, bool]]:
    """Alternating move/still segments with randomized durations.

    Segments are long relative to the 5 s feature window so that
    boundary-straddling windows (inherently ambiguous) stay a small
    fraction of the labels.
    """
    rng = np.random.default_rng(seed)
    segments = []
    moving = False
    for _ in range(n_segments):
        segments.append((float(rng.uniform(30.0, 75.0)), moving))
        moving = not moving
    return segments


def route_recording(
    plan: list[RouteSegment],
    rate_hz: float = 100.0,
    seed: int = 0,
    lead_in_s: float = 8.0,
) -> SensorStream:
    """Full 6-axis recording of one traversal of a planned route.

    Movement segments carry moving-class noise; turn segments additionally
    put the raised-cosine yaw profile on the gravity-aligned gyro axis. A
    stationary lead-in lets the gravity filter settle before the route
    starts.
    """
    rng = np.random.default_rng(seed)
    accel_parts, gyro_parts = [], []

    def emit(duration_s, moving, yaw_dps=None):
        n = int(round(duration_s * rate_hz))
        acc_std = MOVING_ACC_STD if moving else STILL_ACC_STD
        gyr_std = MOVING_GYRO_STD if moving else STILL_GYRO_STD
        accel = GRAVITY + rng.normal(0.0, acc_std, size=(n, 3))
        gyro = rng.normal(0.0, gyr_std, size=(n, 3))
        if yaw_dps is not None:
            gyro[: len(yaw_dps), 2] += np.radians(yaw_dps[:n])
        accel_parts.append(accel)
        gyro_parts.append(gyro)

    emit(lead_in_s, moving=False)
    for seg in plan:
        if seg.kind == "move":
            emit(seg.move_blocks * 5.0, moving=True)
        else:
            profile = raised_cosine_rate(seg.angle_deg, seg.turn_s, rate_hz)
            emit(seg.turn_s, moving=True, yaw_dps=profile)
    accel = np.vstack(accel_parts)
    gyro = np.vstack(gyro_parts)
    step_ns = int(round(1e9 / rate_hz))
    t_ns = np.arange(len(accel), dtype=np.int64) * step_ns
    return SensorStream(t_ns, accel, gyro, rate_hz=None)
