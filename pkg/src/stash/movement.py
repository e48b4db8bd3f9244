"""Movement-mode classification: per-second M/S labels from window features,
logistic regression, HMM Viterbi smoothing, and 5-second aggregation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLabels,
    EmptyStream,
    InsufficientData,
    UntrainedModel,
)
from .imu import SensorStream, estimate_gravity
from .trajectory import Primitive

SHORT_WINDOW_S = 1.0
LONG_WINDOW_S = 5.0


@dataclass(frozen=True)
class MovementLabel:
    t_ns: int
    label: str  # "M" or "S"


# ---------------------------------------------------------------------------
# feature registry
#
# Each feature is a function of a per-second window context. Names follow
# the magnitude/window convention: plain = trailing 1 s window, _long =
# trailing 5 s window; all operate on vector magnitudes except the
# explicitly three-axis differenced ones.
# ---------------------------------------------------------------------------

def _p2p(x):
    return float(np.max(x) - np.min(x)) if len(x) else 0.0


def _std_diff(x):
    return float(np.std(np.diff(x))) if len(x) > 1 else 0.0


def _std_diff3(xyz):
    if len(xyz) < 2:
        return 0.0
    return float(np.std(np.diff(xyz, axis=0).sum(axis=1)))


def _autocorr(mag, rate_hz):
    """(best lag seconds, best value) of the normalized autocorrelation over
    lags in [0.1 s, 2 s]. Degenerate (constant) windows report (0, 0)."""
    x = mag - mag.mean()
    denom = float(x @ x)
    lo = max(int(round(0.1 * rate_hz)), 1)
    hi = min(int(round(2.0 * rate_hz)), len(x) - 1)
    if denom <= 0 or hi < lo:
        return 0.0, 0.0
    vals = np.array([float(x[k:] @ x[:-k]) / denom for k in range(lo, hi + 1)])
    best = int(np.argmax(vals))
    return (lo + best) / rate_hz, float(vals[best])


FEATURES = {
    "AC_time": lambda c: _autocorr(c["acc_mag_long"], c["rate_hz"])[0],
    "AC_val": lambda c: _autocorr(c["acc_mag_long"], c["rate_hz"])[1],
    "ACC_var": lambda c: float(np.var(c["acc_mag"])),
    "ACC_p90": lambda c: float(np.percentile(c["acc_mag"], 90)),
    "ACC_var_long": lambda c: float(np.var(c["acc_mag_long"])),
    "ACC_p90_long": lambda c: float(np.percentile(c["acc_mag_long"], 90)),
    "GYRO_var": lambda c: float(np.var(c["gyro_mag"])),
    "GYRO_p90": lambda c: float(np.percentile(c["gyro_mag"], 90)),
    "GYRO_var_long": lambda c: float(np.var(c["gyro_mag_long"])),
    "GYRO_p90_long": lambda c: float(np.percentile(c["gyro_mag_long"], 90)),
    "GRAV_std_long": lambda c: float(np.std(c["grav_mag_long"])),
    "ACC_median": lambda c: float(np.median(c["acc_mag"])),
    "ACC_mean_long": lambda c: float(np.mean(c["acc_mag_long"])),
    "GYRO_median": lambda c: float(np.median(c["gyro_mag"])),
    "GYRO_mean_long": lambda c: float(np.mean(c["gyro_mag_long"])),
    "GYRO_p10": lambda c: float(np.percentile(c["gyro_mag"], 10)),
    "GYRO_p10_long": lambda c: float(np.percentile(c["gyro_mag_long"], 10)),
    "ACC_p10": lambda c: float(np.percentile(c["acc_mag"], 10)),
    "ACC_p10_long": lambda c: float(np.percentile(c["acc_mag_long"], 10)),
    "GYRO_min": lambda c: float(np.min(c["gyro_mag"])),
    "GYRO_max": lambda c: float(np.max(c["gyro_mag"])),
    "GYRO_min_long": lambda c: float(np.min(c["gyro_mag_long"])),
    "GYRO_max_long": lambda c: float(np.max(c["gyro_mag_long"])),
    "GYRO_peak_to_peak": lambda c: _p2p(c["gyro_mag"]),
    "GYRO_peak_to_peak_long": lambda c: _p2p(c["gyro_mag_long"]),
    "GRAV_min_long": lambda c: float(np.min(c["grav_mag_long"])),
    "GRAV_max_long": lambda c: float(np.max(c["grav_mag_long"])),
    "GRAV_peak_to_peak_long": lambda c: _p2p(c["grav_mag_long"]),
    "GRAV_p5_long": lambda c: float(np.percentile(c["grav_mag_long"], 5)),
    "GRAV_p95_long": lambda c: float(np.percentile(c["grav_mag_long"], 95)),
    "GRAV_interpercentile_range_long": lambda c: float(
        np.percentile(c["grav_mag_long"], 95) - np.percentile(c["grav_mag_long"], 5)
    ),
    "ACC_std_diff": lambda c: _std_diff(c["acc_mag"]),
    "ACC_std_diff_long": lambda c: _std_diff(c["acc_mag_long"]),
    "ACC_3_std_diff": lambda c: _std_diff3(c["acc_xyz"]),
    "ACC_3_std_diff_long": lambda c: _std_diff3(c["acc_xyz_long"]),
}

# The three features dominating the trained model's weights plus the next
# seven by importance; any FEATURES subset can be configured instead.
DEFAULT_FEATURES = (
    "ACC_3_std_diff_long",
    "GYRO_peak_to_peak",
    "ACC_std_diff_long",
    "GYRO_max_long",
    "GYRO_max",
    "AC_time",
    "ACC_p90_long",
    "GYRO_peak_to_peak_long",
    "ACC_mean_long",
    "ACC_3_std_diff",
)


def extract_features(
    stream: SensorStream,
    feature_names=DEFAULT_FEATURES,
    gravity=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-second feature matrix over trailing 1 s / 5 s windows.

    Returns (t_ns, X) with one row per whole second of input. Early windows
    are padded by clipping at the stream start. Raises InsufficientData for
    streams shorter than one second.
    """
    if stream.rate_hz is None:
        raise ValueError("stream must be resampled to a fixed rate first")
    rate = stream.rate_hz
    short = int(round(SHORT_WINDOW_S * rate))
    long_w = int(round(LONG_WINDOW_S * rate))
    n_seconds = int(len(stream) - 1) // short
    if n_seconds < 1:
        raise InsufficientData("need at least one second of samples")
    needs_grav = any(name.startswith("GRAV") for name in feature_names)
    if needs_grav and gravity is None:
        gravity = estimate_gravity(stream)
    acc_mag = np.linalg.norm(stream.accel, axis=1)
    gyro_mag = np.linalg.norm(stream.gyro, axis=1)
    grav_mag = gravity.magnitude if gravity is not None else None
    fns = [FEATURES[name] for name in feature_names]
    times = np.empty(n_seconds, dtype=np.int64)
    X = np.empty((n_seconds, len(fns)))
    for k in range(1, n_seconds + 1):
        i = k * short
        lo_s, lo_l = max(i - short, 0), max(i - long_w, 0)
        ctx = {
            "rate_hz": rate,
            "acc_mag": acc_mag[lo_s:i + 1],
            "acc_mag_long": acc_mag[lo_l:i + 1],
            "gyro_mag": gyro_mag[lo_s:i + 1],
            "gyro_mag_long": gyro_mag[lo_l:i + 1],
            "acc_xyz": stream.accel[lo_s:i + 1],
            "acc_xyz_long": stream.accel[lo_l:i + 1],
            "grav_mag_long": grav_mag[lo_l:i + 1] if grav_mag is not None else None,
        }
        times[k - 1] = stream.t_ns[i]
        X[k - 1] = [fn(ctx) for fn in fns]
    return times, X


# ---------------------------------------------------------------------------
# logistic regression (M = 1, S = 0)
# ---------------------------------------------------------------------------

@dataclass
class LogRegModel:
    feature_names: tuple
    weights: np.ndarray = None
    bias: float = 0.0
    mean: np.ndarray = None
    scale: np.ndarray = None
    noise_level: float = 0.1
    cv_accuracy: float | None = None
    trained: bool = False

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not self.trained:
            raise UntrainedModel("model has not been trained")
        X = np.asarray(X, dtype=float).reshape(-1, len(self.feature_names))
        z = (X - self.mean) / self.scale @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def save(self, path, hmm=None) -> None:
        obj = {
            "feature_names": list(self.feature_names),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "noise_level": self.noise_level,
            "cv_accuracy": self.cv_accuracy,
            "hmm": (hmm or HmmParams()).as_dict(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2)

    @classmethod
    def load(cls, path) -> tuple["LogRegModel", "HmmParams"]:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        model = cls(
            feature_names=tuple(obj["feature_names"]),
            weights=np.array(obj["weights"]),
            bias=obj["bias"],
            mean=np.array(obj["mean"]),
            scale=np.array(obj["scale"]),
            noise_level=obj["noise_level"],
            cv_accuracy=obj["cv_accuracy"],
            trained=True,
        )
        return model, HmmParams.from_dict(obj["hmm"])


def _fit_gd(X, y, lr=0.5, iters=400):
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
        err = p - y
        w -= lr * (X.T @ err / n)
        b -= lr * float(err.mean())
    return w, b


def _stratified_folds(y, k, rng):
    folds = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[j % k].append(int(i))
    return [np.array(sorted(f), dtype=int) for f in folds]


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    feature_names=DEFAULT_FEATURES,
    noise_level: float = 0.1,
    n_folds: int = 5,
    seed: int = 0,
) -> LogRegModel:
    """Fit the M/S classifier with noise-based regularization.

    Training inputs are augmented with zero-mean Gaussian noise at
    `noise_level` times the per-feature std, which discourages over-learning
    on small datasets. Reports stratified k-fold cross-validation accuracy.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(set(y.tolist())) < 2:
        raise DegenerateLabels("training data must contain both classes")
    rng = np.random.default_rng(seed)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    Z = (X - mean) / scale

    def augmented(Zt, yt):
        noisy = Zt + rng.normal(0.0, noise_level, size=Zt.shape)
        return np.vstack([Zt, noisy]), np.concatenate([yt, yt])

    accs = []
    folds = _stratified_folds(y, n_folds, rng)
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        if len(set(y[train_idx].tolist())) < 2 or len(test_idx) == 0:
            continue
        Za, ya = augmented(Z[train_idx], y[train_idx])
        w, b = _fit_gd(Za, ya)
        pred = (Z[test_idx] @ w + b) >= 0.0
        accs.append(float((pred == (y[test_idx] == 1)).mean()))
    Za, ya = augmented(Z, y)
    w, b = _fit_gd(Za, ya)
    return LogRegModel(
        feature_names=tuple(feature_names),
        weights=w,
        bias=b,
        mean=mean,
        scale=scale,
        noise_level=noise_level,
        cv_accuracy=float(np.mean(accs)) if accs else None,
        trained=True,
    )


def predict_sequence(model: LogRegModel, t_ns: np.ndarray, X: np.ndarray) -> list[MovementLabel]:
    """One raw label per second; probability >= 0.5 labels M (documented
    tie rule)."""
    if len(X) == 0:
        return []
    proba = model.predict_proba(X)
    return [
        MovementLabel(int(t), "M" if p >= 0.5 else "S")
        for t, p in zip(t_ns, proba)
    ]


# ---------------------------------------------------------------------------
# HMM smoothing
# ---------------------------------------------------------------------------

STATES = ("M", "S")


@dataclass(frozen=True)
class HmmParams:
    """Two-state HMM over movement modes.

    Emission probabilities come from the classifier's per-class true
    positive rates; transitions default to 99% self-transition (switching
    at 99% would destroy the smoothing).
    """

    emit_m_given_m: float = 0.98
    emit_s_given_s: float = 0.92
    self_transition: float = 0.99
    initial: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        for p in (self.emit_m_given_m, self.emit_s_given_s, self.self_transition, *self.initial):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if not math.isclose(sum(self.initial), 1.0, abs_tol=1e-9):
            raise ValueError("initial distribution must sum to 1")

    @property
    def transition(self) -> np.ndarray:
        p = self.self_transition
        return np.array([[p, 1 - p], [1 - p, p]])

    @property
    def emission(self) -> np.ndarray:
        # rows: hidden state (M, S); columns: observed label (M, S)
        return np.array([
            [self.emit_m_given_m, 1 - self.emit_m_given_m],
            [1 - self.emit_s_given_s, self.emit_s_given_s],
        ])

    def as_dict(self) -> dict:
        return {
            "emit_m_given_m": self.emit_m_given_m,
            "emit_s_given_s": self.emit_s_given_s,
            "self_transition": self.self_transition,
            "initial": list(self.initial),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HmmParams":
        return cls(
            emit_m_given_m=d["emit_m_given_m"],
            emit_s_given_s=d["emit_s_given_s"],
            self_transition=d["self_transition"],
            initial=tuple(d["initial"]),
        )


def viterbi_path(observations, params: HmmParams = HmmParams()) -> str:
    """Most likely hidden state sequence for an M/S observation string.

    Log-domain DP. Transition ties are broken toward staying in the current
    state; a tie in the final column resolves to M.
    """
    obs = [STATES.index(o) for o in observations]
    if not obs:
        return ""
    with np.errstate(divide="ignore"):
        log_a = np.log(params.transition)
        log_b = np.log(params.emission)
        log_pi = np.log(np.array(params.initial))
    n_states = len(STATES)
    T = len(obs)
    delta = np.empty((T, n_states))
    back = np.zeros((T, n_states), dtype=int)
    delta[0] = log_pi + log_b[:, obs[0]]
    for t in range(1, T):
        for s in range(n_states):
            cand = delta[t - 1] + log_a[:, s]
            best = int(np.argmax(cand))
            # tie toward the previous state being the same as s
            if cand[s] == cand[best]:
                best = s
            back[t, s] = best
            delta[t, s] = cand[best] + log_b[s, obs[t]]
    last = int(np.argmax(delta[T - 1]))
    if delta[T - 1, 0] == delta[T - 1, last]:
        last = 0
    path = [last]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return "".join(STATES[s] for s in path)


def viterbi_smooth(labels: list[MovementLabel], params: HmmParams = HmmParams()) -> list[MovementLabel]:
    states = viterbi_path([lbl.label for lbl in labels], params)
    return [MovementLabel(lbl.t_ns, s) for lbl, s in zip(labels, states)]


def aggregate_5s(labels: list[MovementLabel], block: int = 5) -> list[Primitive]:
    """Majority vote per consecutive block of `block` labels; a final
    partial block votes over its own length. Ties resolve to M."""
    out = []
    for i in range(0, len(labels), block):
        chunk = labels[i:i + block]
        m = sum(1 for lbl in chunk if lbl.label == "M")
        symbol = "M" if m * 2 >= len(chunk) else "S"
        out.append(Primitive(symbol, chunk[0].t_ns))
    return out


def movement_primitives(
    stream: SensorStream,
    model: LogRegModel,
    params: HmmParams = HmmParams(),
) -> list[Primitive]:
    """stream -> features -> raw labels -> Viterbi -> 5 s M/S primitives."""
    t_ns, X = extract_features(stream, model.feature_names)
    raw = predict_sequence(model, t_ns, X)
    if not raw:
        raise EmptyStream("no labels produced")
    return aggregate_5s(viterbi_smooth(raw, params))


def labeled_training_data(stream: SensorStream, labels_per_second,
                          feature_names=DEFAULT_FEATURES):
    """Features aligned with per-second ground-truth labels (M=1, S=0)."""
    t_ns, X = extract_features(stream, feature_names)
    y = np.array([1.0 if lbl == "M" else 0.0 for lbl in labels_per_second[: len(X)]])
    return X[: len(y)], y


def train_default_model(seed: int = 0) -> tuple[LogRegModel, HmmParams]:
    """Classifier trained on the built-in synthetic move/still corpus.

    The corpus generator is the stand-in for real labeled recordings; the
    result is deterministic for a given seed.
    """
    from .imu_synth import motion_labeled_stream, training_segments

    stream, labels = motion_labeled_stream(training_segments(seed=seed), seed=seed)
    X, y = labeled_training_data(stream, labels)
    return train_logreg(X, y, seed=seed), HmmParams()
