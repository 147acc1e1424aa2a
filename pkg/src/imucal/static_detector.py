"""Quasi-static interval detection.

The windowed variance magnitude of the accelerometer is compared against
``k`` times the variance of the long rest period at the start of the
recording.  ``k`` is chosen by maximising the number of usable segments;
ties go to the lowest accelerometer calibration residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ImucalError, InsufficientDataError, NoUsableThresholdError
from .stream import SampleStream


@dataclass
class DetectorConfig:
    window_halfwidth: float = 0.5
    k_max: int = 225
    min_segment_duration: float = 1.0
    init_phase_duration: float = 30.0
    direction_angle_threshold: float = 10.0
    required_min_segments: int = 9
    # keeps the threshold above zero on noiseless data, (m/s^2)^2
    variance_floor: float = 1e-12

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        for name in ("window_halfwidth", "min_segment_duration", "init_phase_duration"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.variance_floor < 0:
            raise ValueError("variance_floor must be non-negative")

    def half_samples(self, sample_rate: float) -> int:
        return max(int(round(self.window_halfwidth * sample_rate)), 1)


@dataclass
class StaticSegment:
    start: int
    end: int
    mean_accel: np.ndarray
    mean_gravity_dir: np.ndarray
    duration: float

    @property
    def bounds(self) -> tuple[int, int]:
        return self.start, self.end


@dataclass
class ThresholdSelection:
    k: int
    segments: list
    counts: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)


def rolling_variance_magnitude(accel: np.ndarray, sample_rate: float, halfwidth: float) -> np.ndarray:
    """Sum of per-axis variances over a centred window of ``2 * halfwidth`` seconds.

    Samples whose full window does not fit inside the record are NaN.
    """
    accel = np.asarray(accel, dtype=float)
    half = max(int(round(halfwidth * sample_rate)), 1)
    w = 2 * half + 1
    n = len(accel)
    if n < w:
        raise InsufficientDataError(f"insufficient data: {n} samples, window needs {w}")
    windows = sliding_window_view(accel, w, axis=0)
    out = np.full(n, np.nan)
    out[half : n - half] = windows.var(axis=-1).sum(axis=-1)
    return out


def baseline_variance(stream: SampleStream, config: DetectorConfig, accel_source: str = "primary") -> float:
    """Variance magnitude of the initial rest period."""
    accel = stream.accel_for(accel_source)
    n = int(round(config.init_phase_duration * stream.sample_rate))
    if len(accel) < n or n < 2:
        raise InsufficientDataError(
            f"insufficient data: initial phase needs {n} samples, stream has {len(accel)}"
        )
    return float(accel[:n].var(axis=0).sum())


def static_mask(variance: np.ndarray, k: int, base: float, config: DetectorConfig) -> np.ndarray:
    threshold = k * max(base, config.variance_floor)
    with np.errstate(invalid="ignore"):
        return variance < threshold


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def _angle_deg(u, v) -> float:
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def extract_segments(
    stream: SampleStream,
    k: int,
    base: float,
    config: DetectorConfig,
    variance: np.ndarray | None = None,
    accel_source: str = "primary",
) -> list[StaticSegment]:
    if k < 1:
        raise ValueError("k must be at least 1")
    accel = stream.accel_for(accel_source)
    fs = stream.sample_rate
    if variance is None:
        variance = rolling_variance_magnitude(accel, fs, config.window_halfwidth)
    half = config.half_samples(fs)
    idx = stream.packet_index

    segments = []
    last_mean = None
    for a, b in _runs(static_mask(variance, k, base, config)):
        a, b = a + half, b - half
        if b <= a:
            continue
        duration = (idx[b - 1] - idx[a] + 1) / fs
        if duration < config.min_segment_duration:
            continue
        mean = accel[a:b].mean(axis=0)
        if last_mean is not None and _angle_deg(mean, last_mean) < config.direction_angle_threshold:
            continue
        segments.append(StaticSegment(a, b, mean, mean / np.linalg.norm(mean), float(duration)))
        last_mean = mean
    return segments


ResidualFn = Callable[[list], float]


def select_threshold(
    stream: SampleStream,
    config: DetectorConfig,
    accel_residual_fn: ResidualFn | None = None,
    accel_source: str = "primary",
) -> ThresholdSelection:
    """Sweep ``k = 1..k_max`` and keep the one giving the most usable segments.

    Ties are broken by the smallest value of ``accel_residual_fn(segments)``
    (a full accelerometer fit), then by the smallest ``k``.  The callback is
    only invoked when there is a tie.
    """
    accel = stream.accel_for(accel_source)
    variance = rolling_variance_magnitude(accel, stream.sample_rate, config.window_halfwidth)
    base = baseline_variance(stream, config, accel_source)

    by_k = {}
    counts = {}
    for k in range(1, config.k_max + 1):
        segs = extract_segments(stream, k, base, config, variance, accel_source)
        by_k[k] = segs
        counts[k] = len(segs)

    usable = {k: c for k, c in counts.items() if c >= config.required_min_segments}
    if not usable:
        best = max(counts.values())
        raise NoUsableThresholdError(
            f"no usable k: at most {best} static segments for k <= {config.k_max}, "
            f"need {config.required_min_segments}",
            best_count=best,
        )
    best = max(usable.values())
    candidates = [k for k in sorted(usable) if usable[k] == best]
    if len(candidates) == 1 or accel_residual_fn is None:
        k = candidates[0]
        return ThresholdSelection(k, by_k[k], counts)

    residuals = {}
    cache = {}
    for k in candidates:
        key = tuple(s.bounds for s in by_k[k])
        if key not in cache:
            try:
                cache[key] = float(accel_residual_fn(by_k[k]))
            except (ImucalError, np.linalg.LinAlgError):
                cache[key] = math.inf
        residuals[k] = cache[key]
    k = min(candidates, key=lambda c: (residuals[c], c))
    return ThresholdSelection(k, by_k[k], counts, residuals)
