"""Two-stage multi-position calibration.

1. Accelerometer: at rest the corrected specific force must have the
   magnitude of gravity, so the squared-norm mismatch over all static
   segments is minimised.
2. Gyroscope: the corrected rates integrated between two consecutive
   segments must rotate the earlier gravity direction onto the later one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quaternion as quat
from .errors import (
    DivergedError,
    ImucalError,
    InsufficientDataError,
    MissingMotionDataError,
    NoUsableThresholdError,
    UnderdeterminedError,
)
from .model import AccelParams, CalibrationParams, GyroParams, correct_accel, correct_gyro, gyro_misalignment_matrix
from .solver import LMResult, SolverConfig, levenberg_marquardt
from .static_detector import DetectorConfig, StaticSegment, select_threshold
from .stream import SampleStream

MIN_SEGMENTS = 9
MIN_BIAS_DURATION = 10.0


@dataclass
class CalibrationResult:
    params: CalibrationParams
    accel_residual: float
    gyro_residual: float
    segments_used: int
    k_selected: int
    converged: dict = field(default_factory=dict)
    segments: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "segments_used": self.segments_used,
            "k_selected": self.k_selected,
            "accel_residual": self.accel_residual,
            "gyro_residual": self.gyro_residual,
            "converged": dict(self.converged),
            "optimized_parameters": len(self.params.optimized_vector()),
        }


# -- accelerometer -----------------------------------------------------------


def _accel_T(mis: np.ndarray) -> np.ndarray:
    m = len(mis)
    T = np.zeros((m, 3, 3))
    T[:, 0, 0] = T[:, 1, 1] = T[:, 2, 2] = 1.0
    T[:, 0, 1] = -mis[:, 0]
    T[:, 0, 2] = mis[:, 1]
    T[:, 1, 2] = -mis[:, 2]
    return T


def accel_residuals(X: np.ndarray, means: np.ndarray, gravity: float) -> np.ndarray:
    """``g^2 - |corrected mean|^2`` per segment, for each parameter row of ``X``."""
    X = np.atleast_2d(X)
    u = (means[None, :, :] - X[:, None, 6:9]) * X[:, None, 3:6]
    a = np.einsum("mij,mnj->mni", _accel_T(X[:, 0:3]), u)
    return gravity**2 - np.sum(a * a, axis=-1)


def accel_jacobian(x: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Analytic Jacobian of :func:`accel_residuals` at a single parameter vector."""
    x = np.asarray(x, dtype=float)
    T = _accel_T(x[None, 0:3])[0]
    s, b = x[3:6], x[6:9]
    d = means - b
    u = d * s
    a = u @ T.T
    n = len(means)
    da = np.zeros((n, 9, 3))
    da[:, 0, 0] = -u[:, 1]
    da[:, 1, 0] = u[:, 2]
    da[:, 2, 1] = -u[:, 2]
    for i in range(3):
        da[:, 3 + i, :] = d[:, i, None] * T[:, i]
        da[:, 6 + i, :] = -s[i] * T[:, i]
    return -2.0 * np.einsum("nj,npj->np", a, da)


def fit_accel(means: np.ndarray, init: AccelParams, cfg: SolverConfig) -> LMResult:
    means = np.asarray(means, dtype=float)
    fun = lambda X: accel_residuals(X, means, cfg.gravity_magnitude)
    jac = (lambda x: accel_jacobian(x, means)) if cfg.analytic_accel_jacobian else None
    return levenberg_marquardt(fun, init.to_vector(), cfg, jac)


def default_accel_init(cfg: SolverConfig) -> AccelParams:
    return AccelParams(scale=np.full(3, cfg.accel_sensitivity))


def default_gyro_init(cfg: SolverConfig) -> GyroParams:
    return GyroParams(scale=np.full(3, cfg.gyro_sensitivity))


def calibrate_accel(
    segments: list[StaticSegment],
    init: AccelParams | None = None,
    cfg: SolverConfig | None = None,
) -> tuple[AccelParams, float]:
    cfg = cfg or SolverConfig()
    if len(segments) < MIN_SEGMENTS:
        raise UnderdeterminedError(
            f"{len(segments)} static segments, at least {MIN_SEGMENTS} required",
            stage="accel",
        )
    init = init or default_accel_init(cfg)
    res = fit_accel(np.array([s.mean_accel for s in segments]), init, cfg)
    if not res.converged:
        raise DivergedError(f"accelerometer fit stopped on {res.reason}", stage="accel")
    try:
        params = AccelParams.from_vector(res.x)
    except ValueError as exc:
        raise DivergedError(f"accelerometer fit left the valid region ({exc})", stage="accel")
    return params, res.cost


# -- gyroscope ---------------------------------------------------------------


def estimate_gyro_bias(stream: SampleStream, init_segment: StaticSegment) -> np.ndarray:
    if init_segment.duration < MIN_BIAS_DURATION:
        raise InsufficientDataError(
            f"insufficient data: initial static segment lasts {init_segment.duration:.2f} s, "
            f"gyro bias needs {MIN_BIAS_DURATION:.0f} s",
            stage="gyro-bias",
        )
    return stream.gyro[init_segment.start : init_segment.end].mean(axis=0)


def integrate_orientation(gyro_raw, p: GyroParams, dt: float, method: str = "rk4") -> np.ndarray:
    """Relative attitude after the corrected rates of ``gyro_raw`` (one sample per step)."""
    gyro_raw = np.asarray(gyro_raw, dtype=float).reshape(-1, 3)
    return quat.integrate_rates(correct_gyro(gyro_raw, p), dt, method)


def motion_windows(stream: SampleStream, segments: list[StaticSegment]) -> list[tuple[int, int]]:
    """Record ranges between consecutive segments; raises if a packet is missing."""
    idx = stream.packet_index
    windows = []
    for k in range(1, len(segments)):
        a, b = segments[k - 1].end, segments[k].start
        if np.any(np.diff(idx[a - 1 : b + 1]) != 1):
            raise MissingMotionDataError(
                f"missing motion data: gyro packets lost between static segments {k - 1} and {k}",
                stage="gyro",
            )
        windows.append((a, b))
    return windows


class GyroProblem:
    """Batched gyro residuals over all between-segment motions."""

    def __init__(self, stream, segments, accel_params, gyro_bias, cfg: SolverConfig):
        windows = motion_windows(stream, segments)
        longest = max(b - a for a, b in windows)
        self.rates = np.zeros((len(windows), longest, 3))
        self.mask = np.zeros((len(windows), longest, 1))
        for t, (a, b) in enumerate(windows):
            self.rates[t, : b - a] = stream.gyro[a:b] - gyro_bias
            self.mask[t, : b - a] = 1.0
        g = correct_accel(np.array([s.mean_accel for s in segments]), accel_params)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        self.up_before, self.up_after = g[:-1], g[1:]
        self.dt = stream.dt
        self.method = cfg.integration_method

    def residuals(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        M = gyro_misalignment_matrix(X[:, 0:6]) * X[:, None, 6:9]
        omega = np.einsum("mij,tlj->mtli", M, self.rates) * self.mask
        q = quat.compose(quat.step_increments(omega, self.dt, self.method))
        R = quat.to_matrix(q)
        # gravity is fixed in the world, so in the later body frame it reads R^T u
        predicted = np.einsum("mtji,tj->mti", R, self.up_before)
        return (self.up_after[None] - predicted).reshape(len(X), -1)


def calibrate_gyro(
    stream: SampleStream,
    segments: list[StaticSegment],
    accel_params: AccelParams,
    gyro_bias,
    init: GyroParams | None = None,
    cfg: SolverConfig | None = None,
) -> tuple[GyroParams, float]:
    cfg = cfg or SolverConfig()
    if len(segments) < MIN_SEGMENTS:
        raise UnderdeterminedError(
            f"{len(segments)} static segments, at least {MIN_SEGMENTS} required",
            stage="gyro",
        )
    init = init or default_gyro_init(cfg)
    problem = GyroProblem(stream, segments, accel_params, np.asarray(gyro_bias, dtype=float), cfg)
    res = levenberg_marquardt(problem.residuals, init.to_vector(), cfg)
    if not res.converged:
        raise DivergedError(f"gyroscope fit stopped on {res.reason}", stage="gyro")
    try:
        params = GyroParams.from_vector(res.x, bias=gyro_bias)
    except ValueError as exc:
        raise DivergedError(f"gyroscope fit left the valid region ({exc})", stage="gyro")
    return params, res.cost


# -- pipeline ----------------------------------------------------------------


def calibrate(
    stream: SampleStream,
    detector_cfg: DetectorConfig | None = None,
    solver_cfg: SolverConfig | None = None,
    accel_source: str = "primary",
) -> CalibrationResult:
    """Detect static segments, choose the threshold, then fit accelerometer and gyroscope."""
    detector_cfg = detector_cfg or DetectorConfig()
    solver_cfg = solver_cfg or SolverConfig()
    accel_init = default_accel_init(solver_cfg)

    def accel_cost(segs):
        return calibrate_accel(segs, accel_init, solver_cfg)[1]

    try:
        selection = select_threshold(stream, detector_cfg, accel_cost, accel_source)
    except NoUsableThresholdError as exc:
        raise UnderdeterminedError(
            f"only {exc.best_count} usable static segments, "
            f"at least {detector_cfg.required_min_segments} required",
            stage="detect",
        ) from exc
    except ImucalError as exc:
        exc.stage = exc.stage or "detect"
        raise
    segments = selection.segments

    accel_params, accel_res = calibrate_accel(segments, accel_init, solver_cfg)
    bias = estimate_gyro_bias(stream, segments[0])
    gyro_params, gyro_res = calibrate_gyro(
        stream, segments, accel_params, bias, default_gyro_init(solver_cfg), solver_cfg
    )
    return CalibrationResult(
        params=CalibrationParams(accel_params, gyro_params),
        accel_residual=accel_res,
        gyro_residual=gyro_res,
        segments_used=len(segments),
        k_selected=selection.k,
        converged={"accel": True, "gyro": True},
        segments=segments,
    )
