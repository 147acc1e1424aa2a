"""Sensor error model shared by detection, calibration and simulation.

Both sensors use the affine model

    corrected = T @ K @ (raw - bias)

with ``K = diag(scale)`` and a unit-diagonal misalignment matrix ``T``.
For the accelerometer ``T`` is upper triangular (the body frame is tied to
the accelerometer x axis), for the gyroscope all six off-diagonal entries
are free.  Vectors are plain numpy arrays; functions accept a single
``(3,)`` sample or an ``(n, 3)`` batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

STANDARD_GRAVITY = 9.80665
# reporting unit used for accelerometer bias errors
MILLI_G = 9.807e-3

MAX_MISALIGNMENT = 0.2


def as_tri(value, name: str = "sample") -> np.ndarray:
    """Return ``value`` as a finite float array whose last axis has length 3."""
    arr = np.asarray(value, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _vec3(value, name):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components")
    return arr


@dataclass
class AccelParams:
    """Accelerometer intrinsics.

    misalignment is ``(alpha_yz, alpha_zy, alpha_zx)``, scale is in output
    units per raw unit, bias in raw units.
    """

    misalignment: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.misalignment = _vec3(self.misalignment, "misalignment")
        self.scale = _vec3(self.scale, "scale")
        self.bias = _vec3(self.bias, "bias")
        if np.any(self.scale <= 0):
            raise ValueError("accelerometer scale factors must be positive")
        if np.any(np.abs(self.misalignment) >= MAX_MISALIGNMENT):
            raise ValueError("accelerometer misalignment outside sanity bound")

    @property
    def T(self) -> np.ndarray:
        a_yz, a_zy, a_zx = self.misalignment
        return np.array([[1.0, -a_yz, a_zy], [0.0, 1.0, -a_zx], [0.0, 0.0, 1.0]])

    @property
    def K(self) -> np.ndarray:
        return np.diag(self.scale)

    def to_vector(self) -> np.ndarray:
        """The 9 optimized values: misalignment, scale, bias."""
        return np.concatenate([self.misalignment, self.scale, self.bias])

    @classmethod
    def from_vector(cls, x) -> "AccelParams":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9])


@dataclass
class GyroParams:
    """Gyroscope intrinsics.

    misalignment is ``(g_yz, g_zy, g_xz, g_zx, g_xy, g_yx)``.  The bias is
    estimated from the initial rest period and is not part of the optimized
    vector.
    """

    misalignment: np.ndarray = field(default_factory=lambda: np.zeros(6))
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.misalignment = np.array(self.misalignment, dtype=float).reshape(-1)
        if self.misalignment.shape != (6,):
            raise ValueError("gyroscope misalignment must have 6 components")
        self.scale = _vec3(self.scale, "scale")
        self.bias = _vec3(self.bias, "bias")
        if np.any(self.scale <= 0):
            raise ValueError("gyroscope scale factors must be positive")

    @property
    def T(self) -> np.ndarray:
        return gyro_misalignment_matrix(self.misalignment)

    @property
    def K(self) -> np.ndarray:
        return np.diag(self.scale)

    def to_vector(self) -> np.ndarray:
        """The 9 optimized values: misalignment (6) then scale (3)."""
        return np.concatenate([self.misalignment, self.scale])

    @classmethod
    def from_vector(cls, x, bias=(0.0, 0.0, 0.0)) -> "GyroParams":
        x = np.asarray(x, dtype=float)
        return cls(x[0:6], x[6:9], bias)


def gyro_misalignment_matrix(m) -> np.ndarray:
    """Unit-diagonal gyro misalignment matrix; ``m`` may be ``(6,)`` or ``(n, 6)``."""
    m = np.asarray(m, dtype=float)
    g_yz, g_zy, g_xz, g_zx, g_xy, g_yx = np.moveaxis(m, -1, 0)
    one = np.ones_like(g_yz)
    return np.stack(
        [
            np.stack([one, -g_yz, g_zy], axis=-1),
            np.stack([g_xz, one, -g_zx], axis=-1),
            np.stack([-g_xy, g_yx, one], axis=-1),
        ],
        axis=-2,
    )


@dataclass
class CalibrationParams:
    accel: AccelParams = field(default_factory=AccelParams)
    gyro: GyroParams = field(default_factory=GyroParams)

    N_OPTIMIZED = 18

    def optimized_vector(self) -> np.ndarray:
        return np.concatenate([self.accel.to_vector(), self.gyro.to_vector()])

    def to_dict(self) -> dict:
        return {
            "accel": {
                "misalignment": self.accel.misalignment.tolist(),
                "scale": self.accel.scale.tolist(),
                "bias": self.accel.bias.tolist(),
            },
            "gyro": {
                "misalignment": self.gyro.misalignment.tolist(),
                "scale": self.gyro.scale.tolist(),
                "bias": self.gyro.bias.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationParams":
        return cls(AccelParams(**d["accel"]), GyroParams(**d["gyro"]))


def correct_accel(raw, p: AccelParams) -> np.ndarray:
    raw = as_tri(raw, "raw acceleration")
    return (raw - p.bias) @ (p.T @ p.K).T


def uncorrect_accel(true_value, p: AccelParams) -> np.ndarray:
    true_value = as_tri(true_value, "acceleration")
    # T upper unit-triangular and K diagonal positive, so the solve is exact
    inv = np.linalg.inv(p.T @ p.K)
    return true_value @ inv.T + p.bias


def correct_gyro(raw, p: GyroParams) -> np.ndarray:
    raw = as_tri(raw, "raw angular rate")
    return (raw - p.bias) @ (p.T @ p.K).T


def uncorrect_gyro(true_value, p: GyroParams) -> np.ndarray:
    true_value = as_tri(true_value, "angular rate")
    inv = np.linalg.inv(p.T @ p.K)
    return true_value @ inv.T + p.bias


def misalignment_degrees(values) -> np.ndarray:
    """Report misalignment entries in degrees (small-angle reading of the raw entry)."""
    return np.degrees(np.asarray(values, dtype=float))


# -- parameter files ---------------------------------------------------------

_AXES = ("x", "y", "z")
_ACCEL_MIS = ("yz", "zy", "zx")
_GYRO_MIS = ("yz", "zy", "xz", "zx", "xy", "yx")


def _flat_keys():
    keys = []
    keys += [(f"accel.misalignment.{n}", "accel", "misalignment", i) for i, n in enumerate(_ACCEL_MIS)]
    keys += [(f"accel.scale.{n}", "accel", "scale", i) for i, n in enumerate(_AXES)]
    keys += [(f"accel.bias.{n}", "accel", "bias", i) for i, n in enumerate(_AXES)]
    keys += [(f"gyro.misalignment.{n}", "gyro", "misalignment", i) for i, n in enumerate(_GYRO_MIS)]
    keys += [(f"gyro.scale.{n}", "gyro", "scale", i) for i, n in enumerate(_AXES)]
    keys += [(f"gyro.bias.{n}", "gyro", "bias", i) for i, n in enumerate(_AXES)]
    return keys


PARAM_KEYS = tuple(k[0] for k in _flat_keys())


def params_to_text(p: CalibrationParams) -> str:
    """Flat ``key = value`` text, one scalar per line, in a fixed key order."""
    d = p.to_dict()
    lines = [f"{key} = {d[sensor][part][i]!r}" for key, sensor, part, i in _flat_keys()]
    return "\n".join(lines) + "\n"


def params_from_text(text: str) -> CalibrationParams:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        values[key.strip()] = float(value)
    unknown = set(values) - set(PARAM_KEYS)
    if unknown:
        raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
    d = {
        "accel": {"misalignment": [0.0] * 3, "scale": [1.0] * 3, "bias": [0.0] * 3},
        "gyro": {"misalignment": [0.0] * 6, "scale": [1.0] * 3, "bias": [0.0] * 3},
    }
    for key, sensor, part, i in _flat_keys():
        if key in values:
            d[sensor][part][i] = values[key]
    return CalibrationParams.from_dict(d)


def params_to_json(p: CalibrationParams) -> str:
    return json.dumps(p.to_dict(), indent=2) + "\n"


def params_from_json(text: str) -> CalibrationParams:
    return CalibrationParams.from_dict(json.loads(text))


def save_params(p: CalibrationParams, path) -> None:
    path = Path(path)
    text = params_to_json(p) if path.suffix == ".json" else params_to_text(p)
    path.write_text(text)


def load_params(path) -> CalibrationParams:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return params_from_json(text)
    return params_from_text(text)

