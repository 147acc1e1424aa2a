"""Synthetic IMU sequences with known ground-truth intrinsics.

The device rests on the faces of an icosahedral holder.  Between rests it
rotates about a fixed body axis with a smoothstep angle profile, so the
angular speed rises and falls smoothly to zero.  Gyro samples carry the mean
body rate over their sample interval, which makes zero-order-hold
integration of noiseless rates reproduce the scheduled attitudes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import quaternion as quat
from .model import (
    STANDARD_GRAVITY,
    AccelParams,
    CalibrationParams,
    GyroParams,
    uncorrect_accel,
    uncorrect_gyro,
)
from .stream import SampleStream

# ADXL355 noise floor, 200 ug rms at 100 Hz
ADXL355_NOISE = 200e-6 * STANDARD_GRAVITY
# BMI160-class figures at 100 Hz
BMI160_ACCEL_NOISE = 1.8e-3 * STANDARD_GRAVITY
BMI160_GYRO_NOISE = 1.2e-3
GYRO_FULL_SCALE = 8.7

PHI = (1.0 + 5.0**0.5) / 2.0


@dataclass
class GroundTruth:
    params: CalibrationParams = field(default_factory=CalibrationParams)
    gravity: float = STANDARD_GRAVITY
    sample_rate: float = 100.0
    accel_noise: float = ADXL355_NOISE
    gyro_noise: float = BMI160_GYRO_NOISE
    secondary_accel: AccelParams | None = None
    secondary_accel_noise: float = BMI160_ACCEL_NOISE

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        if min(self.accel_noise, self.gyro_noise, self.secondary_accel_noise) < 0:
            raise ValueError("noise levels must be non-negative")

    def noiseless(self) -> "GroundTruth":
        return GroundTruth(self.params, self.gravity, self.sample_rate, 0.0, 0.0,
                           self.secondary_accel, 0.0)


@dataclass
class Perturbation:
    """Small vibration added to the specific force during the short holds."""

    amplitude: float = 0.03
    frequency: float = 7.3


@dataclass
class OrientationSchedule:
    orientations: list
    hold_durations: list
    transition_duration: float = 1.5
    initial_hold: float = 40.0
    max_rate: float = GYRO_FULL_SCALE
    perturbation: Perturbation | None = None

    def __post_init__(self):
        if len(self.orientations) == 0:
            raise ValueError("schedule needs at least one orientation")
        if len(self.hold_durations) != len(self.orientations):
            raise ValueError("one hold duration per orientation is required")
        if self.transition_duration <= 0 or self.initial_hold < 0:
            raise ValueError("invalid schedule durations")


def icosahedron_faces() -> tuple[np.ndarray, np.ndarray]:
    """Vertices ``(12, 3)`` and faces ``(20, 3)`` of a regular icosahedron."""
    verts = []
    for a, b in itertools.product((-1.0, 1.0), repeat=2):
        verts += [(0.0, a, b * PHI), (a, b * PHI, 0.0), (b * PHI, 0.0, a)]
    verts = np.array(verts)
    edge = 2.0
    faces = [
        f
        for f in itertools.combinations(range(12), 3)
        if all(abs(np.linalg.norm(verts[i] - verts[j]) - edge) < 1e-9 for i, j in itertools.combinations(f, 2))
    ]
    return verts, np.array(faces)


def _canonical_normals() -> np.ndarray:
    verts, faces = icosahedron_faces()
    normals = verts[faces].mean(axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    keys = [tuple(np.round(-n[[2, 0, 1]], 9)) for n in normals]
    return normals[sorted(range(20), key=lambda i: keys[i])]


def icosahedron_normals() -> np.ndarray:
    """Outward unit face normals, numbered like a d20 die.

    Faces are first sorted canonically (largest z, then x, then y).  Face 1
    is the canonical first face, opposite faces sum to 21, and each next
    number sits on a neighbour of the face opposite the previous one, so
    consecutive faces are 138.2 degrees apart (10 and 11 are opposite).
    The first matching numbering found by depth-first search in canonical
    order is used.
    """
    canon = _canonical_normals()
    dot = canon @ canon.T
    anti = [int(np.argmin(row)) for row in dot]
    adjacent_cos = np.sqrt(5.0) / 3.0
    adj = [np.flatnonzero(np.abs(row - adjacent_cos) < 1e-9).tolist() for row in dot]

    def extend(seq, used):
        if len(seq) == 10:
            return seq
        for f in adj[anti[seq[-1]]]:
            if f not in used and anti[f] not in used:
                found = extend(seq + [f], used | {f, anti[f]})
                if found:
                    return found
        return None

    first_half = extend([0], {0, anti[0]})
    order = first_half + [anti[f] for f in reversed(first_half)]
    return canon[order]


def icosahedron_orientations() -> np.ndarray:
    """Attitudes ``(20, 4)`` with each face normal (in order) pointing up."""
    up = np.array([0.0, 0.0, 1.0])
    return np.array([quat.between_vectors(n, up) for n in icosahedron_normals()])


def smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def generate(schedule: OrientationSchedule, truth: GroundTruth, seed: int = 0) -> SampleStream:
    fs = truth.sample_rate
    dt = 1.0 / fs
    n_samples = lambda seconds: int(round(seconds * fs))

    attitudes, rates, static_ranges, perturbed = [], [], [], []
    pos = 0
    for i, q_b in enumerate(schedule.orientations):
        q_b = quat.normalize(q_b)
        if i > 0:
            q_a = attitudes[-1][-1]
            rel = quat.multiply(quat.conjugate(q_a), q_b)
            if rel[0] < 0:
                rel = -rel
            rv = quat.to_rotation_vector(rel)
            theta = np.linalg.norm(rv)
            # smoothstep peak speed is 1.5 * angle / duration
            duration = max(schedule.transition_duration, 1.5 * theta / schedule.max_rate)
            L = max(n_samples(duration), 1)
            s = smoothstep(np.arange(L + 1) / L)
            attitudes.append(quat.multiply(q_a, quat.from_rotation_vector(s[:-1, None] * rv)))
            rates.append(np.diff(s)[:, None] * rv / dt)
            perturbed.append(np.zeros(L, dtype=bool))
            pos += L
        hold = schedule.hold_durations[i] + (schedule.initial_hold if i == 0 else 0.0)
        H = n_samples(hold)
        attitudes.append(np.tile(q_b, (H, 1)))
        rates.append(np.zeros((H, 3)))
        perturbed.append(np.full(H, i > 0 and schedule.perturbation is not None))
        static_ranges.append((pos, pos + H))
        pos += H

    att = np.concatenate(attitudes)
    omega = np.concatenate(rates)
    vib_mask = np.concatenate(perturbed)
    n = len(att)
    index = np.arange(n)
    t = index * dt

    force = quat.rotate(quat.conjugate(att), np.array([0.0, 0.0, truth.gravity]))
    if schedule.perturbation is not None and vib_mask.any():
        pert = schedule.perturbation
        phase = 2 * np.pi * pert.frequency * t[:, None] + np.array([0.0, 2.0, 4.0]) * np.pi / 3
        force = force + vib_mask[:, None] * pert.amplitude * np.sin(phase)

    rng = np.random.default_rng(seed)
    p = truth.params
    accel = uncorrect_accel(force, p.accel) + truth.accel_noise * rng.standard_normal((n, 3))
    secondary = truth.secondary_accel or p.accel
    accel2 = uncorrect_accel(force, secondary) + truth.secondary_accel_noise * rng.standard_normal((n, 3))
    gyro = uncorrect_gyro(omega, p.gyro) + truth.gyro_noise * rng.standard_normal((n, 3))

    meta = {
        "source": "synthetic",
        "seed": seed,
        "static_ranges": static_ranges,
        "true_rates": omega,
        "true_attitudes": att,
    }
    return SampleStream(index, t, accel, gyro, fs, accel2=accel2, metadata=meta)


def protocol_faces(n: int, seed: int) -> list[int]:
    """Face sequence: the 20 faces in order, then random faces without immediate repeats."""
    if n < 1:
        raise ValueError("need at least one pose")
    faces = list(range(min(n, 20)))
    rng = np.random.default_rng([seed, 1])
    while len(faces) < n:
        f = int(rng.integers(20))
        if f != faces[-1]:
            faces.append(f)
    return faces


def make_protocol_sequence(
    n: int,
    truth: GroundTruth,
    seed: int = 0,
    hold: float = 3.0,
    initial_hold: float = 40.0,
    transition: float = 1.5,
    perturbation: Perturbation | None = None,
    random_heading: bool = True,
) -> SampleStream:
    """Recording protocol of the evaluation: long initial rest, then ``n`` poses held ``hold`` s.

    The initial rest is spent on the first pose, so ``n`` poses yield ``n``
    static segments.  With ``random_heading`` each placement gets a uniform
    random yaw about the vertical, as when a person sets the holder down;
    gravity in the body frame does not depend on it.
    """
    orientations = icosahedron_orientations()
    faces = protocol_faces(n, seed)
    poses = [orientations[f] for f in faces]
    if random_heading:
        yaw = np.random.default_rng([seed, 2]).uniform(0.0, 2.0 * np.pi, n)
        poses = [quat.multiply(quat.from_rotation_vector([0.0, 0.0, y]), q) for y, q in zip(yaw, poses)]
    schedule = OrientationSchedule(
        orientations=poses,
        hold_durations=[hold] * n,
        transition_duration=transition,
        initial_hold=initial_hold,
        perturbation=perturbation,
    )
    stream = generate(schedule, truth, seed)
    stream.metadata["faces"] = faces
    return stream


# name used by the operation catalogue
make_paper_sequence = make_protocol_sequence


def random_truth(
    rng: np.random.Generator,
    max_scale_error: float = 0.02,
    max_misalignment_deg: float = 1.0,
    max_accel_bias_mg: float = 50.0,
    max_gyro_bias: float = 0.02,
    **kwargs,
) -> GroundTruth:
    mis = np.radians(max_misalignment_deg)
    accel = AccelParams(
        misalignment=rng.uniform(-mis, mis, 3),
        scale=1.0 + rng.uniform(-max_scale_error, max_scale_error, 3),
        bias=rng.uniform(-1, 1, 3) * max_accel_bias_mg * 1e-3 * STANDARD_GRAVITY,
    )
    gyro = GyroParams(
        misalignment=rng.uniform(-mis, mis, 6),
        scale=1.0 + rng.uniform(-max_scale_error, max_scale_error, 3),
        bias=rng.uniform(-max_gyro_bias, max_gyro_bias, 3),
    )
    return GroundTruth(CalibrationParams(accel, gyro), **kwargs)


def example_truth(**kwargs) -> GroundTruth:
    """Fixed, mildly miscalibrated device used as the CLI default."""
    accel = AccelParams(
        misalignment=np.radians([0.5, -0.3, 0.4]),
        scale=[1.01, 0.995, 1.004],
        bias=np.array([20.0, -15.0, 10.0]) * 1e-3 * STANDARD_GRAVITY,
    )
    gyro = GyroParams(
        misalignment=np.radians([0.5, -0.4, 0.3, 0.2, -0.5, 0.6]),
        scale=[1.01, 0.99, 1.005],
        bias=[0.01, -0.02, 0.005],
    )
    return GroundTruth(CalibrationParams(accel, gyro), **kwargs)
