"""Quaternion helpers.

Quaternions are ``(w, x, y, z)`` arrays (Hamilton convention) and may carry
leading batch dimensions.  An attitude quaternion maps body-frame vectors
into the world frame.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def multiply(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def to_matrix(q) -> np.ndarray:
    """Rotation matrix (body to world) of a unit quaternion."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )


def rotate(q, v) -> np.ndarray:
    """Rotate body vector(s) ``v`` into the world frame."""
    return np.einsum("...ij,...j->...i", to_matrix(q), np.asarray(v, dtype=float))


def from_rotation_vector(rv) -> np.ndarray:
    """Exact exponential map; a zero rotation vector gives the identity."""
    rv = np.asarray(rv, dtype=float)
    angle = np.linalg.norm(rv, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(a/2)/a, with the limit 1/2 at a = 0 so no division by zero occurs
    safe = np.where(angle > 0.0, angle, 1.0)
    k = np.where(angle > 1e-8, np.sin(half) / safe, 0.5 - angle**2 / 48.0)
    return np.concatenate([np.cos(half), k * rv], axis=-1)


def omega_to_quaternion(omega, dt: float) -> np.ndarray:
    """Rotation produced by a constant body rate ``omega`` held for ``dt``.

    A rate of exactly ``[0, 0, 0]`` yields the identity rotation.
    """
    return from_rotation_vector(np.asarray(omega, dtype=float) * dt)


def to_rotation_vector(q) -> np.ndarray:
    q = normalize(q)
    q = np.where(q[..., :1] < 0, -q, q)
    vec = q[..., 1:]
    s = np.linalg.norm(vec, axis=-1, keepdims=True)
    angle = 2.0 * np.arctan2(s, q[..., :1])
    safe = np.where(s > 0.0, s, 1.0)
    k = np.where(s > 1e-12, angle / safe, 2.0)
    return k * vec


def angle(q) -> np.ndarray:
    """Rotation angle in radians, in ``[0, pi]``."""
    q = normalize(q)
    s = np.linalg.norm(q[..., 1:], axis=-1)
    return 2.0 * np.arctan2(s, np.abs(q[..., 0]))


def angle_between(p, q) -> np.ndarray:
    return angle(multiply(conjugate(p), q))


def between_vectors(u, v) -> np.ndarray:
    """Shortest-arc rotation taking unit vector ``u`` onto unit vector ``v``."""
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    v = np.asarray(v, dtype=float) / np.linalg.norm(v)
    d = float(np.dot(u, v))
    if d < -1.0 + 1e-12:
        axis = np.cross(u, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(u, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return np.concatenate([[0.0], axis])
    q = np.concatenate([[1.0 + d], np.cross(u, v)])
    return q / np.linalg.norm(q)


def step_increments(rates, dt: float, method: str = "rk4") -> np.ndarray:
    """Per-sample rotation increments for body rates held over one step.

    For a rate held constant across the step, the four RK4 stages of
    ``q' = q * (0, w) / 2`` collapse to the polynomial below (truncated
    exponential of ``A = (0, w dt / 2)``, using ``A^2 = -|w dt / 2|^2``).
    Neither branch divides by the rate magnitude.
    """
    v = 0.5 * dt * np.asarray(rates, dtype=float)
    n2 = np.sum(v * v, axis=-1, keepdims=True)
    if method == "rk4":
        w = 1.0 - n2 / 2.0 + n2 * n2 / 24.0
        vec = v * (1.0 - n2 / 6.0)
    elif method == "euler":
        w = np.ones_like(n2)
        vec = v
    else:
        raise ValueError(f"unknown integration method {method!r}")
    return normalize(np.concatenate([w, vec], axis=-1))


def compose(increments) -> np.ndarray:
    """Chain increments ``(..., n, 4)`` left to right, renormalizing every step."""
    inc = np.asarray(increments, dtype=float)
    q = np.broadcast_to(IDENTITY, inc.shape[:-2] + (4,)).copy()
    for i in range(inc.shape[-2]):
        q = multiply(q, inc[..., i, :])
        q /= np.linalg.norm(q, axis=-1, keepdims=True)
    return q


def integrate_rates(rates, dt: float, method: str = "rk4") -> np.ndarray:
    """Relative attitude after applying body rates ``(..., n, 3)`` sample by sample.

    Sample ``i`` is treated as the rate over ``[t_i, t_i + dt)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    return compose(step_increments(rates, dt, method))
