"""Rigid-body math: axis-angle rotations and pose algebra.

Rotations are plain 3x3 numpy arrays, translations are length-3 arrays.
A Pose pairs the two and maps points from its local frame to the parent
frame: p_parent = R @ p_local + t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROTATION_TOL = 1e-9


class DegenerateAxisError(ValueError):
    """Raised when a rotation axis with (near-)zero norm is supplied."""


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix [v x] such that skew(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rodrigues(theta: float, axis: np.ndarray) -> np.ndarray:
    """Rotation of `theta` radians about `axis`.

    R = I + sin(theta) [v x] + (1 - cos(theta)) [v x]^2 with v the
    normalized axis. A zero-norm axis is rejected rather than defaulted.
    """
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        raise DegenerateAxisError("rotation axis has zero norm")
    k = skew(axis / norm)
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def identity_columns() -> tuple[np.ndarray, np.ndarray]:
    """First and second columns of the 3x3 identity (the in-plane basis)."""
    eye = np.eye(3)
    return eye[:, 0].copy(), eye[:, 1].copy()


def is_rotation(R: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    if np.abs(R.T @ R - np.eye(3)).max() > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Project a near-rotation back onto SO(3) via SVD."""
    u, _, vt = np.linalg.svd(np.asarray(R, dtype=float))
    out = u @ vt
    if np.linalg.det(out) < 0.0:
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


def rotation_angle(R: np.ndarray) -> float:
    c = 0.5 * (np.trace(R) - 1.0)
    return math.acos(min(1.0, max(-1.0, c)))


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector w with rodrigues(|w|, w/|w|) == R."""
    angle = rotation_angle(R)
    if angle < 1e-10:
        return 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if math.pi - angle < 1e-6:
        # Near pi the off-diagonal formula degenerates; recover the axis
        # from the dominant diagonal entry instead.
        diag = np.diag(R)
        i = int(np.argmax(diag))
        axis = np.zeros(3)
        axis[i] = math.sqrt(max(0.0, (diag[i] + 1.0) * 0.5))
        j, k = (i + 1) % 3, (i + 2) % 3
        axis[j] = R[i, j] / (2.0 * axis[i]) if abs(axis[i]) > 1e-12 else 0.0
        axis[k] = R[i, k] / (2.0 * axis[i]) if abs(axis[i]) > 1e-12 else 0.0
        return angle * axis / np.linalg.norm(axis)
    scale = angle / (2.0 * math.sin(angle))
    return scale * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Fixed-axis roll/pitch/yaw: Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    rx = rodrigues(roll, np.array([1.0, 0.0, 0.0]))
    ry = rodrigues(pitch, np.array([0.0, 1.0, 0.0]))
    rz = rodrigues(yaw, np.array([0.0, 0.0, 1.0]))
    return rz @ ry @ rx


@dataclass
class Pose:
    """Rigid transform: rotation plus translation, in meters."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        if self.rotation.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if self.translation.shape != (3,):
            raise ValueError("translation must be length 3")
        # Re-orthonormalize only when drift is detectable; keeps exact
        # inputs bit-identical for determinism.
        if not is_rotation(self.rotation):
            self.rotation = orthonormalize(self.rotation)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def _raw(rotation: np.ndarray, translation: np.ndarray) -> "Pose":
        """Construct without validation; internal use on already-valid parts."""
        p = object.__new__(Pose)
        p.rotation = rotation
        p.translation = translation
        return p

    @staticmethod
    def from_xyz_rpy(xyz, rpy=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(rpy_matrix(*rpy), np.asarray(xyz, dtype=float))

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def transform_direction(self, d: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(d, dtype=float)

    def copy(self) -> "Pose":
        return Pose(self.rotation.copy(), self.translation.copy())


def compose(a: Pose, b: Pose) -> Pose:
    """Pose of b's frame expressed through a: first b, then a."""
    return Pose._raw(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(p: Pose) -> Pose:
    rt = np.ascontiguousarray(p.rotation.T)
    return Pose._raw(rt, -(rt @ p.translation))


def pose_allclose(a: Pose, b: Pose, tol: float = 1e-9) -> bool:
    return (
        np.abs(a.rotation - b.rotation).max() <= tol
        and np.abs(a.translation - b.translation).max() <= tol
    )
