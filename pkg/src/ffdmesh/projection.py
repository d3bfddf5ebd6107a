"""Scaled orthographic pose: one uniform scale, a rotation, and a translation.

The pose is stored factored as (s, R, t) with orthonormality enforced on
construction, rather than as a raw 3x4 matrix; `Pose.from_matrix` projects
an arbitrary 3x4 affine onto the nearest factored form. Depth is scaled by
the same factor as x and y.

Euler convention (pinned by tests): intrinsic yaw-pitch-roll about the
vertical (y), lateral (x), and frontal (z) axes, R = Ry(yaw) Rx(pitch) Rz(roll).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, GimbalLockError
from .mesh import Mesh
from .validation import as_points

_ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Pose:
    """Similarity transform v -> scale * rotation @ v + translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        s = float(self.scale)
        if not s > 0:
            raise ValueError(f"scale must be positive, got {s}")
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3).copy()
        t = np.asarray(self.translation, dtype=np.float64).reshape(3).copy()
        err = np.abs(r.T @ r - np.eye(3)).max()
        if err > _ORTHONORMAL_TOL:
            raise ValueError(
                f"rotation is not orthonormal (|R^T R - I| = {err:.3e})"
            )
        if np.linalg.det(r) <= 0:
            raise ValueError("rotation must have positive determinant")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(1.0, np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix) -> "Pose":
        """Project a 3x4 affine onto the nearest scaled-orthographic form."""
        m = np.asarray(matrix, dtype=np.float64).reshape(3, 4)
        a = m[:, :3]
        u, d, vt = np.linalg.svd(a)
        sign = np.sign(np.linalg.det(u) * np.linalg.det(vt))
        corr = np.diag([1.0, 1.0, sign])
        rot = u @ corr @ vt
        scale = float((d * np.diag(corr)).mean())
        if scale <= 0:
            raise ValueError("matrix does not factor with a positive scale")
        return cls(scale, rot, m[:, 3])

    def as_matrix(self) -> np.ndarray:
        """The 3x4 matrix [sR | t]."""
        return np.hstack([self.scale * self.rotation, self.translation[:, None]])

    def inverse(self) -> "Pose":
        inv_s = 1.0 / self.scale
        return Pose(inv_s, self.rotation.T,
                    -inv_s * (self.rotation.T @ self.translation))

    def transform(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * (pts @ self.rotation.T) + self.translation

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        return cls(data["scale"],
                   np.asarray(data["rotation"], dtype=np.float64),
                   np.asarray(data["translation"], dtype=np.float64))


def apply_pose(mesh: Mesh, pose: Pose) -> Mesh:
    """Transform every vertex by s R v + t; faces unchanged."""
    return mesh.with_vertices(pose.transform(mesh.vertices))


def estimate_pose(src, dst, weights=None) -> Pose:
    """Least-squares similarity transform mapping src points onto dst.

    Closed-form (SVD of the cross-covariance) with a reflection guard.
    Optional nonnegative per-point weights generalize the objective to
    sum_k w_k |s R src_k + t - dst_k|^2; default is uniform.
    """
    x = as_points(src, "src")
    y = as_points(dst, "dst")
    if x.shape != y.shape:
        raise ValueError(f"src {x.shape} and dst {y.shape} differ in shape")
    k = x.shape[0]
    if k < 3:
        raise ValueError(f"need at least 3 correspondences, got {k}")
    if weights is None:
        w = np.full(k, 1.0 / k)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape != (k,) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
        w = w / w.sum()
    mu_x = w @ x
    mu_y = w @ y
    dx = x - mu_x
    dy = y - mu_y
    var_x = float(np.sum(w * np.einsum("ij,ij->i", dx, dx)))
    if var_x <= 0:
        raise DegenerateGeometryError("source points are coincident")
    cov = (dy * w[:, None]).T @ dx
    u, d, vt = np.linalg.svd(cov)
    if d[1] <= d[0] * 1e-12:
        raise DegenerateGeometryError(
            "source points are collinear; pose is not determined"
        )
    sign = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    corr = np.array([1.0, 1.0, sign])
    rot = u @ np.diag(corr) @ vt
    scale = float((d * corr).sum() / var_x)
    if scale <= 0:
        raise DegenerateGeometryError("estimated scale is not positive")
    t = mu_y - scale * rot @ mu_x
    return Pose(scale, rot, t)


def rotation_ypr(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """Compose R = Ry(yaw) Rx(pitch) Rz(roll), angles in degrees."""
    ya, pa, ra = (math.radians(a) for a in (yaw_deg, pitch_deg, roll_deg))
    cy, sy = math.cos(ya), math.sin(ya)
    cp, sp_ = math.cos(pa), math.sin(pa)
    cr, sr = math.cos(ra), math.sin(ra)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cp, -sp_], [0, sp_, cp]])
    rz = np.array([[cr, -sr, 0], [sr, cr, 0], [0, 0, 1]])
    return ry @ rx @ rz


def euler_degrees(pose: Pose) -> tuple[float, float, float]:
    """(yaw, pitch, roll) under the package convention, in degrees."""
    r = pose.rotation
    pitch = math.degrees(math.asin(max(-1.0, min(1.0, -r[1, 2]))))
    if 90.0 - abs(pitch) < 1e-6:
        raise GimbalLockError(
            f"pitch {pitch:.8f} deg is within 1e-6 of 90; yaw/roll are not "
            "separable"
        )
    yaw = math.degrees(math.atan2(r[0, 2], r[2, 2]))
    roll = math.degrees(math.atan2(r[1, 0], r[1, 1]))
    return yaw, pitch, roll


def yaw_degrees(pose: Pose) -> float:
    """Rotation about the vertical axis, in [-180, 180] degrees."""
    return euler_degrees(pose)[0]


def save_pose(pose: Pose, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pose.to_dict(), fh)
        fh.write("\n")


def load_pose(path) -> Pose:
    with open(path, "r", encoding="utf-8") as fh:
        return Pose.from_dict(json.load(fh))
