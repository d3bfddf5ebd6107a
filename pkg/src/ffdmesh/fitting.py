"""Weighted vertex/landmark losses and direct fitting of deformations.

The deformed mesh is linear in the control displacements, so fitting a
deformation to a target under the weighted mean-squared losses is a
weighted linear least-squares problem: the three world coordinates share
one normal matrix. Joint pose+deformation fitting alternates an exact
weighted similarity fit (pose step) with the exact linear solve
(deformation step), so the combined objective never increases.

Mean convention: every squared loss is averaged over all vertex-coordinate
entries (count * 3), which makes vertex and per-region terms commensurable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import RankDeficiencyWarning, SolverError
from .lattice import DeformationField, ParameterizedMesh
from .mesh import Mesh, LandmarkScheme, REGION_NAMES, N_LANDMARKS
from .projection import Pose, estimate_pose
from .validation import as_points

_DIRECT_LIMIT = 1000


@dataclass(frozen=True)
class LossWeights:
    """Vertex-loss weight plus one weight per landmark region.

    Defaults follow the 0.46 / 9 x 0.06 split, which sums to 1.
    """

    vertex: float = 0.46
    regions: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.vertex < 0:
            raise ValueError("vertex weight must be nonnegative")
        filled = {name: 0.06 for name in REGION_NAMES}
        for name, w in self.regions.items():
            if name not in filled:
                raise KeyError(f"unknown region '{name}'")
            if w < 0:
                raise ValueError(f"weight for region '{name}' must be nonnegative")
            filled[name] = float(w)
        object.__setattr__(self, "regions", filled)

    def scaled(self, factor: float) -> "LossWeights":
        return LossWeights(self.vertex * factor,
                           {k: v * factor for k, v in self.regions.items()})

    def to_dict(self) -> dict:
        return {"vertex_weight": self.vertex, "region_weights": dict(self.regions)}

    @classmethod
    def from_dict(cls, data: dict) -> "LossWeights":
        return cls(data.get("vertex_weight", 0.46),
                   dict(data.get("region_weights", {})))


@dataclass(frozen=True)
class FitConfig:
    """Solver knobs for deformation fitting.

    regularization None means automatic: 1e-8 * (box diagonal)^2, reported
    whenever it is active. solver 'auto' factors the dense normal matrix
    for lattices up to 1000 control points and falls back to Jacobi-
    preconditioned conjugate gradients above that.
    """

    regularization: float | None = None
    tol: float = 1e-10
    max_iter: int = 2000
    rounds: int = 8
    round_tol: float = 1e-12
    solver: str = "auto"

    def __post_init__(self):
        if self.regularization is not None and self.regularization < 0:
            raise ValueError("regularization must be nonnegative")
        if self.tol <= 0 or self.round_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.solver not in ("auto", "direct", "cg"):
            raise ValueError(f"unknown solver '{self.solver}'")

    def effective_lambda(self, box_diagonal: float) -> float:
        if self.regularization is not None:
            return self.regularization
        return 1e-8 * box_diagonal**2


@dataclass(frozen=True)
class LossReport:
    """Vertex loss, the nine region losses, and their weighted total."""

    vertex: float
    regions: dict[str, float]
    total: float

    def to_dict(self) -> dict:
        return {"vertex_loss": self.vertex,
                "region_losses": dict(self.regions),
                "total_loss": self.total}


def _posed_vertices(mesh_or_points, pose: Pose | None) -> np.ndarray:
    pts = mesh_or_points.vertices if isinstance(mesh_or_points, Mesh) \
        else as_points(mesh_or_points, "points")
    return pts if pose is None else pose.transform(pts)


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(np.sum(d * d) / d.size)


def vertex_loss(pred, gt, pose_pred: Pose | None = None,
                pose_gt: Pose | None = None) -> float:
    """MSE over all vertex coordinates after posing both sides.

    pred and gt may be meshes sharing topology or plain (K, 3) arrays with
    index correspondence.
    """
    a = _posed_vertices(pred, pose_pred)
    b = _posed_vertices(gt, pose_gt)
    if a.shape != b.shape:
        raise ValueError(
            f"vertex sets must correspond by index: {a.shape} vs {b.shape}"
        )
    return _mse(a, b)


def landmark_region_loss(pred, gt, scheme: LandmarkScheme,
                         region: str, pose_pred: Pose | None = None,
                         pose_gt: Pose | None = None) -> float:
    """MSE over one region's landmark coordinates, same mean convention."""
    idx = scheme.region_indices(region)
    a = _posed_vertices(pred, pose_pred)[idx]
    b = _posed_vertices(gt, pose_gt)[idx]
    return _mse(a, b)


def total_loss(pred, gt, scheme: LandmarkScheme,
               weights: LossWeights | None = None,
               pose_pred: Pose | None = None,
               pose_gt: Pose | None = None) -> LossReport:
    """Weighted combination of the vertex loss and all region losses."""
    weights = weights or LossWeights()
    a = _posed_vertices(pred, pose_pred)
    b = _posed_vertices(gt, pose_gt)
    if a.shape != b.shape:
        raise ValueError("vertex sets must correspond by index")
    v = _mse(a, b)
    regions = {}
    total = weights.vertex * v
    for name in REGION_NAMES:
        idx = scheme.region_indices(name)
        r = _mse(a[idx], b[idx])
        regions[name] = r
        total += weights.regions[name] * r
    return LossReport(v, regions, total)


def _per_vertex_weights(n: int, scheme: LandmarkScheme,
                        weights: LossWeights) -> np.ndarray:
    """Per-vertex quadratic weights folding the mean conventions in.

    total_loss == sum_q w_q |a_q - b_q|^2 with these weights.
    """
    w = np.full(n, weights.vertex / (3 * n))
    for name in REGION_NAMES:
        idx = scheme.region_indices(name)
        w[idx] += weights.regions[name] / (3 * idx.size)
    return w


def _landmark_slot_weights(scheme: LandmarkScheme, weights: LossWeights
                           ) -> np.ndarray:
    """Per-slot weights when only the 68 landmarks are constrained."""
    w = np.full(N_LANDMARKS, weights.vertex / (3 * N_LANDMARKS))
    for name in REGION_NAMES:
        slots = np.asarray(scheme.region_slots(name))
        w[slots] += weights.regions[name] / (3 * slots.size)
    return w


def loss_gradient(pm: ParameterizedMesh, field_: DeformationField,
                  target: Mesh, scheme: LandmarkScheme,
                  weights: LossWeights | None = None,
                  pose_pred: Pose | None = None,
                  pose_gt: Pose | None = None) -> np.ndarray:
    """Analytic gradient of total_loss with respect to the displacements."""
    weights = weights or LossWeights()
    pred = pm.deform(field_)
    a = _posed_vertices(pred, pose_pred)
    b = _posed_vertices(target, pose_gt)
    if a.shape != b.shape:
        raise ValueError("target must share the reference topology")
    w = _per_vertex_weights(pm.n_vertices, scheme, weights)
    resid = a - b
    grad_v = pm.coeffs.T @ (2.0 * w[:, None] * resid)
    if pose_pred is not None:
        grad_v = pose_pred.scale * grad_v @ pose_pred.rotation
    return grad_v


_DENSE_LSTSQ_LIMIT = 20_000_000


def _solve_weighted_lsq(rows: sp.csr_matrix, rhs_resid: np.ndarray,
                        w: np.ndarray, lam: float, cfg: FitConfig
                        ) -> tuple[np.ndarray, dict]:
    """Minimize sum_q w_q |rows_q delta - resid_q|^2 + lam |delta|^2.

    The three world coordinates share one system. With lam > 0 the SPD
    normal equations are factored (Cholesky up to 1000 control points,
    Jacobi-preconditioned CG above). With lam = 0 the weighted rows are
    solved directly so rank-deficient lattices still yield the
    minimum-norm fit: dense SVD least squares up to 2e7 stored entries,
    best-effort LSQR (with a warning if the iteration cap is hit) beyond.
    """
    n, m = rows.shape
    info: dict = {"solver": None, "iterations": 0, "rank_deficient": False}
    if lam == 0.0:
        if np.any(np.diff(rows.tocsc().indptr) == 0):
            info["rank_deficient"] = True
            warnings.warn(
                "unregularized fit with control points of empty support; "
                "returning the minimum-norm solution",
                RankDeficiencyWarning,
            )
        sqrt_w = np.sqrt(w)
        weighted_rows = rows.multiply(sqrt_w[:, None]).tocsr()
        weighted_rhs = sqrt_w[:, None] * rhs_resid
        if n * m <= _DENSE_LSTSQ_LIMIT:
            info["solver"] = "lstsq"
            delta, *_ = np.linalg.lstsq(weighted_rows.toarray(), weighted_rhs,
                                        rcond=None)
        else:
            info["solver"] = "lsqr"
            delta = np.empty((m, 3))
            iters = 0
            capped = False
            for c in range(3):
                out = spla.lsqr(weighted_rows, weighted_rhs[:, c],
                                atol=1e-14, btol=1e-14,
                                iter_lim=max(8 * m, 2000))
                delta[:, c] = out[0]
                iters = max(iters, int(out[2]))
                capped = capped or int(out[1]) == 7
            info["iterations"] = iters
            if capped:
                warnings.warn(
                    "unregularized LSQR stopped at its iteration cap; the "
                    "minimum-norm solution is approximate (consider a "
                    "nonzero regularization)",
                    RuntimeWarning,
                )
        return np.asarray(delta), info
    weighted = rows.multiply(w[:, None]).tocsr()
    rhs = rows.T @ (w[:, None] * rhs_resid)
    use_direct = cfg.solver == "direct" or (cfg.solver == "auto"
                                            and m <= _DIRECT_LIMIT)
    if use_direct:
        info["solver"] = "direct"
        a_reg = (rows.T @ weighted).toarray() + lam * np.eye(m)
        try:
            c, low = scipy.linalg.cho_factor(a_reg)
            delta = scipy.linalg.cho_solve((c, low), rhs)
        except np.linalg.LinAlgError:
            delta, *_ = np.linalg.lstsq(a_reg, rhs, rcond=None)
        return np.asarray(delta), info
    info["solver"] = "cg"
    a_reg = ((rows.T @ weighted)
             + lam * sp.identity(m, format="csr")).tocsr()
    inv_diag = a_reg.diagonal()
    inv_diag = np.where(inv_diag > 0, 1.0 / inv_diag, 1.0)
    precond = spla.LinearOperator((m, m), matvec=lambda x: inv_diag * x)
    delta = np.empty((m, 3))
    iters = 0
    for c in range(3):
        counter = {"n": 0}

        def _count(_):
            counter["n"] += 1

        x, code = spla.cg(a_reg, rhs[:, c], rtol=cfg.tol, atol=0.0,
                          maxiter=cfg.max_iter, M=precond, callback=_count)
        if code != 0:
            res = float(np.linalg.norm(a_reg @ x - rhs[:, c]))
            raise SolverError(
                f"conjugate gradient did not converge (code {code})",
                residual=res,
            )
        delta[:, c] = x
        iters = max(iters, counter["n"])
    info["iterations"] = iters
    return delta, info


def _correspondence(pm: ParameterizedMesh, target, scheme: LandmarkScheme
                    ) -> tuple[sp.csr_matrix, np.ndarray, bool]:
    """(coefficient rows, target points, is_mesh) for either target kind."""
    if isinstance(target, Mesh):
        if target.n_vertices != pm.n_vertices:
            raise ValueError(
                f"target has {target.n_vertices} vertices, reference has "
                f"{pm.n_vertices}"
            )
        return pm.coeffs, target.vertices, True
    pts = as_points(target, "landmarks")
    if pts.shape[0] != N_LANDMARKS:
        raise ValueError(
            f"landmark target must have {N_LANDMARKS} points, got {pts.shape[0]}"
        )
    scheme.validate_for(pm.mesh)
    rows = pm.coeffs[scheme.slot_indices()]
    return rows, pts, False


def fit_deformation(pm: ParameterizedMesh, target, scheme: LandmarkScheme,
                    weights: LossWeights | None = None,
                    cfg: FitConfig | None = None
                    ) -> tuple[DeformationField, LossReport]:
    """Least-squares control displacements matching a world-frame target.

    The target is either a mesh with index correspondence or an array of
    68 landmarks ordered by canonical slot. Any pose must be factored out
    beforehand (see fit_pose_and_deformation).
    """
    weights = weights or LossWeights()
    cfg = cfg or FitConfig()
    field_, report, _ = _fit_deformation_impl(pm, target, scheme, weights, cfg,
                                              lam=None)
    return field_, report


def _fit_deformation_impl(pm: ParameterizedMesh, target, scheme, weights, cfg,
                          lam: float | None):
    rows, pts, is_mesh = _correspondence(pm, target, scheme)
    if is_mesh:
        w = _per_vertex_weights(pm.n_vertices, scheme, weights)
    else:
        w = _landmark_slot_weights(scheme, weights)
    if lam is None:
        lam = cfg.effective_lambda(pm.grid.config.box.diagonal)
    resid = pts - rows @ pm.grid.points
    delta, info = _solve_weighted_lsq(rows, resid, w, lam, cfg)
    field_ = DeformationField(delta)
    report = _report_for(pm, field_, target, scheme, weights, None, None)
    info["lambda"] = lam
    return field_, report, info


def _report_for(pm, field_, target, scheme, weights, pose_pred, pose_gt
                ) -> LossReport:
    pred = pm.deform(field_)
    if isinstance(target, Mesh):
        return total_loss(pred, target, scheme, weights, pose_pred, pose_gt)
    # Landmark-only target: the 68 slots stand in for the vertex set, and
    # the surface away from them is unconstrained.
    a = _posed_vertices(pred, pose_pred)[scheme.slot_indices()]
    b = as_points(target, "landmarks")
    if pose_gt is not None:
        b = pose_gt.transform(b)
    v = _mse(a, b)
    regions = {}
    total = weights.vertex * v
    for name in REGION_NAMES:
        slots = np.asarray(scheme.region_slots(name))
        r = _mse(a[slots], b[slots])
        regions[name] = r
        total += weights.regions[name] * r
    return LossReport(v, regions, total)


def fit_pose_and_deformation(pm: ParameterizedMesh, target,
                             scheme: LandmarkScheme,
                             weights: LossWeights | None = None,
                             cfg: FitConfig | None = None,
                             history: list | None = None
                             ) -> tuple[Pose, DeformationField, LossReport]:
    """Alternate pose estimation and deformation fitting against a target.

    Each round first fits the weighted similarity transform for the current
    deformed mesh (exact minimizer over the pose), then refits the
    displacements in the de-posed frame (exact minimizer over the field,
    with the regularizer rescaled by 1/s^2 so both steps minimize the same
    objective). The tracked objective is asserted non-increasing.
    """
    weights = weights or LossWeights()
    cfg = cfg or FitConfig()
    rows, pts, is_mesh = _correspondence(pm, target, scheme)
    w = (_per_vertex_weights(pm.n_vertices, scheme, weights) if is_mesh
         else _landmark_slot_weights(scheme, weights))
    lam = cfg.effective_lambda(pm.grid.config.box.diagonal)
    field_ = DeformationField.zero(pm.num_points)
    pose = None
    objective = math.inf
    # Objective evaluations carry rounding noise of order (eps * coord)^2;
    # below this floor the fit is exact and round ordering is meaningless.
    noise_floor = (1e-12 * max(1.0, float(np.abs(pts).max()))) ** 2
    for round_ in range(cfg.rounds):
        current = rows @ (pm.grid.points + field_.delta)
        pose = estimate_pose(current, pts, weights=w)
        deposed = pose.inverse().transform(pts)
        if isinstance(target, Mesh):
            deposed_target = target.with_vertices(deposed)
        else:
            deposed_target = deposed
        field_, _, _ = _fit_deformation_impl(
            pm, deposed_target, scheme, weights, cfg,
            lam=lam / pose.scale**2,
        )
        report = _report_for(pm, field_, target, scheme, weights, pose, None)
        new_objective = report.total + lam * float(np.sum(field_.delta**2))
        if new_objective > objective * (1 + 1e-9) + noise_floor:
            raise AssertionError(
                f"alternation objective increased at round {round_}: "
                f"{objective:.17g} -> {new_objective:.17g}"
            )
        if history is not None:
            history.append(new_objective)
        decrease = objective - new_objective
        objective = new_objective
        if objective <= noise_floor:
            break
        if decrease < cfg.round_tol * max(abs(objective), 1e-30):
            break
    return pose, field_, _report_for(pm, field_, target, scheme, weights,
                                     pose, None)
