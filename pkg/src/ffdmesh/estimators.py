"""Estimator-style API so the deformation engine composes with sklearn.

FreeFormDeformer: fit(reference vertices) learns the lattice embedding
(the per-vertex basis rows); transform(displacements) maps control-point
offsets to deformed vertices, linearly.

DeformationFitter: fit(target vertices or 68 landmarks) estimates a pose
and a displacement field against a fitted FreeFormDeformer; predict()
returns the fitted, posed vertices.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .basis import BasisKind
from .fitting import (FitConfig, LossWeights, fit_deformation,
                      fit_pose_and_deformation)
from .lattice import (ControlGrid, DeformationField, ParameterizedMesh,
                      build_lattice, parameterize)
from .mesh import Mesh, LandmarkScheme, N_LANDMARKS
from .validation import as_faces, as_points


def _as_mesh(X, faces) -> Mesh:
    if isinstance(X, Mesh):
        return X
    v = as_points(X, "X")
    if faces is None:
        # Faces are irrelevant to the embedding math; a degenerate fan
        # keeps the mesh container valid when only vertices are given.
        n = v.shape[0]
        faces = np.column_stack([np.zeros(n - 2, dtype=np.int64),
                                 np.arange(1, n - 1),
                                 np.arange(2, n)])
    return Mesh(v, as_faces(faces, v.shape[0]))


class FreeFormDeformer(BaseEstimator):
    """Lattice embedding of a reference mesh with linear deformation.

    Parameters mirror the lattice defaults: dims=(6, 19, 4), cubic
    B-splines, 5% padding per side.
    """

    def __init__(self, dims=(6, 19, 4), degree=3, kind="bspline",
                 padding=0.05, tol=1e-10, max_iter=50):
        self.dims = dims
        self.degree = degree
        self.kind = kind
        self.padding = padding
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None, faces=None):
        """Parameterize reference vertices X (N, 3) inside a new lattice."""
        mesh = _as_mesh(X, faces)
        basis_kind = BasisKind(self.kind, self.degree)
        grid = build_lattice(mesh, tuple(self.dims), basis_kind, self.padding)
        pm = parameterize(mesh, grid, tol=self.tol, max_iter=self.max_iter)
        self.mesh_ = mesh
        self.grid_: ControlGrid = grid
        self.pm_: ParameterizedMesh = pm
        self.n_control_points_ = grid.config.num_points
        self.residual_ = pm.residual
        self.box_diagonal_ = grid.config.box.diagonal
        return self

    def _check_fitted(self) -> ParameterizedMesh:
        if not hasattr(self, "pm_"):
            raise NotFittedError("FreeFormDeformer is not fitted yet")
        return self.pm_

    def transform(self, delta) -> np.ndarray:
        """Deformed vertex positions for control displacements delta (M, 3)."""
        pm = self._check_fitted()
        field = delta if isinstance(delta, DeformationField) \
            else DeformationField(as_points(delta, "delta"))
        return pm.deform(field).vertices

    def fit_transform(self, X, y=None, faces=None, delta=None) -> np.ndarray:
        self.fit(X, faces=faces)
        if delta is None:
            delta = np.zeros((self.n_control_points_, 3))
        return self.transform(delta)


class DeformationFitter(BaseEstimator):
    """Fits control displacements (and optionally a pose) to a target.

    deformer must be a fitted FreeFormDeformer; scheme is required for the
    region-weighted losses and for 68-landmark targets.
    """

    def __init__(self, deformer=None, scheme=None, weights=None,
                 regularization=None, rounds=8, tol=1e-10, solver="auto",
                 with_pose=True):
        self.deformer = deformer
        self.scheme = scheme
        self.weights = weights
        self.regularization = regularization
        self.rounds = rounds
        self.tol = tol
        self.solver = solver
        self.with_pose = with_pose

    def _components(self) -> tuple[ParameterizedMesh, LandmarkScheme]:
        if self.deformer is None or not hasattr(self.deformer, "pm_"):
            raise NotFittedError("deformer must be a fitted FreeFormDeformer")
        if self.scheme is None:
            raise ValueError("a LandmarkScheme is required")
        return self.deformer.pm_, self.scheme

    def fit(self, X, y=None):
        """X: target vertices (N, 3) with index correspondence, a Mesh, or
        68 landmark points ordered by canonical slot."""
        pm, scheme = self._components()
        weights = self.weights or LossWeights()
        cfg = FitConfig(regularization=self.regularization, tol=self.tol,
                        rounds=self.rounds, solver=self.solver)
        if isinstance(X, Mesh):
            target = X
        else:
            pts = as_points(X, "X")
            if pts.shape[0] == pm.n_vertices:
                target = pm.mesh.with_vertices(pts)
            elif pts.shape[0] == N_LANDMARKS:
                target = pts
            else:
                raise ValueError(
                    f"X must have {pm.n_vertices} vertices or "
                    f"{N_LANDMARKS} landmarks, got {pts.shape[0]}"
                )
        if self.with_pose:
            pose, field, report = fit_pose_and_deformation(
                pm, target, scheme, weights, cfg)
        else:
            field, report = fit_deformation(pm, target, scheme, weights, cfg)
            pose = None
        self.pose_ = pose
        self.delta_ = field.delta
        self.field_ = field
        self.report_ = report
        self.landmarks_only_ = not isinstance(target, Mesh)
        return self

    def predict(self, X=None) -> np.ndarray:
        """Fitted vertices in the target frame (pose applied if estimated)."""
        if not hasattr(self, "field_"):
            raise NotFittedError("DeformationFitter is not fitted yet")
        pm, _ = self._components()
        verts = pm.deform(self.field_).vertices
        if self.pose_ is not None:
            verts = self.pose_.transform(verts)
        return verts

    def score(self, X=None, y=None) -> float:
        """Negative total weighted loss of the last fit (higher is better)."""
        if not hasattr(self, "report_"):
            raise NotFittedError("DeformationFitter is not fitted yet")
        return -self.report_.total
