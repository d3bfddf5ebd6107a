"""Control lattice construction, mesh parameterization, and deformation.

A mesh is embedded in an axis-aligned parallelepiped lattice of
(l+1)(m+1)(n+1) control points. Parameterization inverts the trivariate
volume map at every vertex; because the undeformed grid is an axis-aligned
tensor grid, the inversion decouples into three independent monotone 1D
solves (Newton with a bisection safeguard), and the full trivariate
residual is verified afterwards. The per-vertex basis products are
assembled once into a sparse coefficient matrix; deformation is then a
single sparse matrix product, linear in the control displacements.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import BasisKind, axis_knot_vector, bernstein_all, bspline_curve, \
    bspline_nonzero
from .errors import DegenerateGeometryError, ParameterizationError
from .mesh import Mesh, bounding_box
from .validation import as_points

_BERNSTEIN_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box given by origin corner and positive side lengths."""

    origin: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3).copy()
        s = np.asarray(self.lengths, dtype=np.float64).reshape(3).copy()
        if np.any(s <= 0):
            raise DegenerateGeometryError(
                f"box must have positive extent on every axis, got lengths {s}"
            )
        o.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "lengths", s)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.lengths))

    def contains(self, points: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        local = (points - self.origin) / self.lengths
        return np.all((local >= -rtol) & (local <= 1.0 + rtol), axis=1)


@dataclass(frozen=True, eq=False)
class LatticeConfig:
    """Lattice geometry: division counts, basis kind, box, and axis mapping.

    dims = (l, m, n) are division counts along the parameter axes S, T, U;
    axis_map assigns each parameter axis to a world axis (default S->x,
    T->y, U->z). Control point (i, j, k) is flat-indexed with k fastest.
    """

    dims: tuple[int, int, int]
    kind: BasisKind
    box: Box
    axis_map: tuple[int, int, int] = (0, 1, 2)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3:
            raise ValueError("dims must be (l, m, n)")
        if sorted(self.axis_map) != [0, 1, 2]:
            raise ValueError("axis_map must be a permutation of (0, 1, 2)")
        min_div = self.kind.degree if self.kind.family == "bspline" else 1
        if any(d < min_div for d in dims):
            raise ValueError(
                f"dims must be >= degree ({min_div}) on every axis, got {dims}"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "axis_map", tuple(int(a) for a in self.axis_map))

    @property
    def degree(self) -> int:
        return self.kind.degree

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        l, m, n = self.dims
        return (l + 1, m + 1, n + 1)

    @property
    def num_points(self) -> int:
        gi, gj, gk = self.grid_shape
        return gi * gj * gk

    def flat_index(self, i: int, j: int, k: int) -> int:
        gi, gj, gk = self.grid_shape
        if not (0 <= i < gi and 0 <= j < gj and 0 <= k < gk):
            raise IndexError(f"control index {(i, j, k)} outside grid {self.grid_shape}")
        return (i * gj + j) * gk + k

    def unflatten(self, flat: int) -> tuple[int, int, int]:
        gi, gj, gk = self.grid_shape
        if not 0 <= flat < self.num_points:
            raise IndexError(f"flat index {flat} outside [0, {self.num_points})")
        i, rem = divmod(flat, gj * gk)
        j, k = divmod(rem, gk)
        return i, j, k


@dataclass(frozen=True, eq=False)
class ControlGrid:
    """Control point positions for a lattice configuration."""

    points: np.ndarray
    config: LatticeConfig

    def __post_init__(self):
        pts = as_points(self.points, "control points")
        if pts.shape[0] != self.config.num_points:
            raise ValueError(
                f"expected {self.config.num_points} control points, got {pts.shape[0]}"
            )
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def undeformed(cls, config: LatticeConfig) -> "ControlGrid":
        """Grid points at origin + (i/l, j/m, k/n) scaled by the box lengths."""
        fractions = [np.arange(d + 1) / d for d in config.dims]
        mesh_ijk = np.meshgrid(*fractions, indexing="ij")
        pts = np.empty((config.num_points, 3))
        for axis_param, frac in enumerate(mesh_ijk):
            a = config.axis_map[axis_param]
            pts[:, a] = (config.box.origin[a]
                         + frac.ravel() * config.box.lengths[a])
        return cls(pts, config)


@dataclass(frozen=True, eq=False)
class DeformationField:
    """Per-control-point displacement vectors, same flat indexing as the grid."""

    delta: np.ndarray

    def __post_init__(self):
        d = as_points(self.delta, "delta")
        d.flags.writeable = False
        object.__setattr__(self, "delta", d)

    @classmethod
    def zero(cls, num_points: int) -> "DeformationField":
        return cls(np.zeros((num_points, 3)))

    def to_dict(self) -> dict:
        return {"delta": self.delta.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DeformationField":
        return cls(np.asarray(data["delta"], dtype=np.float64))


class ParameterizedMesh:
    """Reference mesh with per-vertex lattice parameters and basis rows.

    Immutable once built; `deform` is pure and safe to call concurrently.
    """

    def __init__(self, mesh: Mesh, params: np.ndarray, coeffs: sp.csr_matrix,
                 grid: ControlGrid):
        params = as_points(params, "params")
        if params.shape[0] != mesh.n_vertices:
            raise ValueError("one (s,t,u) triple per vertex required")
        if coeffs.shape != (mesh.n_vertices, grid.config.num_points):
            raise ValueError(
                f"coefficient matrix shape {coeffs.shape} does not match "
                f"{(mesh.n_vertices, grid.config.num_points)}"
            )
        params.flags.writeable = False
        self.mesh = mesh
        self.params = params
        self.coeffs = coeffs
        self.grid = grid
        self._csc: sp.csc_matrix | None = None
        recon = coeffs @ grid.points
        self.residual = float(np.abs(recon - mesh.vertices).max())

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def num_points(self) -> int:
        return self.grid.config.num_points

    def reconstruct(self) -> np.ndarray:
        return self.coeffs @ self.grid.points

    def deform(self, field: DeformationField) -> Mesh:
        return deform(self, field)

    def support_mask(self, flat_index: int) -> np.ndarray:
        return support_mask(self, flat_index)

    def _column_store(self) -> sp.csc_matrix:
        # Idempotent lazy cache; concurrent first calls compute the same value.
        if self._csc is None:
            self._csc = self.coeffs.tocsc()
        return self._csc


def build_lattice(mesh: Mesh, dims: tuple[int, int, int],
                  kind: BasisKind = BasisKind(), padding: float = 0.05,
                  axis_map: tuple[int, int, int] = (0, 1, 2)) -> ControlGrid:
    """Uniform control grid over the mesh bounding box inflated per side.

    With padding > 0 every vertex ends up strictly inside the box.
    """
    if padding < 0:
        raise ValueError("padding must be nonnegative")
    lo, hi = bounding_box(mesh)
    extent = hi - lo
    if np.any(extent <= 0):
        raise DegenerateGeometryError(
            f"mesh bounding box has zero extent on axis {int(np.argmin(extent))}"
        )
    origin = lo - padding * extent
    lengths = extent * (1.0 + 2.0 * padding)
    config = LatticeConfig(dims=tuple(dims), kind=kind,
                           box=Box(origin, lengths), axis_map=tuple(axis_map))
    return ControlGrid.undeformed(config)


def _invert_monotone_spline(x: np.ndarray, kv, ctrl: np.ndarray,
                            abs_tol: float, max_iter: int
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Solve f(s) = x per entry for monotone increasing f; returns (s, residual)."""
    span = ctrl[-1] - ctrl[0]
    s = np.clip((x - ctrl[0]) / span, 0.0, 1.0)
    lo = np.zeros_like(s)
    hi = np.ones_like(s)
    f, df = bspline_curve(s, kv, ctrl, derivative=True)
    r = f - x
    target = 0.1 * abs_tol
    for _ in range(max_iter):
        if np.abs(r).max() <= target:
            break
        active = np.abs(r) > target
        lo = np.where(active & (r < 0), np.maximum(lo, s), lo)
        hi = np.where(active & (r > 0), np.minimum(hi, s), hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = r / df
        s_new = s - step
        fallback = ~np.isfinite(s_new) | (s_new < lo) | (s_new > hi)
        s_new = np.where(fallback, 0.5 * (lo + hi), s_new)
        s = np.where(active, s_new, s)
        f, df = bspline_curve(s, kv, ctrl, derivative=True)
        r = f - x
    return s, r


def parameterize(mesh: Mesh, grid: ControlGrid, tol: float = 1e-10,
                 max_iter: int = 50) -> ParameterizedMesh:
    """Find per-vertex (s, t, u) with the trivariate map reproducing the mesh.

    tol is relative to the box side length on each axis. Raises
    ParameterizationError (with the worst vertex) on non-convergence and
    ValueError if any vertex lies outside the grid box.
    """
    config = grid.config
    box = config.box
    v = mesh.vertices
    inside = box.contains(v)
    if not np.all(inside):
        bad = int(np.flatnonzero(~inside)[0])
        raise ValueError(
            f"vertex {bad} at {v[bad]} lies outside the lattice box"
        )
    params = np.empty((mesh.n_vertices, 3))
    for axis_param in range(3):
        a = config.axis_map[axis_param]
        d = config.dims[axis_param]
        x = v[:, a]
        length = box.lengths[a]
        normalized = np.clip((x - box.origin[a]) / length, 0.0, 1.0)
        if config.kind.family == "bernstein":
            # Linear precision: the Bernstein volume map of a uniform grid
            # is the affine box map, so inversion is exact.
            params[:, axis_param] = normalized
            continue
        kv = axis_knot_vector(d, config.kind)
        ctrl = box.origin[a] + (np.arange(d + 1) / d) * length
        abs_tol = tol * length
        s, r = _invert_monotone_spline(x, kv, ctrl, abs_tol, max_iter)
        worst = int(np.argmax(np.abs(r)))
        if abs(r[worst]) > abs_tol:
            raise ParameterizationError(
                f"axis {a}: vertex {worst} residual {abs(r[worst]):.3e} "
                f"exceeds {abs_tol:.3e} after {max_iter} iterations",
                worst_vertex=worst, residual=float(abs(r[worst])),
            )
        params[:, axis_param] = s
    coeffs = _assemble_coefficients(params, config)
    pm = ParameterizedMesh(mesh, params, coeffs, grid)
    limit = tol * float(box.lengths.max())
    if pm.residual > limit:
        worst = int(np.abs(pm.reconstruct() - v).max(axis=1).argmax())
        raise ParameterizationError(
            f"assembled reconstruction residual {pm.residual:.3e} exceeds "
            f"{limit:.3e}",
            worst_vertex=worst, residual=pm.residual,
        )
    return pm


def _assemble_coefficients(params: np.ndarray, config: LatticeConfig
                           ) -> sp.csr_matrix:
    l, m, n = config.dims
    if config.kind.family == "bspline":
        p = config.kind.degree
        firsts, values = [], []
        for axis_param, d in enumerate(config.dims):
            kv = axis_knot_vector(d, config.kind)
            spans, vals = bspline_nonzero(params[:, axis_param], kv)
            firsts.append(spans - p)
            values.append(vals)
        width = p + 1
        prod = (values[0][:, :, None, None]
                * values[1][:, None, :, None]
                * values[2][:, None, None, :])
        off = np.arange(width)
        ii = firsts[0][:, None] + off
        jj = firsts[1][:, None] + off
        kk = firsts[2][:, None] + off
        cols = ((ii[:, :, None, None] * (m + 1) + jj[:, None, :, None])
                * (n + 1) + kk[:, None, None, :])
        nnz_per_row = width**3
        indptr = np.arange(params.shape[0] + 1, dtype=np.int64) * nnz_per_row
        mat = sp.csr_matrix(
            (prod.reshape(-1), cols.reshape(-1), indptr),
            shape=(params.shape[0], config.num_points),
        )
        mat.eliminate_zeros()
        return mat
    # Bernstein: structurally dense rows, assembled in chunks to bound memory.
    blocks = []
    nrows = params.shape[0]
    for start in range(0, nrows, _BERNSTEIN_CHUNK):
        stop = min(start + _BERNSTEIN_CHUNK, nrows)
        bs = bernstein_all(l, params[start:stop, 0])
        bt = bernstein_all(m, params[start:stop, 1])
        bu = bernstein_all(n, params[start:stop, 2])
        prod = bs[:, :, None, None] * bt[:, None, :, None] * bu[:, None, None, :]
        blocks.append(sp.csr_matrix(prod.reshape(stop - start, -1)))
    mat = sp.vstack(blocks, format="csr")
    mat.eliminate_zeros()
    return mat


def deform(pm: ParameterizedMesh, field: DeformationField) -> Mesh:
    """Apply control-point displacements: vertices = coeffs (P0 + delta)."""
    if field.delta.shape[0] != pm.num_points:
        raise ValueError(
            f"field has {field.delta.shape[0]} displacements, lattice has "
            f"{pm.num_points} control points"
        )
    moved = pm.grid.points + field.delta
    return pm.mesh.with_vertices(pm.coeffs @ moved)


def support_mask(pm: ParameterizedMesh, flat_index: int) -> np.ndarray:
    """Vertex indices with a nonzero coefficient for one control point."""
    if not 0 <= flat_index < pm.num_points:
        raise IndexError(
            f"control point {flat_index} outside [0, {pm.num_points})"
        )
    csc = pm._column_store()
    start, stop = csc.indptr[flat_index], csc.indptr[flat_index + 1]
    rows = csc.indices[start:stop]
    vals = csc.data[start:stop]
    return np.sort(rows[vals != 0.0]).astype(np.int64)


# ---------------------------------------------------------------------------
# Serialization

FORMAT_VERSION = 1


def lattice_to_dict(grid: ControlGrid) -> dict:
    c = grid.config
    return {
        "dims": list(c.dims),
        "degree": c.kind.degree,
        "kind": c.kind.family,
        "box": {"origin": c.box.origin.tolist(),
                "lengths": c.box.lengths.tolist()},
        "axis_map": list(c.axis_map),
        "points": grid.points.tolist(),
    }


def lattice_from_dict(data: dict) -> ControlGrid:
    kind = BasisKind(data["kind"], int(data.get("degree", 3)))
    config = LatticeConfig(
        dims=tuple(data["dims"]),
        kind=kind,
        box=Box(np.asarray(data["box"]["origin"], dtype=np.float64),
                np.asarray(data["box"]["lengths"], dtype=np.float64)),
        axis_map=tuple(data.get("axis_map", (0, 1, 2))),
    )
    return ControlGrid(np.asarray(data["points"], dtype=np.float64), config)


def save_lattice(grid: ControlGrid, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(lattice_to_dict(grid), fh)
        fh.write("\n")


def load_lattice(path) -> ControlGrid:
    with open(path, "r", encoding="utf-8") as fh:
        return lattice_from_dict(json.load(fh))


def save_deformation_field(field: DeformationField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(field.to_dict(), fh)
        fh.write("\n")


def load_deformation_field(path) -> DeformationField:
    with open(path, "r", encoding="utf-8") as fh:
        return DeformationField.from_dict(json.load(fh))


def save_parameterization(pm: ParameterizedMesh, path) -> None:
    """Binary artifact with the mesh, parameters, sparse rows, and lattice."""
    c = pm.grid.config
    np.savez_compressed(
        path,
        format_version=FORMAT_VERSION,
        vertices=pm.mesh.vertices,
        faces=pm.mesh.faces,
        params=pm.params,
        coeff_data=pm.coeffs.data,
        coeff_indices=pm.coeffs.indices,
        coeff_indptr=pm.coeffs.indptr,
        grid_points=pm.grid.points,
        dims=np.asarray(c.dims, dtype=np.int64),
        degree=c.kind.degree,
        kind=c.kind.family,
        box_origin=c.box.origin,
        box_lengths=c.box.lengths,
        axis_map=np.asarray(c.axis_map, dtype=np.int64),
    )


def load_parameterization(path) -> ParameterizedMesh:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported parameterization version {version}")
        mesh = Mesh(data["vertices"], data["faces"])
        kind = BasisKind(str(data["kind"]), int(data["degree"]))
        config = LatticeConfig(
            dims=tuple(int(d) for d in data["dims"]),
            kind=kind,
            box=Box(data["box_origin"], data["box_lengths"]),
            axis_map=tuple(int(a) for a in data["axis_map"]),
        )
        grid = ControlGrid(data["grid_points"], config)
        coeffs = sp.csr_matrix(
            (data["coeff_data"], data["coeff_indices"], data["coeff_indptr"]),
            shape=(mesh.n_vertices, config.num_points),
        )
        return ParameterizedMesh(mesh, data["params"], coeffs, grid)
