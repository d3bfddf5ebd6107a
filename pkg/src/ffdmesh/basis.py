"""Bernstein and B-spline basis evaluation and tensor-product rows.

B-spline evaluation uses the local nonzero-band triangle (all degree-p
functions alive on the containing span at once), which is algebraically
the Cox-de Boor recursion rearranged to avoid the 0/0 guards. Knot spans
follow the half-open convention [t_i, t_{i+1}); the final span is closed
at u = 1 so the last clamped function evaluates to 1 there.

Everything here is pure and stateless given an immutable KnotVector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Clamped knot vector on [0, 1] with uniform interior knots."""

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        p = self.degree
        if p < 0:
            raise ValueError("degree must be nonnegative")
        t = np.asarray(self.knots, dtype=np.float64)
        if t.ndim != 1 or t.size < 2 * (p + 1):
            raise ValueError("knot vector too short for its degree")
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be nondecreasing")
        if np.any(t[: p + 1] != 0.0) or np.any(t[-(p + 1):] != 1.0):
            raise ValueError(
                "knot vector must be clamped: first/last knot repeated degree+1 times"
            )
        interior = t[p + 1: t.size - p - 1]
        if interior.size:
            spans = interior.size + 1
            expected = np.arange(1, spans) / spans
            if np.abs(interior - expected).max() > 1e-12:
                raise ValueError("interior knots must be uniform")
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "knots", t)

    @classmethod
    def clamped_uniform(cls, num_basis: int, degree: int) -> "KnotVector":
        """num_basis functions of the given degree, uniform interior knots."""
        if num_basis < degree + 1:
            raise ValueError(
                f"need at least degree+1={degree + 1} functions, got {num_basis}"
            )
        spans = num_basis - degree
        interior = np.arange(1, spans) / spans
        knots = np.concatenate(
            [np.zeros(degree + 1), interior, np.ones(degree + 1)]
        )
        return cls(degree, knots)

    @property
    def num_basis(self) -> int:
        return self.knots.size - self.degree - 1

    def find_span(self, u: float) -> int:
        """Index k with knots[k] <= u < knots[k+1]; u = 1 maps to the last span."""
        return int(self.find_spans(np.asarray([u]))[0])

    def find_spans(self, u: np.ndarray) -> np.ndarray:
        t = self.knots
        k = np.searchsorted(t, u, side="right") - 1
        return np.clip(k, self.degree, self.num_basis - 1)


def _check_u(u) -> None:
    if np.any(np.asarray(u) < 0.0) or np.any(np.asarray(u) > 1.0):
        raise ValueError("parameter must lie in [0, 1]")


def bspline_nonzero(u: np.ndarray, kv: KnotVector) -> tuple[np.ndarray, np.ndarray]:
    """All degree-p basis values alive at each u.

    Returns (spans, values) where values[q, r] = B_{spans[q]-p+r, p}(u[q]).
    Vectorized over u; the per-degree loop is O(p^2).
    """
    u = np.asarray(u, dtype=np.float64)
    _check_u(u)
    p = kv.degree
    t = kv.knots
    spans = kv.find_spans(u)
    n = u.size
    values = np.zeros((n, p + 1))
    values[:, 0] = 1.0
    left = np.zeros((n, p + 1))
    right = np.zeros((n, p + 1))
    for j in range(1, p + 1):
        left[:, j] = u - t[spans + 1 - j]
        right[:, j] = t[spans + j] - u
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = values[:, r] / denom
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved
    return spans, values


def bspline_basis(i: int, u: float, kv: KnotVector) -> float:
    """Single basis function B_{i,p}(u)."""
    if not 0 <= i < kv.num_basis:
        raise IndexError(f"basis index {i} out of range [0, {kv.num_basis})")
    _check_u(u)
    span = kv.find_span(u)
    if i < span - kv.degree or i > span:
        return 0.0
    _, values = bspline_nonzero(np.asarray([u]), kv)
    return float(values[0, i - (span - kv.degree)])


def bspline_basis_derivative(i: int, u: float, kv: KnotVector) -> float:
    """d/du B_{i,p}(u) by the two-term lower-degree formula (0/0 := 0)."""
    if not 0 <= i < kv.num_basis:
        raise IndexError(f"basis index {i} out of range [0, {kv.num_basis})")
    _check_u(u)
    p = kv.degree
    if p == 0:
        return 0.0
    t = kv.knots
    left = 0.0
    d1 = t[i + p] - t[i]
    if d1 > 0.0:
        left = p / d1 * _basis_lower(i, u, kv)
    right = 0.0
    d2 = t[i + p + 1] - t[i + 1]
    if d2 > 0.0:
        right = p / d2 * _basis_lower(i + 1, u, kv)
    return left - right


def _basis_lower(i: int, u: float, kv: KnotVector) -> float:
    """B_{i,p-1}(u) over the same knot vector."""
    p = kv.degree - 1
    t = kv.knots
    span = kv.find_span(u)
    # Degree-0 base case on the containing span.
    if p == 0:
        return 1.0 if i == span else 0.0
    if i < span - p or i > span:
        return 0.0
    values = np.zeros(p + 1)
    values[0] = 1.0
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    for j in range(1, p + 1):
        left[j] = u - t[span + 1 - j]
        right[j] = t[span + j] - u
        saved = 0.0
        for r in range(j):
            temp = values[r] / (right[r + 1] + left[j - r])
            values[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        values[j] = saved
    return float(values[i - (span - p)])


def bspline_curve(u: np.ndarray, kv: KnotVector, ctrl: np.ndarray,
                  derivative: bool = False) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Scalar spline f(u) = sum_i B_{i,p}(u) ctrl[i], optionally with f'."""
    u = np.asarray(u, dtype=np.float64)
    ctrl = np.asarray(ctrl, dtype=np.float64)
    if ctrl.shape != (kv.num_basis,):
        raise ValueError("one control value per basis function required")
    spans, values = bspline_nonzero(u, kv)
    p = kv.degree
    offsets = np.arange(p + 1)
    idx = spans[:, None] - p + offsets[None, :]
    f = np.einsum("nr,nr->n", values, ctrl[idx])
    if not derivative:
        return f
    t = kv.knots
    if p == 0:
        return f, np.zeros_like(f)
    # Derivative curve: degree p-1 over the same spans with difference
    # control values p*(c_{i+1}-c_i)/(t_{i+p+1}-t_{i+1}).
    dt = t[p + 1: p + 1 + kv.num_basis - 1] - t[1: kv.num_basis]
    dctrl = p * np.diff(ctrl) / dt
    lower = KnotVector(p - 1, t[1:-1])
    spans_l = spans - 1  # same span in the trimmed knot vector
    values_l = _nonzero_at_spans(u, lower, spans_l)
    idx_l = spans_l[:, None] - (p - 1) + np.arange(p)[None, :]
    df = np.einsum("nr,nr->n", values_l, dctrl[idx_l])
    return f, df


def _nonzero_at_spans(u: np.ndarray, kv: KnotVector, spans: np.ndarray) -> np.ndarray:
    """Nonzero-band triangle with externally supplied span indices."""
    p = kv.degree
    t = kv.knots
    n = u.size
    values = np.zeros((n, p + 1))
    values[:, 0] = 1.0
    left = np.zeros((n, p + 1))
    right = np.zeros((n, p + 1))
    for j in range(1, p + 1):
        left[:, j] = u - t[spans + 1 - j]
        right[:, j] = t[spans + j] - u
        saved = np.zeros(n)
        for r in range(j):
            temp = values[:, r] / (right[:, r + 1] + left[:, j - r])
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved
    return values


def bernstein_basis(i: int, n: int, u: float) -> float:
    """C(n,i) u^i (1-u)^(n-i)."""
    if not 0 <= i <= n:
        raise IndexError(f"Bernstein index {i} out of range [0, {n}]")
    _check_u(u)
    return math.comb(n, i) * u**i * (1.0 - u) ** (n - i)


def bernstein_all(n: int, u: np.ndarray) -> np.ndarray:
    """All n+1 Bernstein values at each u; shape (len(u), n+1)."""
    u = np.asarray(u, dtype=np.float64)
    _check_u(u)
    i = np.arange(n + 1)
    coef = np.array([math.comb(n, k) for k in i], dtype=np.float64)
    return coef * u[:, None] ** i * (1.0 - u[:, None]) ** (n - i)


@dataclass(frozen=True)
class BasisKind:
    """Basis family for the lattice: 'bspline' (local) or 'bernstein' (global).

    For the B-spline family, degree is the spline degree (3 unless testing).
    Bernstein factors take their degree from the lattice division counts, so
    the degree field is ignored for that family.
    """

    family: str = "bspline"
    degree: int = 3

    def __post_init__(self):
        if self.family not in ("bspline", "bernstein"):
            raise ValueError(f"unknown basis family '{self.family}'")
        if self.family == "bspline" and self.degree < 1:
            raise ValueError("B-spline lattice degree must be >= 1")

    @property
    def is_local(self) -> bool:
        return self.family == "bspline"


@lru_cache(maxsize=64)
def _axis_knots(num_basis: int, degree: int) -> KnotVector:
    return KnotVector.clamped_uniform(num_basis, degree)


def axis_knot_vector(divisions: int, kind: BasisKind) -> KnotVector:
    """Knot vector for one lattice axis with `divisions+1` control points."""
    if kind.family != "bspline":
        raise ValueError("only the B-spline family uses knot vectors")
    return _axis_knots(divisions + 1, kind.degree)


def _axis_values(u: np.ndarray, divisions: int, kind: BasisKind
                 ) -> tuple[np.ndarray, np.ndarray]:
    """(first nonzero index per point, nonzero values) along one axis."""
    if kind.family == "bernstein":
        vals = bernstein_all(divisions, u)
        first = np.zeros(u.size, dtype=np.int64)
        return first, vals
    kv = axis_knot_vector(divisions, kind)
    spans, vals = bspline_nonzero(u, kv)
    return spans - kind.degree, vals


def tensor_row(stu, dims: tuple[int, int, int], kind: BasisKind
               ) -> tuple[np.ndarray, np.ndarray]:
    """One row of the trivariate coefficient matrix at parameters (s, t, u).

    Returns (flat column indices, values) with exact zeros pruned. Flat
    index order is (i, j, k) with k fastest. The row sums to 1.
    """
    s, t, u = (float(x) for x in stu)
    l, m, n = dims
    fi, vi = _axis_values(np.asarray([s]), l, kind)
    fj, vj = _axis_values(np.asarray([t]), m, kind)
    fk, vk = _axis_values(np.asarray([u]), n, kind)
    prod = vi[0][:, None, None] * vj[0][None, :, None] * vk[0][None, None, :]
    ii = fi[0] + np.arange(vi.shape[1])
    jj = fj[0] + np.arange(vj.shape[1])
    kk = fk[0] + np.arange(vk.shape[1])
    cols = ((ii[:, None, None] * (m + 1) + jj[None, :, None]) * (n + 1)
            + kk[None, None, :])
    values = prod.ravel()
    cols = cols.ravel()
    keep = values != 0.0
    return cols[keep], values[keep]
