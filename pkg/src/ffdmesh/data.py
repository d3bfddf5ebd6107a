"""Deterministic synthetic face mesh and its 68-landmark scheme.

The sample face is generated procedurally (no dataset download): a
regular grid over the unit square is masked to an elliptical face region,
keeping exactly the requested number of vertices, and lifted by a smooth
depth profile (dome, nose, brow, eye sockets, lips, chin). World units
are millimeters; the face is tall (height > width > depth), so it suits
the default (6, 19, 4) lattice.

The default 35,709-vertex face is the mesh the packaged landmark scheme
file indexes into.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import (Mesh, LandmarkScheme, REGION_SLOTS, save_landmark_scheme,
                   save_mesh)

DEFAULT_VERTICES = 35709

FACE_WIDTH_MM = 150.0
FACE_HEIGHT_MM = 200.0


@dataclass(frozen=True, eq=False)
class SampleFace:
    """Generated face mesh plus the grid coordinates it was built from."""

    mesh: Mesh
    uv: np.ndarray  # (N, 2) unit-square coordinates per vertex

    def landmark_scheme(self) -> LandmarkScheme:
        return _snap_landmarks(self.uv)


def _depth_profile(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Face relief in mm over the unit square (v runs chin -> forehead)."""

    def bump(cu, cv, su, sv, amp):
        return amp * np.exp(-(((u - cu) / su) ** 2 + ((v - cv) / sv) ** 2))

    dome_r = ((u - 0.5) / 0.62) ** 2 + ((v - 0.5) / 0.62) ** 2
    z = 52.0 * np.sqrt(np.clip(1.0 - dome_r, 0.0, None))
    z += bump(0.50, 0.45, 0.060, 0.120, 18.0)   # nose ridge
    z += bump(0.50, 0.40, 0.110, 0.045, 6.0)    # nose base flare
    z += bump(0.50, 0.625, 0.220, 0.050, 5.0)   # brow ridge
    z -= bump(0.34, 0.575, 0.080, 0.045, 5.0)   # right eye socket
    z -= bump(0.66, 0.575, 0.080, 0.045, 5.0)   # left eye socket
    z += bump(0.50, 0.270, 0.120, 0.040, 5.0)   # lips
    z -= bump(0.50, 0.225, 0.080, 0.018, 2.5)   # mouth opening
    z += bump(0.50, 0.090, 0.120, 0.080, 6.0)   # chin
    return z


def _grid_shape_for(n_vertices: int) -> tuple[int, int]:
    # Ellipse keeps ~pi/4 of the grid; 1.12 height/width matches the face.
    cols = int(np.ceil(np.sqrt(n_vertices / (np.pi / 4.0) / 1.12)))
    rows = int(np.ceil(1.12 * cols))
    while rows * cols < n_vertices / (np.pi / 4.0) * 1.02:
        cols += 1
        rows = int(np.ceil(1.12 * cols))
    return rows, cols


def sample_face_mesh(n_vertices: int = DEFAULT_VERTICES,
                     grid_shape: tuple[int, int] | None = None) -> SampleFace:
    """Build the synthetic face with exactly n_vertices vertices."""
    if grid_shape is None:
        grid_shape = (240, 200) if n_vertices == DEFAULT_VERTICES \
            else _grid_shape_for(n_vertices)
    rows, cols = grid_shape
    if rows * cols < n_vertices:
        raise ValueError(
            f"grid {grid_shape} has fewer cells than {n_vertices} vertices"
        )
    vv, uu = np.meshgrid(np.arange(rows) / (rows - 1),
                         np.arange(cols) / (cols - 1), indexing="ij")
    u = uu.ravel()
    v = vv.ravel()
    # Elliptical face region; keep exactly n_vertices by radius rank, with
    # the grid id as a deterministic tiebreaker.
    r2 = ((u - 0.5) / 0.5) ** 2 + ((v - 0.5) / 0.5) ** 2
    order = np.lexsort((np.arange(r2.size), r2))
    keep_ids = np.sort(order[:n_vertices])
    index_of = np.full(r2.size, -1, dtype=np.int64)
    index_of[keep_ids] = np.arange(n_vertices)

    ku, kv = u[keep_ids], v[keep_ids]
    x = (ku - 0.5) * FACE_WIDTH_MM
    y = (kv - 0.5) * FACE_HEIGHT_MM
    z = _depth_profile(ku, kv)
    vertices = np.column_stack([x, y, z])

    # Triangulate grid cells whose four corners were all kept.
    cell_r, cell_c = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1),
                                 indexing="ij")
    a = (cell_r * cols + cell_c).ravel()
    b = a + 1
    c = a + cols
    d = c + 1
    ok = (index_of[a] >= 0) & (index_of[b] >= 0) & (index_of[c] >= 0) \
        & (index_of[d] >= 0)
    a, b, c, d = (index_of[arr[ok]] for arr in (a, b, c, d))
    faces = np.concatenate([
        np.column_stack([a, b, d]),
        np.column_stack([a, d, c]),
    ])
    mesh = Mesh(vertices, faces)
    return SampleFace(mesh, np.column_stack([ku, kv]))


def _landmark_positions() -> np.ndarray:
    """Canonical 68 landmark targets in unit-square (u, v) coordinates."""
    pts = np.zeros((68, 2))
    # Contour: jaw arc from the right side over the chin to the left side.
    t = np.pi * np.arange(17) / 16
    pts[0:17, 0] = 0.5 - 0.44 * np.cos(t)
    pts[0:17, 1] = 0.55 - 0.48 * np.sin(t)
    # Eyebrows with a slight arch.
    k = np.arange(5)
    arch = 0.02 * np.sin(np.pi * k / 4)
    pts[17:22, 0] = 0.27 + 0.045 * k
    pts[17:22, 1] = 0.645 + arch
    pts[22:27, 0] = 0.55 + 0.045 * k
    pts[22:27, 1] = 0.645 + arch[::-1]
    # Nose bridge and base row.
    pts[27:31, 0] = 0.5
    pts[27:31, 1] = 0.60 - 0.05 * np.arange(4)
    pts[31:36, 0] = 0.5 + 0.035 * (np.arange(5) - 2)
    pts[31:36, 1] = 0.40
    # Eyes as hexagons; outer corners first for the right eye, inner first
    # for the left (mirror ordering).
    def hexagon(cu, cv, ru, rv, start_deg):
        ang = np.radians(start_deg + np.array([0, 60, 120, 180, 240, 300]))
        return np.column_stack([cu + ru * np.cos(ang), cv + rv * np.sin(ang)])

    pts[36:42] = hexagon(0.36, 0.575, 0.050, 0.022, 180)
    pts[42:48] = hexagon(0.64, 0.575, 0.050, 0.022, 180)
    # Mouth: outer ring (upper arc right->left, then lower arc back), inner
    # ring likewise.
    def mouth_ring(ru, rv, n_upper, n_lower):
        upper_t = np.pi * np.arange(n_upper) / (n_upper - 1)
        lower_t = np.pi * (1.0 + np.arange(1, n_lower + 1) / (n_lower + 1))
        ring = np.concatenate([upper_t, lower_t])
        return np.column_stack([0.5 - ru * np.cos(ring),
                                0.27 + rv * np.sin(ring)])

    pts[48:60] = mouth_ring(0.090, 0.035, 7, 5)
    pts[60:68] = mouth_ring(0.052, 0.016, 5, 3)
    return pts


def _snap_landmarks(uv: np.ndarray) -> LandmarkScheme:
    """Snap canonical positions to distinct nearest mesh vertices."""
    targets = _landmark_positions()
    taken: set[int] = set()
    slots = np.empty(68, dtype=np.int64)
    for q in range(68):
        d2 = np.sum((uv - targets[q]) ** 2, axis=1)
        for idx in np.argsort(d2, kind="stable"):
            if int(idx) not in taken:
                slots[q] = int(idx)
                taken.add(int(idx))
                break
    regions = {
        name: [int(slots[s]) for s in REGION_SLOTS[name]]
        for name in REGION_SLOTS
    }
    return LandmarkScheme(regions)


def sample_landmark_scheme() -> LandmarkScheme:
    """The packaged scheme for the default 35,709-vertex sample face."""
    ref = importlib.resources.files("ffdmesh") / "data" / "landmarks_68.json"
    return LandmarkScheme.from_dict(json.loads(ref.read_text()))


def write_sample_assets(out_dir, n_vertices: int = DEFAULT_VERTICES) -> dict:
    """Write face.obj and landmarks_68.json; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    face = sample_face_mesh(n_vertices)
    mesh_path = out / "face.obj"
    scheme_path = out / "landmarks_68.json"
    save_mesh(face.mesh, mesh_path)
    save_landmark_scheme(face.landmark_scheme(), scheme_path)
    return {"mesh": str(mesh_path), "scheme": str(scheme_path)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Generate the bundled synthetic face mesh and landmark "
                    "scheme as files."
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--vertices", type=int, default=DEFAULT_VERTICES)
    args = parser.parse_args(argv)
    paths = write_sample_assets(args.out, args.vertices)
    print(f"wrote {paths['mesh']} and {paths['scheme']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
