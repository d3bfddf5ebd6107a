"""Triangle mesh container, 68-landmark scheme, and OBJ/JSON file I/O.

Meshes are immutable after construction: the vertex and face arrays are
marked read-only so instances can be shared freely across threads. All
deformations elsewhere in the package produce new meshes with the face
list carried over unchanged.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MeshFormatError
from .validation import as_faces, as_points

logger = logging.getLogger(__name__)

# Canonical 68-point layout: each region owns a fixed set of slots in the
# 0..67 ordering (contour first, lips split anatomically with the inner
# ring interleaved).
REGION_SLOTS: dict[str, tuple[int, ...]] = {
    "contour": tuple(range(0, 17)),
    "right_eyebrow": tuple(range(17, 22)),
    "left_eyebrow": tuple(range(22, 27)),
    "upper_nose": tuple(range(27, 31)),
    "lower_nose": tuple(range(31, 36)),
    "right_eye": tuple(range(36, 42)),
    "left_eye": tuple(range(42, 48)),
    "upper_lip": tuple(range(48, 55)) + tuple(range(60, 65)),
    "lower_lip": tuple(range(55, 60)) + tuple(range(65, 68)),
}

REGION_NAMES: tuple[str, ...] = tuple(REGION_SLOTS)

N_LANDMARKS = 68


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangle mesh: (N, 3) float64 vertices and (F, 3) int64 faces."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = as_points(self.vertices, "vertices")
        if v.shape[0] < 3:
            raise ValueError(f"mesh needs at least 3 vertices, got {v.shape[0]}")
        f = as_faces(self.faces, v.shape[0])
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        """New mesh with replaced vertex positions and the same face list."""
        if np.shape(vertices) != self.vertices.shape:
            raise ValueError(
                f"vertex array shape {np.shape(vertices)} does not match "
                f"{self.vertices.shape}"
            )
        return Mesh(np.asarray(vertices, dtype=np.float64), self.faces)


def bounding_box(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise (min corner, max corner) over all vertices."""
    v = mesh.vertices
    if v.shape[0] < 1:
        raise ValueError("empty mesh has no bounding box")
    return v.min(axis=0), v.max(axis=0)


class LandmarkScheme:
    """Maps each of the 9 facial regions to mesh vertex indices.

    The per-region lists are ordered to match the region's canonical slots
    (see REGION_SLOTS), so the full 68-point ordering is recoverable.
    """

    def __init__(self, regions: dict[str, list[int]]):
        names = set(regions)
        if names != set(REGION_NAMES):
            missing = set(REGION_NAMES) - names
            extra = names - set(REGION_NAMES)
            raise ValueError(
                f"scheme must name exactly the 9 regions; missing={sorted(missing)}, "
                f"unexpected={sorted(extra)}"
            )
        self.regions: dict[str, tuple[int, ...]] = {}
        for name in REGION_NAMES:
            idx = [int(i) for i in regions[name]]
            want = len(REGION_SLOTS[name])
            if len(idx) != want:
                raise ValueError(
                    f"region '{name}' must list {want} indices, got {len(idx)}"
                )
            if any(i < 0 for i in idx):
                raise ValueError(f"region '{name}' contains a negative index")
            self.regions[name] = tuple(idx)
        flat = [i for name in REGION_NAMES for i in self.regions[name]]
        if len(set(flat)) != N_LANDMARKS:
            raise ValueError("scheme indices must be 68 distinct values")

    def slot_indices(self) -> np.ndarray:
        """Vertex index per landmark slot, in the canonical 0..67 order."""
        out = np.empty(N_LANDMARKS, dtype=np.int64)
        for name in REGION_NAMES:
            out[list(REGION_SLOTS[name])] = self.regions[name]
        return out

    def region_slots(self, name: str) -> tuple[int, ...]:
        if name not in REGION_SLOTS:
            raise KeyError(f"unknown region '{name}'")
        return REGION_SLOTS[name]

    def region_indices(self, name: str) -> np.ndarray:
        """Mesh vertex indices belonging to one region."""
        if name not in self.regions:
            raise KeyError(f"unknown region '{name}'")
        return np.asarray(self.regions[name], dtype=np.int64)

    def validate_for(self, mesh: Mesh) -> None:
        top = int(self.slot_indices().max())
        if top >= mesh.n_vertices:
            raise IndexError(
                f"scheme index {top} out of range for mesh with "
                f"{mesh.n_vertices} vertices"
            )

    def to_dict(self) -> dict:
        return {"regions": {name: list(self.regions[name]) for name in REGION_NAMES}}

    @classmethod
    def from_dict(cls, data: dict) -> "LandmarkScheme":
        if "regions" not in data:
            raise ValueError("scheme JSON must have a top-level 'regions' object")
        return cls(data["regions"])


def sample_landmarks(mesh: Mesh, scheme: LandmarkScheme) -> np.ndarray:
    """Gather the 68 landmark positions, ordered by canonical slot."""
    scheme.validate_for(mesh)
    return mesh.vertices[scheme.slot_indices()]


def load_landmark_scheme(path) -> LandmarkScheme:
    with open(path, "r", encoding="utf-8") as fh:
        return LandmarkScheme.from_dict(json.load(fh))


def save_landmark_scheme(scheme: LandmarkScheme, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scheme.to_dict(), fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# File I/O


def load_mesh(path) -> Mesh:
    """Load a mesh from .obj (v/f records) or the JSON mesh format.

    Vertex order is preserved exactly as stored. Non-triangle faces and
    out-of-range indices are rejected with the offending line number.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _load_json_mesh(path)
    return _load_obj(path)


def save_mesh(mesh: Mesh, path) -> None:
    """Write a mesh; format chosen by extension (.obj default, .json).

    Floats are written at full round-trip precision, so load(save(m))
    reproduces the vertices bit for bit.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        _save_json_mesh(mesh, path)
    else:
        _save_obj(mesh, path)


def _load_obj(path: Path) -> Mesh:
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    ignored = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshFormatError("vertex record needs 3 coordinates", lineno)
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise MeshFormatError(f"bad vertex coordinate: {exc}", lineno)
            elif tag == "f":
                refs = parts[1:]
                if len(refs) != 3:
                    raise MeshFormatError(
                        f"face {len(faces)} has {len(refs)} vertices; only "
                        "triangles are supported",
                        lineno,
                    )
                idx = []
                for ref in refs:
                    head = ref.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise MeshFormatError(f"bad face index '{ref}'", lineno)
                    if i < 1:
                        raise MeshFormatError(
                            f"face index {i} invalid; OBJ indices are 1-based",
                            lineno,
                        )
                    if i > len(vertices):
                        raise MeshFormatError(
                            f"face index {i} exceeds {len(vertices)} vertices seen "
                            "so far",
                            lineno,
                        )
                    idx.append(i - 1)
                faces.append(tuple(idx))
            else:
                ignored += 1
    if ignored:
        logger.warning("%s: ignored %d non-v/f records", path, ignored)
    if len(vertices) < 3:
        raise MeshFormatError(f"mesh has only {len(vertices)} vertices")
    return Mesh(np.array(vertices, dtype=np.float64),
                np.array(faces, dtype=np.int64).reshape(-1, 3))


def _save_obj(mesh: Mesh, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in mesh.faces.tolist():
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def _load_json_mesh(path: Path) -> Mesh:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeshFormatError(str(exc), exc.lineno)
    if not isinstance(data, dict) or "vertices" not in data \
            or "faces" not in data:
        raise MeshFormatError("mesh JSON must be an object with 'vertices' "
                              "and 'faces'")
    return Mesh(np.asarray(data["vertices"], dtype=np.float64),
                np.asarray(data["faces"], dtype=np.int64).reshape(-1, 3))


def _save_json_mesh(mesh: Mesh, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {"vertices": mesh.vertices.tolist(), "faces": mesh.faces.tolist()},
            fh,
        )
        fh.write("\n")
