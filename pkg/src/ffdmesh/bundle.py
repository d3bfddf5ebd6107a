"""Self-contained editor bundle: mesh, lattice, sparse rows, field, pose.

The bundle embeds the per-vertex coefficient rows rather than any knot
machinery, so a consumer only needs a sparse matrix-vector product to
re-evaluate the deformation. Rows are verified to sum to 1 before writing.
"""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp

from .lattice import (ControlGrid, DeformationField, ParameterizedMesh,
                      lattice_from_dict, lattice_to_dict)
from .mesh import Mesh
from .projection import Pose

BUNDLE_VERSION = 1
_ROW_SUM_TOL = 1e-9


def bundle_dict(pm: ParameterizedMesh, field: DeformationField | None = None,
                pose: Pose | None = None) -> dict:
    """Assemble and consistency-check the bundle structure."""
    coeffs = pm.coeffs
    row_sums = np.asarray(coeffs.sum(axis=1)).ravel()
    worst = float(np.abs(row_sums - 1.0).max())
    if worst > _ROW_SUM_TOL:
        raise ValueError(
            f"coefficient rows must sum to 1; worst deviation {worst:.3e}"
        )
    if field is None:
        field = DeformationField.zero(pm.num_points)
    if field.delta.shape[0] != pm.num_points:
        raise ValueError("deformation field length does not match the lattice")
    indices = [
        coeffs.indices[coeffs.indptr[q]:coeffs.indptr[q + 1]].tolist()
        for q in range(pm.n_vertices)
    ]
    values = [
        coeffs.data[coeffs.indptr[q]:coeffs.indptr[q + 1]].tolist()
        for q in range(pm.n_vertices)
    ]
    data = {
        "version": BUNDLE_VERSION,
        "mesh": {"vertices": pm.mesh.vertices.tolist(),
                 "faces": pm.mesh.faces.tolist()},
        "lattice": lattice_to_dict(pm.grid),
        "coeffs": {"indices": indices, "values": values},
        "delta": field.delta.tolist(),
    }
    if pose is not None:
        data["pose"] = pose.to_dict()
    return data


def save_bundle(pm: ParameterizedMesh, path,
                field: DeformationField | None = None,
                pose: Pose | None = None) -> None:
    data = bundle_dict(pm, field, pose)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
        fh.write("\n")


def load_bundle(path) -> tuple[ParameterizedMesh, DeformationField, Pose | None]:
    """Rebuild the parameterized mesh (and field/pose) from a bundle file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    version = int(data.get("version", -1))
    if version != BUNDLE_VERSION:
        raise ValueError(f"unsupported bundle version {version}")
    mesh = Mesh(np.asarray(data["mesh"]["vertices"], dtype=np.float64),
                np.asarray(data["mesh"]["faces"], dtype=np.int64))
    grid = lattice_from_dict(data["lattice"])
    indices = data["coeffs"]["indices"]
    values = data["coeffs"]["values"]
    indptr = np.zeros(len(indices) + 1, dtype=np.int64)
    np.cumsum([len(r) for r in indices], out=indptr[1:])
    flat_idx = np.concatenate([np.asarray(r, dtype=np.int32) for r in indices])
    flat_val = np.concatenate([np.asarray(r, dtype=np.float64) for r in values])
    coeffs = sp.csr_matrix((flat_val, flat_idx, indptr),
                           shape=(mesh.n_vertices, grid.config.num_points))
    # The bundle stores no parameters; reconstruct a placeholder from the
    # box so the container still validates row-by-row reconstruction.
    local = (mesh.vertices - grid.config.box.origin) / grid.config.box.lengths
    params = np.clip(local[:, list(grid.config.axis_map)], 0.0, 1.0)
    pm = ParameterizedMesh(mesh, params, coeffs, ControlGrid(grid.points,
                                                             grid.config))
    field = DeformationField(np.asarray(data["delta"], dtype=np.float64))
    pose = Pose.from_dict(data["pose"]) if "pose" in data else None
    return pm, field, pose
