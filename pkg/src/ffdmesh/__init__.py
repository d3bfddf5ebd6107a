"""Trivariate free-form deformation of triangle meshes.

A reference mesh is parameterized inside a uniform control lattice
(B-spline or Bernstein basis); control-point displacements deform it,
a scaled orthographic pose places it, and weighted least squares fits
both to target meshes or 68-point landmark sets.
"""

from .basis import (BasisKind, KnotVector, bernstein_basis, bspline_basis,
                    bspline_basis_derivative, tensor_row)
from .bundle import load_bundle, save_bundle
from .errors import (DegenerateGeometryError, FFDError, GimbalLockError,
                     MeshFormatError, ParameterizationError,
                     RankDeficiencyWarning, SolverError)
from .estimators import DeformationFitter, FreeFormDeformer
from .evaluation import (EvalRecord, KindComparison, NmeTable, balanced_sample,
                         bin_and_tabulate, compare_kinds, nme,
                         read_records_jsonl, render_nme_table)
from .fitting import (FitConfig, LossReport, LossWeights, fit_deformation,
                      fit_pose_and_deformation, landmark_region_loss,
                      loss_gradient, total_loss, vertex_loss)
from .lattice import (Box, ControlGrid, DeformationField, LatticeConfig,
                      ParameterizedMesh, build_lattice, deform,
                      load_deformation_field, load_lattice,
                      load_parameterization, parameterize,
                      save_deformation_field, save_lattice,
                      save_parameterization, support_mask)
from .mesh import (LandmarkScheme, Mesh, N_LANDMARKS, REGION_NAMES,
                   REGION_SLOTS, bounding_box, load_landmark_scheme,
                   load_mesh, sample_landmarks, save_landmark_scheme,
                   save_mesh)
from .projection import (Pose, apply_pose, estimate_pose, euler_degrees,
                         load_pose, rotation_ypr, save_pose, yaw_degrees)

__version__ = "0.1.0"

__all__ = [
    "BasisKind", "Box", "ControlGrid", "DeformationField",
    "DeformationFitter", "DegenerateGeometryError", "EvalRecord", "FFDError",
    "FitConfig", "FreeFormDeformer", "GimbalLockError", "KindComparison",
    "KnotVector", "LandmarkScheme", "LatticeConfig", "LossReport",
    "LossWeights", "Mesh", "MeshFormatError", "N_LANDMARKS", "NmeTable",
    "ParameterizationError", "ParameterizedMesh", "Pose",
    "REGION_NAMES", "REGION_SLOTS", "RankDeficiencyWarning", "SolverError",
    "apply_pose", "balanced_sample", "bernstein_basis", "bin_and_tabulate",
    "bounding_box", "bspline_basis", "bspline_basis_derivative",
    "build_lattice", "compare_kinds", "deform", "estimate_pose",
    "euler_degrees", "fit_deformation", "fit_pose_and_deformation",
    "landmark_region_loss", "load_bundle", "load_deformation_field",
    "load_landmark_scheme", "load_lattice", "load_mesh",
    "load_parameterization", "load_pose", "loss_gradient", "nme",
    "parameterize", "read_records_jsonl", "render_nme_table", "rotation_ypr",
    "sample_landmarks", "save_bundle", "save_deformation_field",
    "save_landmark_scheme", "save_lattice", "save_mesh",
    "save_parameterization", "save_pose", "support_mask", "tensor_row",
    "total_loss", "vertex_loss", "yaw_degrees",
]
