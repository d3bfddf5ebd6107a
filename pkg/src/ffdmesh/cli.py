"""Command line surface: embed, deform, fit, eval, export-bundle.

Every command is deterministic given its inputs and flags; residual
diagnostics are printed on success and all module errors exit nonzero
with a message on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .basis import BasisKind
from .bundle import save_bundle
from .errors import FFDError
from .evaluation import (balanced_sample, bin_and_tabulate,
                         read_records_jsonl, render_nme_table)
from .fitting import (FitConfig, LossWeights, fit_deformation,
                      fit_pose_and_deformation)
from .lattice import (build_lattice, load_deformation_field,
                      load_parameterization, parameterize,
                      save_deformation_field, save_lattice,
                      save_parameterization)
from .mesh import load_landmark_scheme, load_mesh, save_mesh
from .projection import apply_pose, load_pose, save_pose
from .validation import as_points

DEFAULT_DIMS = (6, 19, 4)


def mesh_digest(vertices: np.ndarray, faces: np.ndarray) -> str:
    """SHA-256 over the raw vertex and face bytes; stable across OBJ round trips."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(vertices, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(faces, dtype=np.int64).tobytes())
    return h.hexdigest()


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("dims must be 'l,m,n'")
    return tuple(int(p) for p in parts)


def _add_embed(sub) -> None:
    p = sub.add_parser("embed", help="build a lattice and parameterize a mesh")
    p.add_argument("mesh", help="reference mesh (.obj or .json)")
    p.add_argument("--dims", type=_parse_dims, default=DEFAULT_DIMS,
                   help="lattice divisions l,m,n (default 6,19,4)")
    p.add_argument("--kind", choices=("bspline", "bernstein"),
                   default="bspline")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--padding", type=float, default=0.05)
    p.add_argument("--out", required=True,
                   help="output directory for lattice.json + param.npz")
    p.set_defaults(func=cmd_embed)


def cmd_embed(args) -> int:
    mesh = load_mesh(args.mesh)
    kind = BasisKind(args.kind, args.degree)
    grid = build_lattice(mesh, args.dims, kind, args.padding)
    pm = parameterize(mesh, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_lattice(grid, out / "lattice.json")
    save_parameterization(pm, out / "param.npz")
    diag = grid.config.box.diagonal
    print(f"control points: {grid.config.num_points}")
    print(f"max reconstruction residual: {pm.residual:.6e} "
          f"({pm.residual / diag:.3e} of box diagonal)")
    print(f"wrote {out / 'lattice.json'} and {out / 'param.npz'}")
    return 0


def _add_deform(sub) -> None:
    p = sub.add_parser("deform", help="apply a displacement field to the "
                                      "parameterized mesh")
    p.add_argument("param", help="param.npz from 'embed'")
    p.add_argument("delta", help="deformation field JSON")
    p.add_argument("--pose", help="optional pose JSON applied after deforming")
    p.add_argument("--out", required=True, help="output mesh path (.obj/.json)")
    p.set_defaults(func=cmd_deform)


def cmd_deform(args) -> int:
    pm = load_parameterization(args.param)
    field = load_deformation_field(args.delta)
    mesh = pm.deform(field)
    if args.pose:
        mesh = apply_pose(mesh, load_pose(args.pose))
    save_mesh(mesh, args.out)
    print(f"mesh sha256: {mesh_digest(mesh.vertices, mesh.faces)}")
    print(f"wrote {args.out}")
    return 0


def _add_fit(sub) -> None:
    p = sub.add_parser("fit", help="fit displacements (and a pose) to a "
                                   "target mesh or 68 landmarks")
    p.add_argument("param", help="param.npz from 'embed'")
    p.add_argument("target", help="target mesh (.obj/.json) or landmark JSON "
                                  "({'landmarks': [[x,y,z] x68]})")
    p.add_argument("--scheme", required=True, help="landmark scheme JSON")
    p.add_argument("--weights", help="loss weights JSON")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="Tikhonov regularization on the displacements")
    p.add_argument("--no-pose", action="store_true",
                   help="fit in the world frame without a pose")
    p.add_argument("--rounds", type=int, default=8)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)


def _load_target(path):
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if "landmarks" in data:
            return as_points(data["landmarks"], "landmarks"), True
    return load_mesh(path), False


def cmd_fit(args) -> int:
    pm = load_parameterization(args.param)
    target, landmarks_only = _load_target(args.target)
    scheme = load_landmark_scheme(args.scheme)
    if args.weights:
        with open(args.weights, "r", encoding="utf-8") as fh:
            weights = LossWeights.from_dict(json.load(fh))
    else:
        weights = LossWeights()
    cfg = FitConfig(regularization=args.lam, rounds=args.rounds)
    lam = cfg.effective_lambda(pm.grid.config.box.diagonal)
    history: list = []
    if args.no_pose:
        field, report = fit_deformation(pm, target, scheme, weights, cfg)
        pose = None
    else:
        pose, field, report = fit_pose_and_deformation(pm, target, scheme,
                                                       weights, cfg,
                                                       history=history)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_deformation_field(field, out / "delta.json")
    if pose is not None:
        save_pose(pose, out / "pose.json")
    fitted = pm.deform(field)
    if pose is not None:
        fitted = apply_pose(fitted, pose)
    digest = mesh_digest(fitted.vertices, fitted.faces)
    if landmarks_only:
        rows = fitted.vertices[scheme.slot_indices()]
        rmse = float(np.sqrt(np.mean(np.sum((rows - target) ** 2, axis=1))))
    else:
        rmse = float(np.sqrt(np.mean(np.sum(
            (fitted.vertices - target.vertices) ** 2, axis=1))))
    report_data = {
        "weights": weights.to_dict(),
        "lambda": lam,
        "regularization_active": lam > 0,
        **report.to_dict(),
        "iterations": max(len(history), 1),
        "residuals": {
            "rmse": rmse,
            "objective": history[-1] if history else report.total,
        },
        "landmarks_only": landmarks_only,
        "surface": "unconstrained" if landmarks_only else "constrained",
        "mesh_sha256": digest,
        "outputs": {
            "delta": str(out / "delta.json"),
            "pose": str(out / "pose.json") if pose is not None else None,
        },
    }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report_data, fh, indent=1)
        fh.write("\n")
    print(f"total loss: {report.total:.6e}")
    if landmarks_only:
        print("surface away from landmarks is unconstrained; consider a "
              "larger --lambda")
    print(f"fitted mesh sha256: {digest}")
    print(f"wrote {out / 'delta.json'}"
          + (f", {out / 'pose.json'}" if pose is not None else "")
          + f", {out / 'report.json'}")
    return 0


def _add_eval(sub) -> None:
    p = sub.add_parser("eval", help="NME table from a JSON-lines record file")
    p.add_argument("records", help="JSON-lines file of evaluation records")
    p.add_argument("--balance", type=int, metavar="PER_BIN",
                   help="draw this many records per yaw bin before tabulating")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for --balance sampling")
    p.add_argument("--json-out", help="also write the table as JSON")
    p.set_defaults(func=cmd_eval)


def cmd_eval(args) -> int:
    records = read_records_jsonl(args.records)
    if args.balance is not None:
        records = balanced_sample(records, args.balance, args.seed)
        print(f"balanced sample: {len(records)} records "
              f"({args.balance} per bin, seed {args.seed})")
    table = bin_and_tabulate(records)
    print(render_nme_table(table))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(table.to_dict(), fh, indent=1)
            fh.write("\n")
        print(f"wrote {args.json_out}")
    return 0


def _add_export_bundle(sub) -> None:
    p = sub.add_parser("export-bundle",
                       help="write the editor bundle JSON")
    p.add_argument("param", help="param.npz from 'embed'")
    p.add_argument("--delta", help="deformation field JSON (default zero)")
    p.add_argument("--pose", help="pose JSON")
    p.add_argument("--out", required=True, help="bundle path")
    p.set_defaults(func=cmd_export_bundle)


def cmd_export_bundle(args) -> int:
    pm = load_parameterization(args.param)
    field = load_deformation_field(args.delta) if args.delta else None
    pose = load_pose(args.pose) if args.pose else None
    save_bundle(pm, args.out, field, pose)
    nnz = np.diff(pm.coeffs.indptr)
    print(f"rows: {pm.n_vertices}, max nonzeros per row: {int(nnz.max())}")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffdmesh",
        description="Free-form deformation of triangle meshes: lattice "
                    "embedding, deformation fitting, and landmark evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_embed(sub)
    _add_deform(sub)
    _add_fit(sub)
    _add_eval(sub)
    _add_export_bundle(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FFDError, ValueError, KeyError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
