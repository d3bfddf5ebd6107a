"""Landmark accuracy evaluation: NME, yaw binning, and basis comparison.

NME is the mean 2D (x, y) landmark error divided by sqrt(w * h) of the
ground-truth face box. Records are grouped by absolute yaw into
[0, 30), [30, 60), [60, 90] degree bins (boundary ties go up), and the
table mean is the unweighted mean of the bin means.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fitting import FitConfig, LossWeights, fit_deformation
from .lattice import ParameterizedMesh
from .mesh import Mesh, LandmarkScheme, N_LANDMARKS, sample_landmarks
from .validation import as_points

BIN_EDGES = (0.0, 30.0, 60.0, 90.0)
BIN_LABELS = ("0 to 30", "30 to 60", "60 to 90")

# Reported reference means for the two basis families (not reproduced here;
# they require the original evaluation data).
REFERENCE_REPORTED = {"bernstein": 3.86, "bspline": 3.51}


@dataclass(frozen=True, eq=False)
class EvalRecord:
    """One evaluation item: predicted/ground-truth landmarks, box, yaw."""

    pred: np.ndarray
    gt: np.ndarray
    box_w: float
    box_h: float
    yaw_deg: float

    def __post_init__(self):
        p = as_points(self.pred, "pred")
        g = as_points(self.gt, "gt")
        if p.shape[0] != N_LANDMARKS or g.shape[0] != N_LANDMARKS:
            raise ValueError(f"records need {N_LANDMARKS} landmarks per side")
        if not (self.box_w > 0 and self.box_h > 0):
            raise ValueError("bounding box must have positive width and height")
        p.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "pred", p)
        object.__setattr__(self, "gt", g)
        object.__setattr__(self, "box_w", float(self.box_w))
        object.__setattr__(self, "box_h", float(self.box_h))
        object.__setattr__(self, "yaw_deg", float(self.yaw_deg))

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        box = data["box"]
        return cls(np.asarray(data["pred"], dtype=np.float64),
                   np.asarray(data["gt"], dtype=np.float64),
                   float(box[0]), float(box[1]), float(data["yaw"]))

    def to_dict(self) -> dict:
        return {"pred": self.pred.tolist(), "gt": self.gt.tolist(),
                "box": [self.box_w, self.box_h], "yaw": self.yaw_deg}


@dataclass(frozen=True)
class NmeTable:
    """Per-bin NME percentages, their counts, and the mean of the bins."""

    bins: tuple[float, float, float]
    counts: tuple[int, int, int]
    mean: float

    def to_dict(self) -> dict:
        return {
            "bins": {label: (None if math.isnan(v) else v)
                     for label, v in zip(BIN_LABELS, self.bins)},
            "counts": dict(zip(BIN_LABELS, self.counts)),
            "mean": self.mean,
        }


def nme(record: EvalRecord) -> float:
    """Mean 2D landmark distance over sqrt(box area); a fraction, not %."""
    d = record.pred[:, :2] - record.gt[:, :2]
    mean_dist = float(np.mean(np.hypot(d[:, 0], d[:, 1])))
    return mean_dist / math.sqrt(record.box_w * record.box_h)


def bin_index(yaw_deg: float) -> int:
    """Bin by |yaw|: [0,30) -> 0, [30,60) -> 1, [60,90] -> 2."""
    a = abs(yaw_deg)
    if a > 90.0:
        raise ValueError(f"|yaw| {a} exceeds 90 degrees")
    if a < 30.0:
        return 0
    if a < 60.0:
        return 1
    return 2


def bin_and_tabulate(records: list[EvalRecord]) -> NmeTable:
    """Assign records to yaw bins and average NME per bin (in percent)."""
    if not records:
        raise ValueError("no records to tabulate")
    out_of_range = [i for i, r in enumerate(records) if abs(r.yaw_deg) > 90.0]
    if out_of_range:
        raise ValueError(
            f"records with |yaw| > 90 degrees at indices {out_of_range}"
        )
    sums = [0.0, 0.0, 0.0]
    counts = [0, 0, 0]
    for r in records:
        b = bin_index(r.yaw_deg)
        sums[b] += nme(r) * 100.0
        counts[b] += 1
    values = [sums[b] / counts[b] if counts[b] else math.nan for b in range(3)]
    empty = [BIN_LABELS[b] for b in range(3) if counts[b] == 0]
    if empty:
        warnings.warn(
            f"empty yaw bins {empty}; mean computed over populated bins only"
        )
    populated = [v for v in values if not math.isnan(v)]
    mean = sum(populated) / len(populated)
    return NmeTable(tuple(values), tuple(counts), mean)


def balanced_sample(records: list[EvalRecord], per_bin: int, seed: int
                    ) -> list[EvalRecord]:
    """Draw exactly per_bin records from each yaw bin, deterministically."""
    by_bin: list[list[int]] = [[], [], []]
    for i, r in enumerate(records):
        by_bin[bin_index(r.yaw_deg)].append(i)
    for b, members in enumerate(by_bin):
        if len(members) < per_bin:
            raise ValueError(
                f"bin '{BIN_LABELS[b]}' has {len(members)} records, "
                f"need {per_bin}"
            )
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for members in by_bin:
        pick = rng.choice(len(members), size=per_bin, replace=False)
        chosen.extend(members[i] for i in np.sort(pick))
    return [records[i] for i in chosen]


def render_nme_table(table: NmeTable) -> str:
    """Aligned 4-column text table: the three yaw bins plus their mean."""
    headers = list(BIN_LABELS) + ["Mean"]
    values = ["-" if math.isnan(v) else f"{v:.2f}" for v in table.bins]
    values.append(f"{table.mean:.2f}")
    counts = [str(c) for c in table.counts] + [""]
    width = max(len(h) for h in headers) + 2
    rows = [
        "NME (%)".ljust(10) + "".join(h.rjust(width) for h in headers),
        "".ljust(10) + "".join(v.rjust(width) for v in values),
        "count".ljust(10) + "".join(c.rjust(width) for c in counts),
    ]
    return "\n".join(rows)


def read_records_jsonl(path) -> list[EvalRecord]:
    """One EvalRecord per line; malformed lines reported with line numbers."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                records.append(EvalRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"line {lineno}: bad record ({exc})") from exc
    if not records:
        raise ValueError(f"{path}: no records found")
    return records


def write_records_jsonl(records: list[EvalRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict()))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Bernstein vs B-spline comparison harness


@dataclass(frozen=True, eq=False)
class KindComparison:
    """Side-by-side fit metrics for the two basis families.

    entries[target_index][family] holds nme_percent / surface_rmse /
    total_loss; fitted[(family, target_index)] keeps the fitted meshes so
    the reported numbers can be re-derived independently.
    """

    entries: list[dict]
    aggregates: dict
    fitted: dict

    def to_dict(self) -> dict:
        return {
            "entries": self.entries,
            "aggregates": self.aggregates,
            "reference_reported": dict(REFERENCE_REPORTED),
        }

    def to_text(self) -> str:
        lines = ["target  family     nme%      surface_rmse    total_loss"]
        for i, entry in enumerate(self.entries):
            for family in ("bernstein", "bspline"):
                e = entry[family]
                lines.append(
                    f"{i:>6}  {family:<9} {e['nme_percent']:<9.4g}"
                    f" {e['surface_rmse']:<15.6g} {e['total_loss']:.6g}"
                )
        lines.append(
            "aggregate nme%: bernstein {bernstein:.4g}, bspline {bspline:.4g}"
            .format(**{k: v["nme_percent"] for k, v in self.aggregates.items()})
        )
        lines.append(
            "reference values (reported elsewhere, not reproduced here): "
            f"Bernstein {REFERENCE_REPORTED['bernstein']:.2f}, "
            f"B-spline {REFERENCE_REPORTED['bspline']:.2f}"
        )
        return "\n".join(lines)


def _surface_rmse(a: Mesh, b: Mesh) -> float:
    d = a.vertices - b.vertices
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


def compare_kinds(pm_bspline: ParameterizedMesh,
                  pm_bernstein: ParameterizedMesh,
                  targets: list[Mesh], scheme: LandmarkScheme,
                  weights: LossWeights | None = None,
                  cfg: FitConfig | None = None) -> KindComparison:
    """Fit every target with both parameterizations and report both errors.

    No winner is asserted; which family fits better is an empirical
    question, not a property of the implementation.
    """
    if pm_bspline.mesh.n_vertices != pm_bernstein.mesh.n_vertices:
        raise ValueError("parameterizations must share the reference mesh")
    if pm_bspline.grid.config.dims != pm_bernstein.grid.config.dims:
        raise ValueError("parameterizations must share lattice dims")
    weights = weights or LossWeights()
    cfg = cfg or FitConfig()
    pms = {"bspline": pm_bspline, "bernstein": pm_bernstein}
    entries: list[dict] = []
    fitted: dict = {}
    for idx, target in enumerate(targets):
        entry: dict = {}
        gt_lm = sample_landmarks(target, scheme)
        lo, hi = target.vertices.min(axis=0), target.vertices.max(axis=0)
        box_w, box_h = float(hi[0] - lo[0]), float(hi[1] - lo[1])
        for family, pm in pms.items():
            field_, report = fit_deformation(pm, target, scheme, weights, cfg)
            mesh = pm.deform(field_)
            fitted[(family, idx)] = mesh
            record = EvalRecord(sample_landmarks(mesh, scheme), gt_lm,
                                box_w, box_h, 0.0)
            entry[family] = {
                "nme_percent": nme(record) * 100.0,
                "surface_rmse": _surface_rmse(mesh, target),
                "total_loss": report.total,
            }
        entries.append(entry)
    aggregates = {
        family: {
            key: float(np.mean([e[family][key] for e in entries]))
            for key in ("nme_percent", "surface_rmse", "total_loss")
        }
        for family in pms
    }
    return KindComparison(entries, aggregates, fitted)
