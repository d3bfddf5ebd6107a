import json

import numpy as np
import pytest

from ffdmesh import load_mesh, save_mesh, save_landmark_scheme
from ffdmesh.cli import main, mesh_digest
from ffdmesh.data import sample_face_mesh


@pytest.fixture(scope="module")
def assets(tmp_path_factory):
    """A small face mesh + scheme written as CLI inputs, plus an embedding."""
    root = tmp_path_factory.mktemp("cli")
    face = sample_face_mesh(900)
    save_mesh(face.mesh, root / "face.obj")
    save_landmark_scheme(face.landmark_scheme(), root / "scheme.json")
    rc = main(["embed", str(root / "face.obj"), "--dims", "4,6,4",
               "--out", str(root / "embed")])
    assert rc == 0
    return root


def read_json(path):
    return json.loads(path.read_text())


class TestEmbed:
    def test_outputs_and_residual_printed(self, assets, capsys, tmp_path):
        rc = main(["embed", str(assets / "face.obj"), "--dims", "4,6,4",
                   "--out", str(tmp_path / "e")])
        out = capsys.readouterr().out
        assert rc == 0
        assert "residual" in out
        assert (tmp_path / "e" / "lattice.json").exists()
        assert (tmp_path / "e" / "param.npz").exists()

    def test_default_dims_used_when_omitted(self, assets, tmp_path):
        rc = main(["embed", str(assets / "face.obj"),
                   "--out", str(tmp_path / "d")])
        assert rc == 0
        lattice = read_json(tmp_path / "d" / "lattice.json")
        assert lattice["dims"] == [6, 19, 4]
        assert len(lattice["points"]) == 700

    def test_dims_below_degree_fails(self, assets, capsys, tmp_path):
        rc = main(["embed", str(assets / "face.obj"), "--dims", "1,1,1",
                   "--out", str(tmp_path / "x")])
        assert rc == 1
        assert "degree" in capsys.readouterr().err

    def test_missing_mesh_fails(self, tmp_path, capsys):
        rc = main(["embed", str(tmp_path / "nope.obj"),
                   "--out", str(tmp_path / "x")])
        assert rc == 1


class TestDeform:
    def test_zero_delta_reproduces_reference(self, assets, tmp_path):
        param = assets / "embed" / "param.npz"
        lattice = read_json(assets / "embed" / "lattice.json")
        zeros = [[0.0, 0.0, 0.0] for _ in lattice["points"]]
        delta_path = tmp_path / "zero.json"
        delta_path.write_text(json.dumps({"delta": zeros}))
        out_path = tmp_path / "out.obj"
        rc = main(["deform", str(param), str(delta_path),
                   "--out", str(out_path)])
        assert rc == 0
        ref = load_mesh(assets / "face.obj")
        out = load_mesh(out_path)
        assert np.abs(out.vertices - ref.vertices).max() <= 1e-8

    def test_constant_delta_translates(self, assets, tmp_path):
        param = assets / "embed" / "param.npz"
        lattice = read_json(assets / "embed" / "lattice.json")
        c = [1.5, -2.0, 0.25]
        delta_path = tmp_path / "const.json"
        delta_path.write_text(json.dumps(
            {"delta": [c for _ in lattice["points"]]}))
        out_path = tmp_path / "out.obj"
        rc = main(["deform", str(param), str(delta_path),
                   "--out", str(out_path)])
        assert rc == 0
        ref = load_mesh(assets / "face.obj")
        out = load_mesh(out_path)
        np.testing.assert_allclose(out.vertices, ref.vertices + np.array(c),
                                   atol=1e-8)

    def test_dimension_mismatch_fails(self, assets, tmp_path, capsys):
        delta_path = tmp_path / "bad.json"
        delta_path.write_text(json.dumps({"delta": [[0, 0, 0]]}))
        rc = main(["deform", str(assets / "embed" / "param.npz"),
                   str(delta_path), "--out", str(tmp_path / "o.obj")])
        assert rc == 1
        assert "control points" in capsys.readouterr().err


class TestFit:
    def test_reference_target_near_zero_delta(self, assets, tmp_path, capsys):
        rc = main(["fit", str(assets / "embed" / "param.npz"),
                   str(assets / "face.obj"),
                   "--scheme", str(assets / "scheme.json"),
                   "--lambda", "1e-8",
                   "--out", str(tmp_path / "fit")])
        assert rc == 0
        delta = read_json(tmp_path / "fit" / "delta.json")["delta"]
        assert np.abs(np.asarray(delta)).max() <= 1e-4
        report = read_json(tmp_path / "fit" / "report.json")
        assert report["lambda"] == 1e-8
        assert report["surface"] == "constrained"

    def test_fit_then_deform_hash_matches(self, assets, tmp_path, capsys):
        fit_dir = tmp_path / "fit"
        rc = main(["fit", str(assets / "embed" / "param.npz"),
                   str(assets / "face.obj"),
                   "--scheme", str(assets / "scheme.json"),
                   "--out", str(fit_dir)])
        assert rc == 0
        capsys.readouterr()
        report = read_json(fit_dir / "report.json")
        out_path = tmp_path / "refit.obj"
        rc = main(["deform", str(assets / "embed" / "param.npz"),
                   str(fit_dir / "delta.json"),
                   "--pose", str(fit_dir / "pose.json"),
                   "--out", str(out_path)])
        assert rc == 0
        printed = capsys.readouterr().out
        assert report["mesh_sha256"] in printed
        reloaded = load_mesh(out_path)
        assert mesh_digest(reloaded.vertices, reloaded.faces) == \
            report["mesh_sha256"]

    def test_synthetic_posed_target_recovered(self, assets, tmp_path):
        from ffdmesh import (DeformationField, Pose, load_parameterization,
                             rotation_ypr)
        pm = load_parameterization(assets / "embed" / "param.npz")
        diag = pm.grid.config.box.diagonal
        rng = np.random.default_rng(77)
        dstar = 1e-4 * diag * rng.standard_normal((pm.num_points, 3))
        truth = Pose(1.25, rotation_ypr(18.0, -7.0, 4.0),
                     np.array([3.0, -1.0, 2.0]))
        target = truth.transform(pm.deform(DeformationField(dstar)).vertices)
        target_path = tmp_path / "target.obj"
        save_mesh(pm.mesh.with_vertices(target), target_path)
        fit_dir = tmp_path / "fit"
        rc = main(["fit", str(assets / "embed" / "param.npz"),
                   str(target_path),
                   "--scheme", str(assets / "scheme.json"),
                   "--lambda", "1e-8",
                   "--out", str(fit_dir)])
        assert rc == 0
        report = read_json(fit_dir / "report.json")
        assert report["residuals"]["rmse"] <= 1e-5 * diag
        assert report["iterations"] >= 1

    def test_fit_is_deterministic(self, assets, tmp_path):
        digests = []
        for run in ("a", "b"):
            rc = main(["fit", str(assets / "embed" / "param.npz"),
                       str(assets / "face.obj"),
                       "--scheme", str(assets / "scheme.json"),
                       "--out", str(tmp_path / run)])
            assert rc == 0
            digests.append(read_json(tmp_path / run / "report.json")
                           ["mesh_sha256"])
        assert digests[0] == digests[1]

    def test_custom_weights_echoed(self, assets, tmp_path):
        weights_path = tmp_path / "weights.json"
        weights_path.write_text(json.dumps(
            {"vertex_weight": 0.7,
             "region_weights": {"contour": 0.2}}))
        rc = main(["fit", str(assets / "embed" / "param.npz"),
                   str(assets / "face.obj"),
                   "--scheme", str(assets / "scheme.json"),
                   "--weights", str(weights_path),
                   "--out", str(tmp_path / "fit")])
        assert rc == 0
        report = read_json(tmp_path / "fit" / "report.json")
        assert report["weights"]["vertex_weight"] == 0.7
        assert report["weights"]["region_weights"]["contour"] == 0.2
        assert report["weights"]["region_weights"]["left_eye"] == 0.06

    def test_landmark_target_flagged_unconstrained(self, assets, tmp_path,
                                                   capsys):
        scheme = read_json(assets / "scheme.json")
        mesh = load_mesh(assets / "face.obj")
        slots = [None] * 68
        from ffdmesh.mesh import REGION_SLOTS
        for name, idx in scheme["regions"].items():
            for slot, vert in zip(REGION_SLOTS[name], idx):
                slots[slot] = mesh.vertices[vert].tolist()
        lm_path = tmp_path / "landmarks.json"
        lm_path.write_text(json.dumps({"landmarks": slots}))
        rc = main(["fit", str(assets / "embed" / "param.npz"), str(lm_path),
                   "--scheme", str(assets / "scheme.json"),
                   "--lambda", "1e-4",
                   "--out", str(tmp_path / "fit")])
        assert rc == 0
        assert "unconstrained" in capsys.readouterr().out
        report = read_json(tmp_path / "fit" / "report.json")
        assert report["landmarks_only"] is True
        assert report["surface"] == "unconstrained"


class TestEval:
    def make_records_file(self, path, rows):
        lines = []
        for offset, yaw in rows:
            gt = np.zeros((68, 3))
            gt[:, 0] = np.arange(68)
            pred = gt.copy()
            pred[:, 0] += offset
            lines.append(json.dumps({"pred": pred.tolist(), "gt": gt.tolist(),
                                     "box": [100.0, 100.0], "yaw": yaw}))
        path.write_text("\n".join(lines) + "\n")

    def test_table_output(self, tmp_path, capsys):
        records = tmp_path / "records.jsonl"
        self.make_records_file(records,
                               [(2.0, 0.0), (3.0, 45.0), (4.0, 80.0)])
        json_out = tmp_path / "table.json"
        rc = main(["eval", str(records), "--json-out", str(json_out)])
        assert rc == 0
        out = capsys.readouterr().out
        for label in ("0 to 30", "30 to 60", "60 to 90", "Mean"):
            assert label in out
        assert "2.00" in out and "3.00" in out and "4.00" in out
        data = read_json(json_out)
        assert data["mean"] == pytest.approx(3.0)

    def test_empty_file_fails(self, tmp_path, capsys):
        records = tmp_path / "records.jsonl"
        records.write_text("")
        rc = main(["eval", str(records)])
        assert rc == 1
        assert "no records" in capsys.readouterr().err

    def test_malformed_line_reported(self, tmp_path, capsys):
        records = tmp_path / "records.jsonl"
        self.make_records_file(records, [(1.0, 0.0)])
        records.write_text(records.read_text() + "oops\n")
        rc = main(["eval", str(records)])
        assert rc == 1
        assert "line 2" in capsys.readouterr().err

    def test_balanced_sampling_flag(self, tmp_path, capsys):
        records = tmp_path / "records.jsonl"
        rows = [(1.0, float(y)) for y in range(0, 29, 4)] \
            + [(2.0, float(y)) for y in range(31, 59, 4)] \
            + [(3.0, float(y)) for y in range(61, 89, 4)]
        self.make_records_file(records, rows)
        rc = main(["eval", str(records), "--balance", "3", "--seed", "7"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "9 records" in out
        rc = main(["eval", str(records), "--balance", "3", "--seed", "7"])
        assert rc == 0
        assert capsys.readouterr().out == out

    def test_balance_insufficient_bin_fails(self, tmp_path, capsys):
        records = tmp_path / "records.jsonl"
        self.make_records_file(records, [(1.0, 0.0), (2.0, 40.0)])
        rc = main(["eval", str(records), "--balance", "1"])
        assert rc == 1
        assert "60 to 90" in capsys.readouterr().err


class TestExportBundle:
    def test_bundle_written_and_sparse(self, assets, tmp_path, capsys):
        bundle_path = tmp_path / "bundle.json"
        rc = main(["export-bundle", str(assets / "embed" / "param.npz"),
                   "--out", str(bundle_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "max nonzeros per row" in out
        data = read_json(bundle_path)
        assert data["version"] == 1
        assert max(len(r) for r in data["coeffs"]["indices"]) <= 64
        for row in data["coeffs"]["values"][:50]:
            assert abs(sum(row) - 1.0) <= 1e-9

    def test_bundle_with_delta_and_pose(self, assets, tmp_path):
        lattice = read_json(assets / "embed" / "lattice.json")
        m = len(lattice["points"])
        delta_path = tmp_path / "delta.json"
        delta_path.write_text(json.dumps(
            {"delta": [[0.1, 0.0, 0.0]] * m}))
        pose_path = tmp_path / "pose.json"
        pose_path.write_text(json.dumps(
            {"scale": 1.5, "rotation": np.eye(3).tolist(),
             "translation": [0.0, 0.0, 0.0]}))
        bundle_path = tmp_path / "bundle.json"
        rc = main(["export-bundle", str(assets / "embed" / "param.npz"),
                   "--delta", str(delta_path), "--pose", str(pose_path),
                   "--out", str(bundle_path)])
        assert rc == 0
        data = read_json(bundle_path)
        assert data["delta"][0] == [0.1, 0.0, 0.0]
        assert data["pose"]["scale"] == 1.5
