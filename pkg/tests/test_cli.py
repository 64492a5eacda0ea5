import csv
import json

import numpy as np
import pytest

from wlsubset.cli import main
from wlsubset.decompose import kaiser_select, pca, standardize
from wlsubset.demo import load_demo_matrix, make_demo_matrix
from wlsubset.errors import ConfigError
from wlsubset.hcluster import pairwise_distances, single_linkage
from wlsubset.metrics import EventSample, write_events_csv
from wlsubset.pipeline import PipelineConfig, run_pipeline
from wlsubset.report import dendrogram_dot, emit_scatter

from util import make_matrix

FULL_ARTIFACTS = {
    "matrix.csv", "pca.json", "loadings.csv", "scatter_pc1_pc2.csv", "scatter_pc3_pc4.csv",
    "dendrogram.json", "dendrogram.dot", "kmeans.json", "subset.json",
    "kiviat_nearest-center.csv", "kiviat_farthest-center.csv", "manifest.json",
}


@pytest.fixture
def demo_csv(tmp_path):
    path = tmp_path / "demo.csv"
    assert main(["demo", "--out", str(path)]) == 0
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_every_artifact(demo_csv, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--matrix", str(demo_csv), "--out-dir", str(out), "--restarts", "3"]) == 0
    assert {p.name for p in out.iterdir()} == FULL_ARTIFACTS
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["stages_completed"] == ["ingest", "pca", "hcluster", "kmeans", "subset"]
    assert "out_dir" not in manifest["config"]
    assert set(manifest["artifacts"]) == FULL_ARTIFACTS - {"manifest.json"}
    kmeans = json.loads((out / "kmeans.json").read_text())
    assert kmeans["best_k"] == 3 and kmeans["bic_form"] == "corrected"
    assert sum(c["count"] for c in kmeans["clusters"]) == 24
    subset = json.loads((out / "subset.json").read_text())
    assert [s["strategy"] for s in subset["strategies"]] == ["nearest-center", "farthest-center"]
    assert "best K = 3" in capsys.readouterr().out


def test_manifest_rerun_is_byte_identical(demo_csv, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--matrix", str(demo_csv), "--out-dir", str(a), "--seed", "7"]) == 0
    assert main(["run", "--manifest", str(a / "manifest.json"), "--out-dir", str(b)]) == 0
    for p in a.iterdir():
        assert (b / p.name).read_bytes() == p.read_bytes(), p.name


def test_missing_input_is_data_error_in_ingest(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--matrix", str(tmp_path / "nope.csv"), "--out-dir", str(out)]) == 2
    assert "error in stage ingest" in capsys.readouterr().err
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed" and manifest["failed_stage"] == "ingest"


def test_usage_errors_exit_one(demo_csv, tmp_path):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["run", "--matrix", "a", "--events", "b"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["pca", "--scatter", "0,1"])
    assert err.value.code == 1
    assert main(["run", "--out-dir", str(tmp_path / "o")]) == 1
    assert main(["kmeans", "--matrix", str(demo_csv), "--k-max", "30",
                 "--out-dir", str(tmp_path / "k")]) == 1


def test_scatter_beyond_retained_is_config_error(demo_csv, tmp_path, capsys):
    assert main(["pca", "--matrix", str(demo_csv), "--scatter", "1,9",
                 "--out-dir", str(tmp_path / "o")]) == 1
    assert "PC9" in capsys.readouterr().err


def test_numerical_failure_exits_three(demo_csv, tmp_path, capsys):
    assert main(["pca", "--matrix", str(demo_csv), "--kaiser-threshold", "1000",
                 "--out-dir", str(tmp_path / "o")]) == 3
    assert "error in stage pca" in capsys.readouterr().err


def test_stage_subcommands_stop_early(demo_csv, tmp_path):
    out = tmp_path / "o"
    assert main(["hcluster", "--matrix", str(demo_csv), "--out-dir", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert "dendrogram.dot" in names and "kmeans.json" not in names


def test_events_ingest_with_derived_metrics(tmp_path):
    events = tmp_path / "events.csv"
    write_events_csv([
        EventSample("sort", "n1", "L2_RQSTS.MISS", 2000), EventSample("sort", "n1", "INST_RETIRED.ANY", 1e6),
        EventSample("sort", "n2", "L2_RQSTS.MISS", 4000), EventSample("sort", "n2", "INST_RETIRED.ANY", 1e6),
        EventSample("grep", "n1", "L2_RQSTS.MISS", 500), EventSample("grep", "n1", "INST_RETIRED.ANY", 1e6),
    ], events)
    catalog = tmp_path / "cat.csv"
    catalog.write_text('L2_MISS,cache,per-kilo-instruction,"1000 * L2_RQSTS.MISS / INST_RETIRED.ANY"\n')
    out = tmp_path / "o"
    assert main(["ingest", "--events", str(events), "--catalog", str(catalog), "--out-dir", str(out)]) == 0
    rows = _read_csv(out / "matrix.csv")
    assert rows == [["workload", "L2_MISS"], ["sort", "3.0"], ["grep", "0.5"]]


def test_constant_column_reported_as_dropped(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.normal(size=(12, 4))
    vals[:, 2] = 7.0
    path = tmp_path / "m.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["workload", "a", "b", "flat", "c"])
        for i, row in enumerate(vals):
            w.writerow([f"w{i}", *row])
    result = run_pipeline(PipelineConfig(matrix=str(path), out_dir=str(tmp_path / "o")), "pca")
    assert json.loads((tmp_path / "o" / "pca.json").read_text())["dropped_columns"] == ["flat"]
    assert result.model.loadings.shape[0] == 3


def test_emit_scatter_shape_and_bounds():
    m, _ = make_demo_matrix()
    model = kaiser_select(pca(standardize(m)))
    header, rows = emit_scatter(model, (0, 1), m.workloads)
    assert header == ["workload", "stack", "PC1", "PC2"]
    assert len(rows) == 24 and all(len(r) == 4 for r in rows)
    assert rows[0][2] == repr(float(model.scores[0, 0]))
    with pytest.raises(ConfigError):
        emit_scatter(model, (0, model.retained), m.workloads)


def test_dendrogram_dot():
    m = make_matrix([[0.0], [1.0], [3.0]], stacks=["batch", "", "compute"])
    d = single_linkage(pairwise_distances(m.values), m.workload_ids)
    dot = dendrogram_dot(d, m.workloads)
    assert dot.startswith("digraph dendrogram {")
    assert 'n0 [label="w0\\n(batch)"];' in dot
    assert 'n1 [label="w1"];' in dot
    assert 'n4 -> n2 [label="2.00"];' in dot
    assert dot.count("n4 -> ") == 2
    assert dot.endswith("}\n")


def test_bundled_demo_matches_generator():
    a, la = load_demo_matrix()
    b, lb = make_demo_matrix()
    assert np.array_equal(a.values, b.values)
    assert a.workload_ids == b.workload_ids
    assert np.array_equal(la, lb)


def test_config_round_trips_through_manifest():
    cfg = PipelineConfig(matrix="m.csv", scatter=[(1, 3)], seed=4, bic_form="literal", out_dir="x")
    back = PipelineConfig.from_manifest(json.loads(json.dumps(cfg.to_manifest())), "y")
    assert back.scatter == [(1, 3)] and back.seed == 4 and back.out_dir == "y"
    assert back.to_manifest() == cfg.to_manifest()
