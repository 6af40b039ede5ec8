import json
import subprocess
import sys

import numpy as np
import pytest

from ultraskel.cli import main
from ultraskel.reporting import canonical_json, dendrogram_merges, newick


@pytest.fixture
def metric_json(tmp_path):
    rng = np.random.default_rng(12)
    pts = rng.random((8, 2)).tolist()
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"points": pts, "metric": "l2"}))
    return str(path)


def test_canonical_json_is_deterministic():
    obj = {"b": 1.5, "a": [1, 2.0, True, None], "c": {"y": 0.1, "x": "s"}}
    t1 = canonical_json(obj)
    t2 = canonical_json({"c": {"x": "s", "y": 0.1}, "a": [1, 2.0, True, None], "b": 1.5})
    assert t1 == t2
    assert t1.endswith("\n")
    assert json.loads(t1) == {"b": 1.5, "a": [1, 2.0, True, None], "c": {"y": 0.1, "x": "s"}}


def test_canonical_json_17g_floats():
    x = 0.1 + 0.2
    s = canonical_json({"v": x})
    assert json.loads(s)["v"] == x


def test_newick_and_merges():
    rho = np.array([[0, 1, 2], [1, 0, 2], [2, 2, 0]], dtype=float)
    merges = dendrogram_merges(["a", "b", "c"], rho)
    assert merges == [["a", "b", 1.0], ["a", "c", 2.0]]
    nwk = newick(["a", "b", "c"], rho)
    assert nwk.endswith(";") and "a" in nwk and "(" in nwk


def test_cmd_skeleton_roundtrip(tmp_path, metric_json):
    out = tmp_path / "r.json"
    code = main(
        [
            "skeleton",
            "--input",
            metric_json,
            "--delta",
            "0.3",
            "--out",
            str(out),
            "--dendrogram",
            str(tmp_path / "d.nwk"),
            "--dot",
            str(tmp_path / "t.dot"),
        ]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["certificate"]["ok"] is True
    assert (tmp_path / "d.nwk").read_text().strip().endswith(";")
    assert (tmp_path / "t.dot").read_text().startswith("digraph")

    # byte-identical on repeat
    out2 = tmp_path / "r2.json"
    code = main(["skeleton", "--input", metric_json, "--delta", "0.3", "--out", str(out2)])
    assert code == 0
    assert out.read_text() == out2.read_text()


def test_cmd_skeleton_bad_epsilon(metric_json):
    assert main(["skeleton", "--input", metric_json, "--epsilon", "1.5"]) == 1


def test_cmd_skeleton_missing_file(tmp_path):
    assert main(["skeleton", "--input", str(tmp_path / "nope.json"), "--delta", "0.3"]) == 3


def test_cmd_ramsey_derandomized(tmp_path, metric_json):
    out = tmp_path / "rr.json"
    code = main(
        ["ramsey", "--input", metric_json, "--epsilon", "0.5", "--derandomize", "--out", str(out)]
    )
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["achieved"] >= rep["required"]
    assert rep["ok"] is True
    # determinism: identical bytes across runs
    out2 = tmp_path / "rr2.json"
    main(["ramsey", "--input", metric_json, "--epsilon", "0.5", "--derandomize", "--out", str(out2)])
    assert out.read_text() == out2.read_text()


def test_cmd_ramsey_sampled_needs_seed(metric_json):
    assert main(["ramsey", "--input", metric_json, "--epsilon", "0.5"]) == 1
    assert main(["ramsey", "--input", metric_json, "--epsilon", "0.5", "--seed", "3"]) in (0, 2)


def test_cmd_verify_roundtrip(tmp_path, metric_json):
    out = tmp_path / "r.json"
    main(["ramsey", "--input", metric_json, "--epsilon", "0.5", "--derandomize", "--out", str(out)])
    code = main(
        [
            "verify",
            "--input",
            metric_json,
            "--report",
            str(out),
            "--check",
            "distortion,expectation,subdominant",
        ]
    )
    assert code == 0


def test_cmd_verify_skeleton_report(tmp_path, metric_json):
    out = tmp_path / "sk.json"
    main(["skeleton", "--input", metric_json, "--delta", "0.3", "--out", str(out)])
    code = main(
        ["verify", "--input", metric_json, "--report", str(out), "--check", "distortion,cutset"]
    )
    assert code == 0


def test_cmd_verify_exact(tmp_path, metric_json):
    out = tmp_path / "r.json"
    main(["ramsey", "--input", metric_json, "--epsilon", "0.5", "--derandomize", "--out", str(out)])
    code = main(
        ["verify", "--input", metric_json, "--report", str(out), "--check", "distortion", "--exact"]
    )
    assert code == 0


def test_cmd_gen_gnhalf(tmp_path):
    out = tmp_path / "g.json"
    code = main(["gen", "--family", "gnhalf", "--n", "16", "--seed", "42", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    vals = {v for row in data["distances"] for v in row}
    assert vals <= {0.0, 1.0, 2.0}
    sidecar = json.loads((tmp_path / "g.json.spec.json").read_text())
    assert sidecar["family"] == "gnhalf" and sidecar["seed"] == 42


def test_cmd_gen_expander(tmp_path):
    out = tmp_path / "e.json"
    code = main(
        ["gen", "--family", "expander", "--n", "32", "--alpha", "1.0", "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["distances"]) == 32


def test_cmd_skeleton_raw_mode(tmp_path, metric_json):
    out = tmp_path / "raw.json"
    code = main(
        [
            "skeleton", "--input", metric_json, "--raw-D", "2.4",
            "--raw-k", "2", "--raw-tau", "0.03", "--out", str(out),
        ]
    )
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["mode"] == "raw" and rep["params"]["D"] == 2.4


def test_cmd_skeleton_raw_requires_tau(metric_json):
    assert main(["skeleton", "--input", metric_json, "--raw-D", "2.4"]) == 1


def test_cmd_skeleton_simple_and_exact(tmp_path, metric_json):
    out = tmp_path / "s.json"
    code = main(
        ["skeleton", "--input", metric_json, "--delta", "0.3", "--simple", "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text())["simple"] is True
    code = main(
        ["skeleton", "--input", metric_json, "--delta", "0.3", "--exact", "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text())["certificate"]["exact_distortion_ok"] is True


def test_cmd_gen_product(tmp_path):
    out = tmp_path / "p.json"
    code = main(
        ["gen", "--family", "product", "--n", "16", "--alpha", "1.0",
         "--levels", "2", "--seed", "4", "--out", str(out)]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["distances"]) == 256


def test_console_entry_point(metric_json):
    proc = subprocess.run(
        [sys.executable, "-m", "ultraskel.cli", "ramsey", "--input", metric_json,
         "--epsilon", "0.5", "--derandomize"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
