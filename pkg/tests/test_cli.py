import json
import os

import pytest

from influlocal.cli import RunConfig, build_config, main, read_config_file

SMALL = """\
# small pipeline
vertices = 300
k = 6
actions = 6
edge_prob = 0.4
tie_threshold = 2
min_active = 2
n = 10
walks_per_vertex = 3
walk_length = 15
max_epochs = 2
hidden = 16
heads = 4
pscn_width = 4
linear_epochs = 5
"""

PIPELINE = [["synth"], ["embed"], ["features"], ["prepare"], ["train"], ["eval"],
            ["train", "--variant", "gcn"], ["eval", "--variant", "gcn"], ["baseline"],
            ["baseline", "--baseline", "svm"], ["baseline", "--baseline", "pscn"],
            ["attend", "--attend_instances", "0,1"],
            ["sweep", "--axis", "heads", "--values", "1,2"]]


def run_pipeline(root, workdir):
    cfg = root / "small.cfg"
    cfg.write_text(SMALL)
    for cmd in PIPELINE:
        assert main(cmd + ["--config", str(cfg), "--workdir", str(workdir)]) == 0, cmd


def artifacts(workdir):
    out = {}
    for dirpath, _, files in os.walk(workdir):
        for f in files:
            path = os.path.join(dirpath, f)
            out[os.path.relpath(path, workdir)] = open(path, "rb").read()
    return out


def strip_volatile(raw):
    doc = json.loads(raw)
    doc.pop("wall_seconds", None)
    doc.pop("outputs", None)
    doc["config"].pop("workdir", None)
    return doc


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    run_pipeline(root, root / "a")
    run_pipeline(root, root / "b")
    return artifacts(root / "a"), artifacts(root / "b")


def test_pipeline_writes_expected_artifacts(two_runs):
    a, _ = two_runs
    for name in ["graph.txt", "actions.txt", "embeddings.txt", "features.txt", "train.jsonl",
                 "model_gat.json", "report_gat_test.json", "report_gcn_test.json",
                 "report_lr_test.json", "report_svm_test.json", "report_pscn_test.json",
                 "attention/test_0.json", "attention/test_1.dot", "sweep_heads.txt",
                 "manifest_train.json"]:
        assert name in a, name
    report = json.loads(a["report_gat_test.json"])
    assert 0.0 <= report["metrics"]["auc"] <= 1.0
    manifest = json.loads(a["manifest_synth.json"])
    assert {"config", "seed", "versions", "outputs"} <= set(manifest)


def test_rerun_is_byte_identical(two_runs):
    a, b = two_runs
    assert set(a) == set(b)
    for name in a:
        if os.path.basename(name).startswith("manifest_"):
            assert strip_volatile(a[name]) == strip_volatile(b[name]), name
        else:
            assert a[name] == b[name], name


def test_heads_sweep_keeps_width(two_runs):
    a, _ = two_runs
    for heads in (1, 2):
        cfg = json.loads(a[os.path.join("sweep_heads", str(heads), "model_gat.json")])["config"]
        assert cfg["heads"] == heads and cfg["head_dim"] * heads == 16
    table = a["sweep_heads.txt"].decode().splitlines()
    assert len(table) == 3 and all(line.rstrip().endswith("ok") for line in table[1:])


def test_attention_export_rows(two_runs):
    a, _ = two_runs
    doc = json.loads(a["attention/test_0.json"])
    assert len(doc["heads"]) == 3 * 4
    for rec in doc["heads"]:
        rows = {}
        for i, j, w in rec["edges"]:
            rows[i] = rows.get(i, 0.0) + w
        assert all(abs(v - 1) < 1e-5 for v in rows.values())
    assert a["attention/test_0.dot"].decode().startswith("graph instance {")


def test_missing_prerequisite_exit_code(tmp_path, capsys):
    assert main(["train", "--workdir", str(tmp_path / "nothing")]) == 3
    assert "first" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["bogus"]) == 2
    assert main(["synth", "--not_a_key", "1", "--workdir", str(tmp_path)]) == 2
    assert main(["synth", "--vertices", "many", "--workdir", str(tmp_path)]) == 2


def test_config_precedence(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("vertices = 77  # comment\nheads = 2\n")
    cfg = build_config(read_config_file(str(path)), {"heads": "4"})
    assert isinstance(cfg, RunConfig)
    assert cfg.vertices == 77 and cfg.heads == 4 and cfg.k == RunConfig().k
    assert cfg.sub_seed("a") != cfg.sub_seed("b")
    assert cfg.sub_seed("a") == build_config({}, {}).sub_seed("a")
