import copy
import json
import subprocess
import sys

import pytest

from plurilab import __version__
from plurilab.cli import main
from plurilab.io import read_csv, sha256_file

MODEL = {"weight": {"kind": "quadratic"}, "base": {"kind": "lebesgue"}, "n": 1, "k": 6}


def model(**extra):
    return dict(copy.deepcopy(MODEL), **extra)


def write(tmp_path, name, cfg):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def sample_cfg(beta=4.0, sweeps=200):
    return {"schema_version": 1, "seed": 3, "model": model(beta=beta), "execution": {"sweeps": sweeps, "chains": 2}}


def test_sample_writes_manifest_and_hashes(tmp_path):
    out = tmp_path / "run"
    assert main(["sample", "--config", write(tmp_path, "s", sample_cfg()), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["version"] == __version__ and man["seed"] == 3
    assert man["config"]["model"]["beta"] == 4.0
    names = {e["path"] for e in man["files"]}
    assert names == {"samples.csv", "summary.json"}
    for e in man["files"]:
        assert sha256_file(out / e["path"]) == e["sha256"]
    header, rows = read_csv(out / "samples.csv")
    assert header == ["chain", "sweep", "particle", "re_1", "im_1"]


def test_identical_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, "s", sample_cfg())
    main(["sample", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["sample", "--config", cfg, "--out", str(tmp_path / "b")])
    for name in ("samples.csv", "summary.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    main(["sample", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "4"])
    assert (tmp_path / "a" / "samples.csv").read_bytes() != (tmp_path / "c" / "samples.csv").read_bytes()


def test_missing_seed_is_a_config_error(tmp_path):
    cfg = sample_cfg()
    del cfg["seed"]
    assert main(["sample", "--config", write(tmp_path, "s", cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("mutate", [
    lambda c: c.update(schema_version=7),
    lambda c: c["model"]["weight"].update(kind="nonsense"),
    lambda c: c.pop("model"),
])
def test_config_errors(tmp_path, mutate):
    cfg = sample_cfg()
    mutate(cfg)
    assert main(["sample", "--config", write(tmp_path, "s", cfg), "--out", str(tmp_path / "o")]) == 2


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["sample", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert main(["sample", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2


def test_inadmissible_model_exit_3(tmp_path):
    cfg = sample_cfg()
    cfg["model"]["weight"] = {"kind": "fubini-study"}
    out = tmp_path / "o"
    assert main(["sample", "--config", write(tmp_path, "s", cfg), "--out", str(out)]) == 3
    assert not (out / "samples.csv").exists()


def test_solver_failure_exit_4(tmp_path):
    cfg = {"schema_version": 1, "seed": 1, "model": model(), "params": {"betas": [2.0], "grid": [-1.0, 0.5, 200]}}
    assert main(["equilibrium", "--config", write(tmp_path, "e", cfg), "--out", str(tmp_path / "o")]) == 4


def test_report_on_empty_directory(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["report", "--out", str(tmp_path / "empty")]) == 2


def test_report_join_exclusions_and_idempotence(tmp_path):
    root = tmp_path / "runs"
    main(["sample", "--config", write(tmp_path, "s", sample_cfg(beta=4.0, sweeps=400)), "--out", str(root / "sample")])
    eq = {"schema_version": 1, "seed": 1, "model": model(), "params": {"betas": [4.0, 8.0]}}
    main(["equilibrium", "--config", write(tmp_path, "e", eq), "--out", str(root / "eq")])
    (root / "stray").mkdir()
    (root / "stray" / "x.csv").write_text("a\n1\n")
    (root / "sample" / "extra.csv").write_text("a\n1\n")
    assert main(["report", "--out", str(root)]) == 0
    info = json.loads((root / "report" / "report.json").read_text())
    assert info["warnings"] >= 2
    reasons = {e["run"]: e["reasons"] for e in info["exclusions"]}
    assert reasons["stray"] == ["missing manifest"]
    assert any("unhashed" in r for r in reasons["sample"])
    header, rows = read_csv(root / "report" / "long.csv")
    w1 = [r for r in rows if r[4] == "w1_samples_vs_solver"]
    assert len(w1) == 1 and float(w1[0][5]) < 0.2
    betas = {r[3] for r in rows if r[0] == "equilibrium" and r[4] == "envelope_gap"}
    assert betas == {"4.0", "8.0"}
    first = {p.name: p.read_bytes() for p in (root / "report").iterdir()}
    assert main(["report", "--out", str(root)]) == 0
    assert first == {p.name: p.read_bytes() for p in (root / "report").iterdir()}


def test_report_rejects_tampered_files(tmp_path):
    root = tmp_path / "runs"
    main(["curie-weiss", "--config", write(tmp_path, "c", {"schema_version": 1, "seed": 1, "params": {"betas": [2.0]}}),
          "--out", str(root / "cw")])
    with open(root / "cw" / "phase.csv", "a") as fh:
        fh.write("tampered\n")
    main(["report", "--out", str(root)])
    info = json.loads((root / "report" / "report.json").read_text())
    assert info["runs"] == [] and "hash mismatch" in info["exclusions"][0]["reasons"][0]


def test_report_schema_mismatch(tmp_path):
    root = tmp_path / "runs"
    main(["curie-weiss", "--config", write(tmp_path, "c", {"schema_version": 1, "seed": 1, "params": {}}),
          "--out", str(root / "cw")])
    man = json.loads((root / "cw" / "manifest.json").read_text())
    man["schema_version"] = 9
    (root / "cw" / "manifest.json").write_text(json.dumps(man))
    assert main(["report", "--out", str(root)]) == 2


@pytest.mark.parametrize("command,params", [
    ("transport", {"source": [0, 1, 2], "target": [2, 0, 1]}),
    ("tropical", {"mode": "ma", "body": {"n": 1, "vertices": [[-1], [1]]}, "beta": 0.0}),
    ("tropical", {"body": {"n": 1, "vertices": [[-1], [2]]}, "k": 1, "beta": -0.9}),
])
def test_other_commands_succeed(tmp_path, command, params):
    cfg = {"schema_version": 1, "seed": 1, "params": params, "execution": {"sweeps": 100}}
    out = tmp_path / "o"
    assert main([command, "--config", write(tmp_path, "c", cfg), "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "c", {"schema_version": 1, "seed": 1, "params": {"betas": [0.5]}})
    r = subprocess.run([sys.executable, "-m", "plurilab", "curie-weiss", "--config", cfg, "--out", str(tmp_path / "o")])
    assert r.returncode == 0


@pytest.mark.parametrize("x", [0.1, 1 / 3, 1e-300, 123456789.125, -2.5e17])
def test_csv_numbers_round_trip(x):
    from plurilab.io import fmt
    assert float(fmt(x)) == x
    assert fmt(x) == repr(x)
