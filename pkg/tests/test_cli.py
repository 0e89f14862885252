from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

from conftest import CONFIGS

from longdisp.cli import EXIT_CONFIG, EXIT_IO, EXIT_MISMATCH, EXIT_OK, main


def write_config(tmp_path: Path, name: str, **changes) -> str:
    obj = json.loads((CONFIGS / f"{name}.json").read_text())
    obj.update(changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    return str(path)


def corrupt(src: Path, dst: Path, n: int) -> None:
    shutil.copytree(src, dst)
    lines = (dst / "steps.jsonl").read_text().splitlines()
    rec = json.loads(lines[n - 1])
    rec["p"][0] = str(int(rec["p"][0]) + 1)
    lines[n - 1] = json.dumps(rec)
    (dst / "steps.jsonl").write_text("\n".join(lines) + "\n")


def test_construct_writes_a_run(tmp_path):
    out = tmp_path / "run"
    code = main(["construct", "--config", write_config(tmp_path, "euclidean_demo"), "--out", str(out),
                 "--steps", "3"])
    assert code == EXIT_OK
    for name in ("config.json", "steps.jsonl", "summary.json", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    from longdisp.config import ConstructionConfig
    cfg = ConstructionConfig.from_json(json.loads((out / "config.json").read_text()))
    assert manifest["config_digest"] == cfg.digest() and manifest["steps"] == 3
    assert len((out / "steps.jsonl").read_text().splitlines()) == 3


def test_construct_rejects_bad_configs(tmp_path, capsys):
    bad = write_config(tmp_path, "euclidean_demo",
                       intervals={"kind": "constant", "interval": ["0", "2*M"]})
    assert main(["construct", "--config", bad, "--out", str(tmp_path / "a")]) == EXIT_CONFIG
    bad = write_config(tmp_path, "euclidean_demo", m=2, residues=[1, 1, 1, 1, 0, 0, 0], steps=7)
    assert main(["construct", "--config", bad, "--out", str(tmp_path / "b")]) == EXIT_CONFIG
    assert "index 7" in capsys.readouterr().err
    assert main(["construct", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "c")]) == EXIT_IO


def test_verify_accepts_the_demo_run(euclid, tmp_path, capsys):
    _, _, out = euclid
    run_dir = tmp_path / "copy"
    shutil.copytree(out, run_dir)
    assert main(["verify", "--run", str(run_dir)]) == EXIT_OK
    report = json.loads((run_dir / "verification.json").read_text())
    assert report["match"] and report["compared"] >= 2
    assert all(b["status"] == "verified-exact" for b in report["beyond"])


def test_verify_reports_the_first_corrupted_index(euclid, tmp_path, capsys):
    _, _, out = euclid
    for n in (1, 3):
        dst = tmp_path / f"bad{n}"
        corrupt(out, dst, n)
        assert main(["verify", "--run", str(dst)]) == EXIT_MISMATCH
        assert f"mismatch at index {n}" in capsys.readouterr().out


def test_verify_with_zero_budget_is_vacuous(euclid, tmp_path, capsys):
    _, _, out = euclid
    dst = tmp_path / "v"
    shutil.copytree(out, dst)
    assert main(["verify", "--run", str(dst), "--budget-q", "0"]) == EXIT_OK
    assert "vacuous" in capsys.readouterr().out


def test_fit_prints_parameters(capsys):
    assert main(["fit", "--norm", "maximum"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["a"][0].startswith("0.5") and rep["source"] == "closed form"
    assert main(["fit", "--norm", "p=3/2"]) == EXIT_OK
    assert main(["fit", "--norm", "nonsense"]) == EXIT_CONFIG


def test_spectrum_outputs(tmp_path, euclid):
    out = tmp_path / "spec"
    assert main(["spectrum", "--v", "1/3,2/7", "--q-max", "500", "--out", str(out)]) == EXIT_OK
    rows = [json.loads(line) for line in (out / "sequence.jsonl").read_text().splitlines()]
    assert rows[0]["q"] == "1" and (out / "spectrum.png").stat().st_size > 0
    with open(out / "beta.csv") as fh:
        beta = list(csv.DictReader(fh))
    assert len(beta) == len(rows) - 1
    _, _, run_dir = euclid
    out2 = tmp_path / "spec_run"
    assert main(["spectrum", "--run", str(run_dir), "--out", str(out2)]) == EXIT_OK
    with open(out2 / "beta.csv") as fh:
        for row in csv.DictReader(fh):
            assert 0.5 - 1e-12 <= float(row["beta_lower"]) <= float(row["beta_upper"]) <= 0.6 + 1e-12


def test_flow_outputs(tmp_path, euclid):
    _, _, run_dir = euclid
    out = tmp_path / "flow"
    assert main(["flow", "--run", str(run_dir), "--points", "60", "--out", str(out)]) == EXIT_OK
    with open(out / "flow.csv") as fh:
        pts = list(csv.DictReader(fh))
    assert len(pts) == 60 and list(pts[0]) == ["t", "lambda1_lower", "lambda1_upper", "witness_q"]
    assert all(float(p["lambda1_lower"]) <= float(p["lambda1_upper"]) for p in pts)
    with open(out / "maxima.csv") as fh:
        maxima = [m for m in csv.DictReader(fh) if m["initial"] in ("False", "0", "false")]
    assert maxima and all(float(m["identity_error"]) <= 1e-9 for m in maxima)
    assert (out / "flow.png").stat().st_size > 0
