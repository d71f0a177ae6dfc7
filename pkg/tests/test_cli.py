import csv
import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from nimgrating.cli import main
from nimgrating.problem import Numerics, format_config, reference_config

from conftest import make_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
REF = str(CONFIGS / "reference.ini")
FLAT = str(CONFIGS / "reference_flat.ini")


def write_cfg(tmp_path, cfg, numerics=None, name="c.ini"):
    p = tmp_path / name
    p.write_text(format_config(cfg, numerics), encoding="utf-8")
    return str(p)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_validate_ok(capsys):
    assert main(["validate", REF]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_critical_contrast(tmp_path, capsys):
    assert main(["validate", write_cfg(tmp_path, make_config(eps2=-1.0))]) == 2
    assert "critical contrast" in capsys.readouterr().out


def test_validate_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.ini")]) == 1


def test_validate_malformed(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("garbage\n")
    assert main(["validate", str(p)]) == 2


def test_bad_flags():
    assert main(["solve", REF, "--mesh", "8,2"]) == 2
    assert main(["nonsense"]) == 2


def test_solve_outputs_and_manifest(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", REF, "--out", str(out)]) == 0
    report = read_csv(out / "report.csv")[0]
    assert float(report["energy_residual"]) < 1e-8
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "solve"
    assert man["config_sha256"] == hashlib.sha256(Path(REF).read_bytes()).hexdigest()
    names = {o["file"] for o in man["outputs"]}
    assert names == {"report.csv", "field.csv", "efficiencies.csv"}
    for o in man["outputs"]:
        assert hashlib.sha256((out / o["file"]).read_bytes()).hexdigest() == o["sha256"]
    raw = (out / "field.csv").read_bytes()
    assert b"\r\n" not in raw


def test_solve_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", REF, "--out", str(a)]) == 0
    assert main(["solve", REF, "--out", str(b)]) == 0
    for name in ("report.csv", "field.csv", "efficiencies.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sigma_flag_matches_config(tmp_path):
    p = write_cfg(tmp_path, reference_config(0.0))
    q = write_cfg(tmp_path, reference_config(0.3), name="d.ini")
    assert main(["solve", p, "--sigma", "0", "--out", str(tmp_path / "a")]) == 0
    assert main(["solve", q, "--sigma", "0", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "field.csv").read_bytes() == (tmp_path / "b" / "field.csv").read_bytes()


def test_mesh_and_modes_flags(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", REF, "--mesh", "16,3,3", "--modes", "2", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["parameters"]["mesh"] == [16, 3, 3] and man["parameters"]["modes"] == 2
    assert len(read_csv(out / "efficiencies.csv")) == 5
    assert main(["solve", REF, "--mesh", "8,2,2", "--modes", "3", "--out", str(out)]) == 2


def test_wood_anomaly_exit(tmp_path):
    cfg = make_config()
    p = write_cfg(tmp_path, cfg, Numerics(nx=16, ny1=3, ny2=3, modes=1))
    assert main(["solve", p, "--out", str(tmp_path / "o")]) == 4


def test_laps(tmp_path):
    out = tmp_path / "o"
    assert main(["laps", REF, "--steps", "6", "--out", str(out)]) == 0
    rows = read_csv(out / "laps.csv")
    assert len(rows) == 6
    sig = [float(r["sigma"]) for r in rows]
    assert all(a > b for a, b in zip(sig, sig[1:]))
    gaps = [float(r["limit_gap"]) for r in rows]
    assert gaps[-1] < gaps[0]


def test_convergence(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["convergence", FLAT, "--levels", "3", "--out", str(out)]) == 0
    rows = read_csv(out / "convergence.csv")
    assert len(rows) == 3
    assert float(rows[-1]["rate"]) >= 1.8
    assert "fitted rate" in capsys.readouterr().out


def test_convergence_needs_flat(tmp_path, capsys):
    assert main(["convergence", REF, "--out", str(tmp_path / "o")]) == 3
    assert "oracle unavailable" in capsys.readouterr().err


def test_check_adn(tmp_path):
    out = tmp_path / "o"
    assert main(["check", REF, "--adn", "--out", str(out)]) == 0
    rows = read_csv(out / "adn.csv")
    assert len(rows) == 32 * 4 * 3
    assert all(float(r["independence_margin"]) > 0 for r in rows)


def test_check_adn_rejects_zero(tmp_path, capsys):
    assert main(["check", REF, "--adn", "--xi1", "0,1", "--out", str(tmp_path / "o")]) == 2
    assert "nonzero" in capsys.readouterr().err


def test_check_coercivity(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["check", REF, "--coercivity", "--sigmas", "1,0", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "condition_met=true" in text or "condition_met=false" in text
    rows = read_csv(out / "coercivity.csv")
    assert [r["condition_met"] for r in rows] == ["true", "true"]


def test_check_needs_mode():
    assert main(["check", REF]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nimgrating", "validate", REF], capture_output=True, text=True)
    assert r.returncode == 0 and "valid" in r.stdout
