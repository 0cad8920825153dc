import csv
import json
import math

import numpy as np
import pytest

from lorentz_tori.cli import main
from lorentz_tori.config import ConfigError, load_config, parse_config

from conftest import CONFIGS

FLAT = str(CONFIGS / "flat.ini")
SINGLE = str(CONFIGS / "single_mode.ini")


def test_defaults_echoed():
    cfg = parse_config("[model]\ndim = 2\n")
    assert "conformal.c0" in cfg.defaults_applied and "model.dim" not in cfg.defaults_applied
    assert cfg.build_model().factor.is_constant


@pytest.mark.parametrize("text,needle", [
    ("[model]\ndim = x\n", "[model] dim"),
    ("[model]\nnorm = taxicab\n", "[model] norm"),
    ("[model]\nlattice = 1 0\n", "[model] lattice"),
    ("[conformal]\nc0 = 0.5\nmodes = 1 0 0.3 0.4\n", "positivity invariant"),
    ("[conformal]\nmodes = 1 0.3 0.4\n", "[conformal] modes"),
    ("[cone]\neps = 0\n", "[cone] eps"),
    ("[cone]\neps = 0.8\n", "[cone] eps"),
    ("[solver]\ndepth = 2\n", "[solver] depth"),
    ("[solver]\ncolour = red\n", "unknown key"),
    ("[extra]\n", "unknown section"),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError, match=needle.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


def test_reference_configs_load():
    for name in ("flat", "single_mode", "bumpy", "bumpy3d"):
        cfg = load_config(CONFIGS / f"{name}.ini")
        model = cfg.build_model()
        assert model.dim == cfg.dim
    cfg = load_config(CONFIGS / "bumpy3d.ini")
    assert np.allclose(cfg.basis()[:, 1], [0.5, 1.0, 0.0])


def test_geodesic_flat(tmp_path):
    assert main(["geodesic", "--config", FLAT, "--v0", "1,0", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "geodesic.csv")))
    assert float(rows[-1]["x_1"]) == pytest.approx(1.0) and float(rows[-1]["x_2"]) == 0.0
    rep = json.loads((tmp_path / "geodesic_report.json").read_text())
    assert rep["results"]["energy_drift"] == 0.0
    assert rep["config_hash"] == load_config(FLAT).digest


def test_geodesic_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["geodesic", "--config", SINGLE, "--v0", "1,0.4", "--out", str(out)]) == 0
    assert (a / "geodesic.csv").read_bytes() == (b / "geodesic.csv").read_bytes()
    ra = json.loads((a / "geodesic_report.json").read_text())
    rb = json.loads((b / "geodesic_report.json").read_text())
    ra.pop("wall_time"), rb.pop("wall_time")
    assert ra == rb


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[conformal]\nc0 = 0.2\nmodes = 1 0 0.3 0\n")
    assert main(["geodesic", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "positivity invariant" in capsys.readouterr().err
    eps0 = tmp_path / "eps0.ini"
    eps0.write_text("[cone]\neps = 0\n")
    assert main(["verify", "--config", str(eps0), "--out", str(tmp_path)]) == 2
    assert main(["geodesic", "--config", FLAT, "--v0", "0,1", "--out", str(tmp_path)]) == 3
    assert main(["geodesic", "--config", str(tmp_path / "missing.ini")]) == 2


def test_distance_batch(tmp_path):
    pairs = tmp_path / "pairs.csv"
    rng = np.random.default_rng(0)
    lines = ["x_1,x_2,y_1,y_2", "0 0 2 1", "0 0 1 3", "bad row here x"]
    for _ in range(97):
        x = rng.uniform(0, 1, 2)
        y = x + np.array([rng.uniform(1, 3), rng.uniform(-0.5, 0.5)])
        lines.append(" ".join(f"{c:.6f}" for c in (*x, *y)))
    pairs.write_text("\n".join(lines) + "\n")
    assert main(["distance", "--config", FLAT, "--pairs", str(pairs), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "distances.csv")))
    assert len(rows) == 100
    assert float(rows[0]["lower"]) == pytest.approx(math.sqrt(3)) == float(rows[0]["upper"])
    assert rows[1]["tag"] == "acausal" and float(rows[1]["lower"]) == 0.0
    assert rows[2]["error"]
    rep = json.loads((tmp_path / "distance_report.json").read_text())
    assert rep["results"] == {"rows": 100, "errors": 1}


def test_stable_norm_dual_mather_flat(tmp_path):
    cfg = tmp_path / "flat.ini"
    cfg.write_text(open(FLAT).read().replace("depth = 5", "depth = 3"))
    assert main(["stable-norm", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "stable_norm.csv")))
    for r in rows:
        mag = math.sqrt(float(r["v_1"]) ** 2 - float(r["v_2"]) ** 2)
        assert abs(float(r["stable"]) - mag) <= 1e-4 * mag
    assert main(["stable-norm", "--config", str(cfg), "--out", str(tmp_path),
                 "--format", "json"]) == 0
    assert "model_hash" in json.loads((tmp_path / "stable_norm.json").read_text())

    cov = tmp_path / "cov.txt"
    cov.write_text("1 0\n2 1\n")
    assert main(["dual", "--config", str(cfg), "--covectors", str(cov), "--out", str(tmp_path),
                 "--format", "json"]) == 0
    rec = json.loads((tmp_path / "dual.json").read_text())
    assert rec[0]["dual"] == pytest.approx(1.0, abs=1e-3)
    assert rec[1]["dual"] == pytest.approx(math.sqrt(3), rel=1e-3)

    assert main(["mather", "--config", str(cfg), "--covector", "1,0.2", "--horizon", "4",
                 "--samples", "8", "--out", str(tmp_path)]) == 0
    trace = list(csv.DictReader(open(tmp_path / "mather_rotation.csv")))
    rho = np.array([[float(r["rho_1"]), float(r["rho_2"])] for r in trace])
    assert np.max(np.abs(rho - rho[0])) <= 1e-6
    cov.write_text("1 2\n")
    assert main(["dual", "--config", str(cfg), "--covectors", str(cov), "--out",
                 str(tmp_path)]) == 3


def test_verify_flat_quick(tmp_path):
    assert main(["verify", "--config", FLAT, "--level", "quick", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert all(c["status"] == "pass" for c in rep["checks"])
    names = [c["name"] for c in rep["checks"]]
    assert names[0].startswith("cone.") and names[-1].startswith("rotation.")


def test_help_lists_keys(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "--help"])
    out = capsys.readouterr().out
    assert "[conformal]" in out and "--level" in out
