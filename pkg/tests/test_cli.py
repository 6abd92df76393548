import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from deepwh import StableParams
from deepwh.cli import main, parse_grid
from deepwh.errors import DomainError
from deepwh.exit_laws import exit_probability


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = list(csv.reader(io.StringIO("\n".join(ln for ln in lines if not ln.startswith("#")))))
    return header, body[0], body[1:]


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(parse_grid("0.5, 1,2"), [0.5, 1, 2])
    for bad in ("0:1", "a,b", "0:1:0", ""):
        with pytest.raises(DomainError):
            parse_grid(bad)


def test_exponent_csv(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["exponent", "--alpha", "0.8", "--rho", "0.5", "--z-real=-0.5:0.5:5", "-o", str(out)]) == 0
    header, cols, rows = read_csv(out)
    assert len(rows) == 5
    config = json.loads("".join(h[1:].strip() for h in header))
    assert config["params"] == {"alpha": 0.8, "rho": 0.5}
    assert "det_scaled" in " ".join(cols)


def test_factors_zero_row_shows_killing(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["factors", "--alpha", "1.5", "--rho", "0.5", "--lambda", "0,1", "-o", str(out)]) == 0
    _, cols, rows = read_csv(out)
    first = {k: float(v) for k, v in zip(cols, rows[0])}
    assert first["lambda"] == 0.0
    # For alpha > 1 the ascending ladder is killed and the dual one is not;
    # Phi_i(0) is the killing rate, i.e. the row sum at lambda = 0.
    killed = [first["kappa_11"] + first["kappa_12"], first["kappa_21"] + first["kappa_22"]]
    unkilled = [first["kappa_hat_11"] + first["kappa_hat_12"], first["kappa_hat_21"] + first["kappa_hat_22"]]
    assert min(killed) > 1e-3 and max(map(abs, unkilled)) <= 1e-9
    assert [first["Phi1"], first["Phi2"]] == pytest.approx(killed, rel=1e-12)


def test_verify_passes(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--alpha", "1.3", "--rho", "0.5", "-o", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["all_pass"] and all(r["pass"] for r in payload["records"])
    names = {r["name"] for r in payload["records"]}
    assert {"det_root", "esscher_circ", "duality", "factorisation", "killing_pattern"} <= names


def test_identities(tmp_path):
    out = tmp_path / "i.json"
    assert main(["identities", "--alpha", "0.6", "--rho", "0.5", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["which"] == "small_alpha"


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["verify", "--alpha", "2.5", "--rho", "0.5"]) == 2
    assert main(["exponent", "--rho", "0.5"]) == 2
    assert main(["factors", "--alpha", "0.8", "--rho", "0.5", "--lambda=-1,1"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path):
    code = main(["verify", "--alpha", "0.8", "--rho", "0.5", "--quad-rel-tol", "1e-20", "--quad-abs-tol", "1e-20", "-o", str(tmp_path / "v.json")])
    assert code == 3


def test_failed_check_exit_1(tmp_path):
    args = ["simulate", "two-sided-exit", "--alpha", "1.2", "--rho", "0.5", "--n-paths", "300", "--time-step", "1e-3", "--ks-bound", "1e-6"]
    assert main([*args, "-o", str(tmp_path / "h.csv")]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0.7\nrho = 0.4\nn_paths = 400\ntime_step = 1e-3\nseed = 3\n")
    out, summ = tmp_path / "h.csv", tmp_path / "s.json"
    code = main(["simulate", "two-sided-exit", "--config", str(cfg), "--n-paths", "500", "--ks-bound", "1", "-o", str(out), "--summary", str(summ)])
    assert code == 0
    s = json.loads(summ.read_text())
    assert s["config"]["params"] == {"alpha": 0.7, "rho": 0.4}
    assert s["config"]["mc"]["n_paths"] == 500 and s["config"]["mc"]["seed"] == 3
    assert s["up_probability"]["analytic"] == pytest.approx(exit_probability(StableParams(0.7, 0.4), 0.3))
    _, cols, rows = read_csv(out)
    assert cols[:3] == ["branch", "bin_left", "bin_right"]
    assert {r[0] for r in rows} == {"1", "-1"}


def test_bad_config_file_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("alpha = 0.7\nrho = 0.4\nunknown_key = 1\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_simulation_output_reproducible_across_workers(tmp_path, monkeypatch):
    base = ["simulate", "ladder-overshoot", "--alpha", "0.8", "--rho", "0.5", "--a", "2", "--n-paths", "5000", "--time-step", "1e-3", "--ks-bound", "1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("DEEPWH_WORKERS", "2")
    assert main([*base, "-o", str(a)]) == 0
    assert main([*base, "--workers", "1", "-o", str(b)]) == 0
    strip = lambda p: [ln for ln in p.read_text().splitlines() if not ln.startswith("#")]
    assert strip(a) == strip(b)
    assert "n_workers" in a.read_text()


def test_module_entry_point(tmp_path):
    out = tmp_path / "i.json"
    res = subprocess.run(
        [sys.executable, "-m", "deepwh", "identities", "--alpha", "1.5", "--rho", "0.5", "-o", str(out)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert json.loads(out.read_text())["pass"]
