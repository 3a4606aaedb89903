import time
from pathlib import Path

import numpy as np
import pytest

from quadgap.analysis import AnalysisBundle
from quadgap.cli import main

SYMBOLS = Path(__file__).resolve().parents[1] / "symbols"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_kfp(capsys):
    code, out, _ = run(capsys, "analyze", "--model", "kfp", "--a", "1")
    assert code == 0
    assert "mu0 = 0.5" in out and "tau0 = 0.5" in out
    assert "k0 = 1" in out
    assert "[[0.25 0.  ]\n [0.   0.25]]" in out


def test_analyze_symbol_file(capsys):
    code, out, _ = run(capsys, "analyze", "--symbol", str(SYMBOLS / "harmonic_oscillator.json"))
    assert code == 0
    assert "mu0 = 1+" in out and "tau0 = 2\n" in out


def test_analyze_degenerate_chains(capsys):
    code, out, err = run(capsys, "analyze", "--model", "chains", "--a", "1", "--b", "1", "--c", "1")
    assert code == 3
    assert "basis of S" in out
    assert "singular space" in err


def test_bundle_round_trip(capsys, tmp_path):
    path = tmp_path / "b.json"
    code, _, _ = run(capsys, "analyze", "--model", "kfp", "--a", "-2", "--out", str(path))
    assert code == 0
    b = AnalysisBundle.from_json(path.read_text())
    assert b.spectrum.mu0 == pytest.approx(1.5)
    assert np.allclose(b.ground_state.A, [[1.5, -1.0], [-1.0, 0.75]], atol=1e-12)
    assert b.to_json() == path.read_text()


@pytest.mark.parametrize("argv", [
    ["analyze"],
    ["analyze", "--model", "kfp", "--a", "0"],
    ["analyze", "--model", "gle", "--lam", "0"],
    ["analyze", "--symbol", "/nonexistent.json"],
    ["analyze", "--model", "chains", "--alpha", "0.1"],
])
def test_domain_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_non_accretive_symbol(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"n": 1, "Q_re": [[-1, 0], [0, 1]], "Q_im": [[0, 0], [0, 0]]}')
    assert run(capsys, "analyze", "--symbol", str(path))[0] == 2


def test_missing_model_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify"])
    assert exc.value.code == 2


def test_sweep_single_cell(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--alpha-min", "1", "--alpha-max", "1", "--alpha-n", "1",
                     "--lambda-min", "1", "--lambda-max", "1", "--lambda-n", "1", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    code, text, _ = run(capsys, "analyze", "--model", "gle", "--alpha", "1", "--lam", "1")
    tau = float(text.split("tau0 = ")[1].split()[0])
    header = lines[0].split(",")
    row = dict(zip(header, lines[1].split(",")))
    assert float(row["tau0"]) == pytest.approx(tau, abs=1e-11)


def test_sweep_deterministic_across_workers(capsys, tmp_path):
    common = ["sweep", "--gamma", "1", "--lambda-min", "0.1", "--lambda-max", "10", "--lambda-n", "9",
              "--spacing", "linear"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *common, "--out", str(a))[0] == 0
    assert run(capsys, *common, "--workers", "3", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_oracle_csv(capsys):
    code, out, err = run(capsys, "oracle", "--model", "kfp", "--a", "1", "--N", "16", "--count", "3",
                         "--t-grid", "2,12,11")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "index,galerkin_re,galerkin_im,analytic_re,analytic_im,abs_err,converged"
    assert len(lines) == 4
    assert float(lines[1].split(",")[1]) == pytest.approx(0.5, abs=1e-6)
    assert "ground-state residual" in err and "semigroup decay rate" in err


def test_verify_kfp_positive(capsys):
    code, out, _ = run(capsys, "verify", "--model", "kfp", "--a", "1", "--N", "24", "--no-sim")
    assert code == 0
    assert "FAIL" not in out and "overall: PASS" in out


def test_verify_kfp_negative(capsys):
    code, out, _ = run(capsys, "verify", "--model", "kfp", "--a", "-2", "--no-sim")
    assert code == 0
    assert "EXPECTED-ABSENT" in out


def test_verify_wide_ground_state_uses_dilation(capsys):
    code, out, _ = run(capsys, "verify", "--model", "kfp", "--a", "0.1", "--no-sim")
    assert code == 0
    assert "dilated" in out and "overall: PASS" in out


def test_oracle_dilate(capsys):
    code, out, _ = run(capsys, "oracle", "--model", "kfp", "--a", "0.1", "--N", "20", "--count", "4", "--dilate")
    assert code == 0
    errs = [float(line.split(",")[5]) for line in out.splitlines()[1:]]
    assert max(errs) < 1e-10


def test_verify_degenerate_chains(capsys):
    code, out, _ = run(capsys, "verify", "--model", "chains", "--a", "1", "--b", "1", "--c", "1")
    assert code == 0
    assert "EXPECTED-NONZERO" in out


def test_simulate(capsys, tmp_path):
    out = tmp_path / "sim.csv"
    code, _, err = run(capsys, "simulate", "--model", "kfp", "--a", "1", "--paths", "2000",
                       "--dt", "0.5", "--seed", "4", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,mean_norm,cov_err,ci_lo,ci_hi"
    assert len(lines) == 42
    assert "mean-decay rate" in err and "slowest-mode rate" in err


def test_all_symbol_files_fast(capsys):
    files = sorted(SYMBOLS.glob("*.json"))
    assert len(files) >= 6
    t0 = time.perf_counter()
    codes = {f.stem: run(capsys, "analyze", "--symbol", str(f))[0] for f in files}
    assert time.perf_counter() - t0 < 5
    assert codes.pop("chains_degenerate") == 3
    assert set(codes.values()) == {0}
