import json

import pytest

from sdcf.cli import main

SDCF = {
    "engine": "binomial-sdcf",
    "cashflow": {"kind": "single", "x0": 1.0, "mu": 0.2, "sigma": 0.3},
    "rates": {"r_p": 0.10, "q0": 7.0},
    "horizon": {"T": 5, "steps": 5},
}

LSM = {
    "engine": "lsm",
    "cashflow": {"kind": "two-factor", "x10": 5, "x20": 5, "mu1": 0.3, "mu2": 0.3, "sigma1": 0.3, "sigma2": 0.3, "rho": 0.3},
    "rates": {"r_p": 0.28, "r_q": 0.30},
    "horizon": {"T": 5, "steps": 5},
    "paths": 4000,
    "output": {"exercise_times": True},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_value_sdcf(tmp_path, capsys):
    out = tmp_path / "out"
    doc = {**SDCF, "output": {"lattices": True}}
    assert main(["value", write(tmp_path, doc), "--out-dir", str(out)]) == 0
    report = json.loads((out / "value.json").read_text())
    assert report["V0"] == pytest.approx(0.54, abs=0.01)
    assert report["r_q"] == pytest.approx(0.1306, abs=1e-4)
    assert (out / "lattice_payoff.csv").read_text().startswith("t,j,value")
    assert "V0" in capsys.readouterr().out


def test_value_lsm_files(tmp_path):
    out = tmp_path / "out"
    assert main(["value", write(tmp_path, LSM), "--out-dir", str(out), "--seed", "3"]) == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"value.json", "boundary.csv", "phi.csv", "exercise_times.csv"}
    report = json.loads((out / "value.json").read_text())
    assert report["seed"] == 3 and report["paths"] == 4000
    assert report["V0"] >= report["P0"] >= 0
    assert len((out / "phi.csv").read_text().splitlines()) == 7


def test_value_is_byte_identical_across_runs_and_workers(tmp_path):
    cfg = write(tmp_path, LSM)
    runs = []
    for k, workers in enumerate(("1", "1", "8")):
        out = tmp_path / f"o{k}"
        assert main(["value", cfg, "--out-dir", str(out), "--workers", workers]) == 0
        runs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert runs[0] == runs[1] == runs[2]


def test_irr(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["irr", write(tmp_path, SDCF), "--out-dir", str(out)]) == 0
    assert json.loads((out / "irr.json").read_text())["r_q"] == pytest.approx(0.1305796811, abs=1e-9)
    assert "IRR" in capsys.readouterr().out


def test_sweep(tmp_path):
    out = tmp_path / "out"
    over = write(tmp_path, {"axes": {"r_p": [0.28, 0.3, 0.32]}, "n_paths": 2000})
    assert main(["sweep", "--study", "boundary", over, "--out-dir", str(out)]) == 0
    verdicts = json.loads((out / "boundary_verdicts.json").read_text())
    assert verdicts["study"] == "boundary"
    assert len((out / "boundary_grid.csv").read_text().splitlines()) == 4


def test_schema(tmp_path):
    assert main(["schema", "--out-dir", str(tmp_path)]) == 0
    schema = json.loads((tmp_path / "schema.json").read_text())
    assert {"scenario", "sweep", "studies"} <= set(schema)


@pytest.mark.parametrize(
    "doc",
    [
        {**SDCF, "engine": "trinomial"},
        {**SDCF, "surprise": 1},
        {**SDCF, "rates": {"r_p": 0.1}},
        {**SDCF, "cashflow": {"kind": "single", "x0": -1.0, "mu": 0.2, "sigma": 0.3}},
        {**LSM, "cashflow": SDCF["cashflow"]},
        {**SDCF, "mode": "continuous"},
    ],
)
def test_bad_config_exit_2_without_output(tmp_path, capsys, doc):
    out = tmp_path / "out"
    assert main(["value", write(tmp_path, doc), "--out-dir", str(out)]) == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_missing_or_malformed_file(tmp_path):
    assert main(["value", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["value", str(bad)]) == 2


def test_irr_without_bracket_exit_3(tmp_path, capsys):
    doc = {**SDCF, "cashflow": {"kind": "single", "x0": 1.0, "mu": 0.0, "sigma": 0.3}, "rates": {"r_p": 0.1, "q0": 0.5}}
    out = tmp_path / "out"
    assert main(["irr", write(tmp_path, doc), "--out-dir", str(out)]) == 3
    assert not out.exists()
    assert "numeric failure" in capsys.readouterr().err


def test_unknown_sweep_override_exit_2(tmp_path):
    over = write(tmp_path, {"axes": {"sigma9": [0.1, 0.2]}})
    out = tmp_path / "out"
    assert main(["sweep", "--study", "boundary", over, "--out-dir", str(out)]) == 2
    assert not out.exists()
