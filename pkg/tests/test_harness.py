import json
import os

import numpy as np
import pytest

from slipns.harness.cli import PRESETS, main, preset
from slipns.harness.config import ConfigError, RunConfig
from slipns.harness.experiments import RUNNERS
from slipns.harness.report import CSV_HEADER, ExperimentReport, Row, emit_outputs, read_csv, write_csv

SMALL_RATE = dict(nu=(1e-2, 1e-3), beta=(0.5,), K=0, family="shear", T=0.2, dt=0.05, n_nodes=201)


def test_config_roundtrip_and_hash():
    cfg = preset("inviscid-rate").replace(seed=7, nu=(1e-2, 3e-3))
    back = RunConfig.loads(cfg.dumps())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    assert cfg.replace(seed=8).config_hash() != cfg.config_hash()


@pytest.mark.parametrize("kw", [dict(nu=(-1.0,)), dict(nu=()), dict(beta=(-0.5,)), dict(dt=0.0),
                                dict(K=-1), dict(seed=-1), dict(times=(2.0,)), dict(experiment="nope")])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


def test_config_file_errors(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("nu = 1e-3\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        RunConfig.load(p)
    p.write_text("nu\n")
    with pytest.raises(ConfigError):
        RunConfig.load(p)
    p.write_text("# sweep\nnu = 1e-2, 1e-3\nK = 3\n")
    cfg = RunConfig.load(p)
    assert cfg.nu == (1e-2, 1e-3) and cfg.K == 3


def test_csv_is_bit_exact(tmp_path, rng):
    rows = [Row("x", float(v), None, 0.1 * i, "q", float(w), 1e-6, "pass")
            for i, (v, w) in enumerate(rng.standard_normal((20, 2)))]
    rows.append(Row("x", None, 1.0, None, "r", float("inf")))
    write_csv(rows, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert back == rows
    assert open(tmp_path / "r.csv").readline().strip() == ",".join(CSV_HEADER)


def test_empty_report_writes_manifest_only(tmp_path):
    cfg = RunConfig()
    paths = emit_outputs(ExperimentReport("stokes-run", cfg).close(), tmp_path, cfg)
    assert [p.name for p in paths] == ["manifest.json"]
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["files"] == [] and m["config_hash"] == cfg.config_hash() and m["passed"]


def test_report_verdicts():
    rep = ExperimentReport("stokes-run", RunConfig())
    rep.add("a", 1.0, tolerance=2.0)
    rep.add("a", 3.0, tolerance=2.0)
    rep.add("b", 1.0, tolerance=0.5, upper=False)
    rep.add("c", 5.0)
    assert rep.verdicts() == {"a": False, "b": True}
    assert not rep.passed
    with pytest.raises(ValueError):
        rep.curve("bad/name", [0], [0])
    with pytest.raises(ValueError):
        Row("x", None, None, None, "q", 0.0, verdict="maybe")


@pytest.fixture(scope="module")
def rate_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("rate")
    cfg = RunConfig(experiment="inviscid-rate", out=str(out), **SMALL_RATE)
    rep = RUNNERS["inviscid-rate"](cfg)
    return cfg, rep, emit_outputs(rep, out, cfg)


def test_rate_outputs(rate_run):
    cfg, rep, paths = rate_run
    names = sorted(p.name for p in paths)
    expected = ["manifest.json", "results.csv"]
    for p in cfg.lp:
        expected.append(f"inviscid-rate__E_L{p}_beta=0.5.dat")
        expected += [f"inviscid-rate__L{p}_error_nu={nu:g}_beta=0.5.dat" for nu in cfg.nu]
    assert names == sorted(expected)
    rows = read_csv(paths[0].parent / "results.csv")
    assert rows == rep.rows
    assert {r.quantity for r in rows} >= {"E_L2", "E_L4", "rate_slope", "rate_slope_deviation"}
    curve = np.loadtxt(paths[0].parent / "inviscid-rate__E_L2_beta=0.5.dat")
    assert curve.shape == (2, 2) and np.all(curve[:, 1] > 0)
    m = json.loads((paths[0].parent / "manifest.json").read_text())
    assert m["config_hash"] == cfg.config_hash()
    assert [f["name"] for f in m["experiments"][0]["fits"]] == ["rate_slope_L2[beta=0.5]", "rate_slope_L4[beta=0.5]"]


def test_rate_is_deterministic(rate_run, tmp_path):
    cfg, rep, _ = rate_run
    again = RUNNERS["inviscid-rate"](cfg.replace(out=str(tmp_path)))
    assert [(r.quantity, r.nu, r.t, r.value) for r in again.rows] == [(r.quantity, r.nu, r.t, r.value) for r in rep.rows]


def _cli_config(tmp_path, **kw):
    p = tmp_path / "run.cfg"
    p.write_text("".join(f"{k} = {', '.join(map(str, v)) if isinstance(v, tuple) else v}\n" for k, v in kw.items()))
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    cfg = _cli_config(tmp_path, **SMALL_RATE)
    code = main(["inviscid-rate", "--config", cfg, "--out", str(tmp_path / "ok")])
    out = capsys.readouterr().out
    assert code in (0, 1)
    assert ("FAIL" in out) == (code == 1)
    assert "wrote" in out and (tmp_path / "ok" / "manifest.json").exists()
    # a tolerance nothing can meet makes the run fail with exit code 1
    cfg = _cli_config(tmp_path, slope_band=-1.0, **SMALL_RATE)
    assert main(["inviscid-rate", "--config", cfg, "--out", str(tmp_path / "bad")]) == 1
    assert "FAIL  rate_slope_deviation" in capsys.readouterr().out
    assert main(["inviscid-rate", "--nu", "-1", "--out", str(tmp_path / "neg")]) == 2
    assert "slipns:" in capsys.readouterr().err


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores directory permissions")
def test_cli_unwritable_dir_permissions(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    try:
        assert main(["stokes-run", "--out", str(ro / "sub")]) == 2
    finally:
        ro.chmod(0o700)


def test_cli_unwritable_dir_fails_before_computing(tmp_path, monkeypatch, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    called = []
    monkeypatch.setitem(RUNNERS, "stokes-run", lambda cfg: called.append(cfg))
    assert main(["stokes-run", "--out", str(blocker / "sub")]) == 2
    assert not called
    assert "not writable" in capsys.readouterr().err


def test_presets_are_valid():
    for name in PRESETS:
        preset(name).validate()
