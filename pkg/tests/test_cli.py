import csv
import json
import math

import pytest

from levyinv import cli
from levyinv.config import ExperimentConfig
from levyinv.errors import ConfigError
from levyinv.experiment import run_experiment, validate
from levyinv.presets import build_sde, preset, preset_doc, theta_sweep
from levyinv.schedules import FAIL, NA, PASS


def small(name="cauchy_ou", N=100, seeds=(1,), **params):
    return preset(name, **params).replace(N=N, seeds=list(seeds))


def test_unknown_keys_rejected():
    doc = preset_doc("cauchy_ou")
    doc["schedule"]["gamma"]["exponnent"] = 0.5
    with pytest.raises(ConfigError, match="schedule/gamma"):
        ExperimentConfig.from_dict(doc)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**preset_doc("cauchy_ou"), "stpes": 3})


def test_invariants_enforced():
    with pytest.raises(ConfigError):
        small(N=0)
    with pytest.raises(ConfigError):
        small(seeds=())
    with pytest.raises(ConfigError):
        preset("nope")
    with pytest.raises(ConfigError):
        preset("cauchy_ou", alpha=2)


def test_cauchy_ou_preset():
    cfg = preset("cauchy_ou")
    s = cfg.doc["schedule"]
    assert (s["gamma"]["exponent"], s["eta"]["exponent"]) == (0.5, 0.5)
    assert s["u"]["exponent_of_gamma"] == 0.5
    assert cfg.N == 50000 and cfg.seeds == [1, 2, 3, 4, 5]
    assert cfg.doc["reference"] == {"law": "cauchy", "scale": 1.0}


def test_efc_preset():
    cfg = preset("efc_dust")
    assert cfg.scheme == "B" and cfg.N == 10 ** 6
    sde = build_sde(cfg.doc)
    for x in (-0.4, 0.0, 0.7):
        assert sde.b(x) == pytest.approx(1 - x)
        assert sde.kappa(x) == pytest.approx(-x)
    assert not sde.compensated


def test_stable_ou_one_one_matches_cauchy_ou():
    a = build_sde(preset("stable_ou", alpha=1.0, c=1.0).doc)
    b = build_sde(preset("cauchy_ou").doc)
    for x in (-2.0, 0.5):
        assert a.b(x) == b.b(x) and a.kappa(x) == b.kappa(x)
    assert a.levy.unit_scale == pytest.approx(b.levy.unit_scale, rel=1e-15)


def test_theta_sweep():
    cfgs = theta_sweep()
    assert len(cfgs) == 9
    for cfg in cfgs:
        u = cfg.doc["schedule"]["u"]["exponent_of_gamma"]
        assert u == (1.0 if cfg.scheme == "B" else 0.5)
        rep = validate(cfg)
        assert rep.basic == PASS


def test_validate_examples():
    assert validate(preset("cauchy_ou")).all_pass
    doc = preset_doc("cauchy_ou", scheme="C")
    doc["schedule"]["u"]["exponent_of_gamma"] = 1.0
    rep = validate(ExperimentConfig.from_dict(doc))
    assert rep.scheme_c_vanishing == FAIL
    doc = preset_doc("cauchy_ou")
    doc["schedule"]["eta"]["exponent"] = 0.3
    assert validate(ExperimentConfig.from_dict(doc)).eta_over_gamma == FAIL


def test_scheme_c_failure_blocks_run(tmp_path):
    doc = preset_doc("cauchy_ou", scheme="C")
    doc["schedule"]["u"]["exponent_of_gamma"] = 1.0
    doc.update(N=50, seeds=[1])
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig.from_dict(doc), outdir=tmp_path)
    doc["allow_nonvanishing_c"] = True
    rep = run_experiment(ExperimentConfig.from_dict(doc), outdir=tmp_path)
    assert rep.report["admissibility"]["scheme_c_vanishing"] == FAIL


def test_run_writes_artifacts(tmp_path):
    rep = run_experiment(small(), outdir=tmp_path, workers=1)
    for f in ("report.json", "timing.json", "kde.csv", "functionals.csv", "probes.csv"):
        assert (tmp_path / f).exists()
    with open(tmp_path / "report.json") as fh:
        report = json.load(fh)
    assert report == rep.report
    assert report["merged"]["functionals"]["one"] == 1.0
    assert report["seeds"][0]["functionals"]["one"] == 1.0
    assert report["admissibility"]["basic"] == PASS
    assert report["admissibility"]["jump_budget"] == NA
    with open(tmp_path / "kde.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "density"] and len(rows) == 602
    assert rows[301][0] == "0"
    with open(tmp_path / "probes.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["seed", "name", "n", "H", "value"]


def test_csv_float_format(tmp_path):
    run_experiment(small(), outdir=tmp_path, workers=1)
    with open(tmp_path / "functionals.csv") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        v = float(r["value"])
        assert "%.17g" % v == r["value"]


def test_report_is_reproducible(tmp_path):
    cfg = small(seeds=(1, 2), N=300)
    run_experiment(cfg, outdir=tmp_path / "a", workers=1)
    run_experiment(cfg, outdir=tmp_path / "b", workers=2)
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    assert a == b


def test_config_roundtrip(tmp_path):
    cfg = preset("radial_stable", rho=0.5, r=1.2)
    path = tmp_path / "c.json"
    cfg.save(path)
    again = ExperimentConfig.load(path)
    assert again == cfg
    assert json.loads(path.read_text()) == cfg.doc


def test_divergence_recorded_per_seed(tmp_path):
    doc = preset_doc("cauchy_ou")
    doc["model"] = {"name": "affine", "params": {"b": [0.0, 10.0], "kappa": [1.0, 0.0],
                                                 "levy": {"family": "cauchy_unit"}}}
    doc.update(N=5000, seeds=[1, 2], probes={"generator_residual": None, "lyapunov": None,
                                          "mean_reversion": None})
    rep = run_experiment(ExperimentConfig.from_dict(doc), outdir=tmp_path, workers=1)
    assert all(s["diverged"] for s in rep.report["seeds"])
    assert all(s["divergence"]["n"] > 0 for s in rep.report["seeds"])


def test_cli_preset_validate_run(tmp_path, capsys, monkeypatch):
    path = tmp_path / "cfg.json"
    assert cli.main(["preset", "cauchy_ou", "--emit", str(path)]) == 0
    assert cli.main(["validate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "scheme_c_vanishing" in out and "fail" not in out.split("wrote")[-1]
    monkeypatch.setenv("LEVYINV_OUTPUT_ROOT", str(tmp_path / "root"))
    assert cli.main(["run", str(path), "--N", "200", "--seeds", "3", "--workers", "1"]) == 0
    assert (tmp_path / "root" / "cauchy_ou" / "report.json").exists()


def test_cli_validate_failure_exit_code(tmp_path):
    doc = preset_doc("cauchy_ou")
    doc["schedule"]["eta"]["exponent"] = 0.3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["validate", str(path)]) == 1


def test_cli_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 1, "model": {"name": "cauchy_ou"}, "scheme": "D", "N": 3}')
    assert cli.main(["validate", str(path)]) == 2
    assert "scheme" in capsys.readouterr().err


def test_cli_preset_params(capsys):
    assert cli.main(["preset", "stable_ou", "--param", "alpha=1.5", "--param", "c=2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["model"]["params"] == {"alpha": 1.5, "c": 2.0}
    assert doc["reference"] == {"law": "stable", "alpha": 1.5, "scale": 2.0}


def test_cli_asclt(tmp_path, capsys):
    assert cli.main(["asclt", "--N", "2000", "--out", str(tmp_path)]) == 0
    assert "KS" in capsys.readouterr().out
    data = json.loads((tmp_path / "asclt.json").read_text())
    assert data["N"] == 2000 and 0 <= data["ks"] <= 1
    assert cli.main(["asclt", "--law", "log_pareto", "--alpha", "1.5", "--N", "1000"]) == 0
    assert math.isfinite(float(capsys.readouterr().out.rsplit("=", 1)[1]))
