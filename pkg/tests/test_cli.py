import csv
import json

import pytest

from thermogap import __version__
from thermogap import config as cfgmod
from thermogap.cli import main
from thermogap.errors import ConfigError

from conftest import CONFIGS

DOUBLING = CONFIGS / "doubling.toml"


def _json(path):
    return json.loads(path.read_text())


def test_spectrum_doubling(tmp_path):
    assert main(["spectrum", "--config", str(DOUBLING), "--out", str(tmp_path)]) == 0
    out = _json(tmp_path / "spectrum.json")
    assert abs(out["spectrum"]["lambda"] - 2.0) < 1e-10
    assert out["version"] == __version__
    assert out["config_hash"] == cfgmod.config_hash(cfgmod.load_config(DOUBLING))
    with open(tmp_path / "spectrum.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "h", "nu", "mu"]
    assert len(rows) == 1025 and "," not in rows[1][1]


def test_check_mp_t1_exits_2(tmp_path):
    code = main(["check", "--config", str(CONFIGS / "mp_t1.toml"), "--out", str(tmp_path)])
    assert code == 2
    recs = {r["name"]: r for r in _json(tmp_path / "check.json")["hypotheses"]["records"]}
    assert not recs["P"]["passed"] and recs["P"]["margin"] < 0


def test_demo_discontinuity_without_config(tmp_path):
    assert main(["demo-discontinuity", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "demo-discontinuity.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["n"]) for r in rows] == [1, 10, 100]
    assert all(float(r["lip"]) >= 0.99 for r in rows)


def test_outputs_are_byte_identical(tmp_path):
    cfg = str(CONFIGS / "doubling_cones.toml")
    for run in ("a", "b"):
        assert main(["correlations", "--config", cfg, "--out", str(tmp_path / run)]) == 0
    for name in ("correlations.json", "correlations.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_hypothesis_gate(tmp_path):
    # density needs passing hypotheses; the t = 1 potential fails them
    code = main(["density", "--config", str(CONFIGS / "mp_t1.toml"), "--out", str(tmp_path)])
    assert code == 2
    assert _json(tmp_path / "density.json")["status"] == "hypotheses_failed"


def test_numeric_failure_exit_1(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[map]\nfamily = "manneville_pomeau"\nalpha = 0.5\n'
                   '[potential]\nfamily = "fourier"\ncoeffs = [[1, 0.3, 0.0]]\n'
                   '[numerics]\nN = 256\nmax_iter = 2\n')
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert _json(tmp_path / "spectrum.json")["status"] == "numeric_failure"


def test_invalid_config_exit_3(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[map]\nfamily = "doubling"\n[numerics]\nN = 1000\n')
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert "numerics.N" in capsys.readouterr().err


def test_toml_syntax_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "broken.toml"
    cfg.write_text('[map]\nfamily = "doubling\n')
    assert main(["check", "--config", str(cfg)]) == 3
    assert "line 2" in capsys.readouterr().err


def test_missing_config(capsys):
    assert main(["spectrum"]) == 3
    assert "--config" in capsys.readouterr().err


def test_validate_cases(tmp_path, capsys):
    assert cfgmod.validate(cfgmod.load_config(DOUBLING)) == []
    cfg = cfgmod.set_path(cfgmod.load_config(DOUBLING), "constants.hoelder_exponent", 1.5)
    diags = cfgmod.validate(cfg)
    assert len(diags) == 1 and diags[0].startswith("constants.hoelder_exponent")
    noseed = {"map": {"family": "doubling"}}
    diags = cfgmod.validate(noseed, "clt")
    assert len(diags) == 1 and diags[0].startswith("run.seed")
    assert main(["validate", "--config", str(DOUBLING)]) == 0
    bad = tmp_path / "noseed.toml"
    bad.write_text('[map]\nfamily = "doubling"\n')
    assert main(["validate", "--config", str(bad), "--for", "clt"]) == 3


def test_seed_override_changes_hash(tmp_path):
    cfg = str(CONFIGS / "doubling_clt.toml")
    main(["validate", "--config", cfg])
    base = cfgmod.config_hash(cfgmod.load_config(CONFIGS / "doubling_clt.toml"))
    assert main(["check", "--config", cfg, "--out", str(tmp_path), "--seed-override", "99"]) == 0
    assert _json(tmp_path / "check.json")["config_hash"] != base


def test_threads_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("THERMOGAP_THREADS", "zero")
    assert main(["spectrum", "--config", str(DOUBLING), "--out", str(tmp_path)]) == 3
    monkeypatch.setenv("THERMOGAP_THREADS", "2")
    assert main(["spectrum", "--config", str(DOUBLING), "--out", str(tmp_path)]) == 0


def test_plots_written(tmp_path):
    pytest.importorskip("matplotlib")
    assert main(["demo-discontinuity", "--out", str(tmp_path), "--plots"]) == 0
    svg = (tmp_path / "demo-discontinuity.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_sweep_and_random_stability(tmp_path):
    assert main(["sweep", "--config", str(CONFIGS / "pitchfork_sweep.toml"), "--out", str(tmp_path)]) == 0
    rows = _json(tmp_path / "sweep.json")["rows"]
    assert [r["t"] for r in rows] == [0.04, 0.02, 0.01, 0.005]
    assert main(["random-stability", "--config", str(CONFIGS / "mp_random.toml"),
                 "--out", str(tmp_path)]) == 0
    assert len(_json(tmp_path / "random-stability.json")["rows"]) == 3


def test_every_shipped_config_validates():
    for path in sorted(CONFIGS.glob("*.toml")):
        assert cfgmod.validate(cfgmod.load_config(path)) == [], path.name


def test_config_error_carries_diagnostics():
    with pytest.raises(ConfigError) as info:
        cfgmod.parse_config("x = ")
    assert info.value.diagnostics
