from __future__ import annotations

import json

import pytest

from slabkin.cli import main
from slabkin.config import config_text, load_config, parse_config
from slabkin.errors import ConfigError
from slabkin.transport import SimConfig

SMALL = """
[model]
kind = bgk
epsilon = 0.5
[grids]
nx = 16
nv = 16
[time]
T = 0.2
"""


def test_empty_text_gives_defaults():
    assert parse_config("") == SimConfig()


def test_shorthand_and_specific_keys():
    cfg = parse_config("[boundary]\nalpha = 0.3\nbeta = 0.3\nalpha_right = 0.5\n")
    assert (cfg.alpha_left, cfg.beta_left, cfg.alpha_right, cfg.beta_right) == (0.3, 0.3, 0.5, 0.3)


@pytest.mark.parametrize("text, key", [
    ("[nope]\nx = 1\n", "nope"),
    ("[model]\ncolour = red\n", "model.colour"),
    ("[grids]\nnx = 3.5\n", "grids.nx"),
    ("[grids]\nnv = 63\n", "grids.nv"),
    ("[model]\nepsilon = abc\n", "model.epsilon"),
    ("[model]\nepsilon = 2\n", "model.epsilon"),
    ("[time]\ncfl = 1.5\n", "time.cfl"),
    ("[boundary]\nalpha = 0.8\nbeta = 0.5\n", "boundary.alpha_left"),
    ("[potential]\nkind = table\n", "potential.path"),
    ("no section header\n", "config"),
])
def test_rejections_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


@pytest.mark.parametrize("cfg", [SimConfig(), SimConfig(epsilon=0.1, kind="fp", potential="cosine",
                                                        potential_amplitude=0.5, dt=1e-4, alpha_left=0.2,
                                                        beta_left=0.7)])
def test_config_text_round_trips(cfg):
    assert parse_config(config_text(cfg)) == cfg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def test_run_is_byte_identical(tmp_path, small_cfg):
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["run", "--config", str(small_cfg), "--out", str(o)]) == 0
    for name in ("diagnostics.csv", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["manifest"]["config"]["epsilon"] == 0.5
    assert parse_config(summary["manifest"]["config_text"]) == load_config(small_cfg)
    assert (outs[0] / "timing.json").exists()


def test_fit_subcommand(tmp_path, small_cfg, capsys):
    out = tmp_path / "r"
    main(["run", "--config", str(small_cfg), "--out", str(out)])
    capsys.readouterr()
    assert main(["fit", str(out / "diagnostics.csv"), "--window", "0.02,0.2"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["lam"] > 0 and fit["t0"] >= 0.02
    assert main(["fit", str(out / "diagnostics.csv"), "--window", "0.2"]) == 2
    assert main(["fit", str(out / "diagnostics.csv"), "--window", "0.19,0.2"]) == 3


def test_exit_code_for_bad_config(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[grids]\nnx = 0\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert main(["sweep", "--eps", "0,1", "--out", str(tmp_path / "o")]) == 2


def test_sweep_subcommand(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text("[grids]\nnx = 16\nnv = 16\n[time]\nT = 3\n")
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(p), "--eps", "0.5,0.25", "--workers", "1", "--out", str(out)]) == 0
    rep = json.loads((out / "sweep.json").read_text())
    assert [m["epsilon"] for m in rep["members"]] == [0.5, 0.25]
    assert rep["lambda_ratio"] >= 1.0 and not rep["partial"]


def test_limit_subcommand(tmp_path):
    p = tmp_path / "l.ini"
    p.write_text("[grids]\nnx = 16\nnv = 16\n[time]\nT = 0.05\n")
    out = tmp_path / "l"
    assert main(["limit", "--config", str(p), "--eps", "0.4,0.2", "--workers", "1", "--out", str(out)]) == 0
    rep = json.loads((out / "limit.json").read_text())
    assert len(rep["sup_gap"]) == 2 and all(g > 0 for g in rep["sup_gap"])


def test_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "verify.json").read_text())["seed"] == 3
    assert main(["verify", "--fault", "flip-weight"]) == 4
    assert "FAIL" in capsys.readouterr().out
