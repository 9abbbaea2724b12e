"""Configuration parsing/serialization and the command line driver."""

import json
from dataclasses import replace

import numpy as np
import pytest

from stochstokes.cli import main
from stochstokes.config import (
    ConfigError,
    ExperimentConfig,
    config_hash,
    emit_config,
    parse_config,
    preset,
    preset_names,
)
from stochstokes.experiment import CSV_COLUMNS

TINY_INI = """\
[physics]
T = 0.25

[noise]
modes = 2

[levels]
h = 1/4
k_list = 1/8 1/16 1/32
k0 = 1/64

[mc]
n_p = 2
seed = 12345
"""

CAVITY_INI = """\
[domain]
x0 = 0
x1 = 1
y0 = 0
y1 = 1

[physics]
T = 0.25
force_x = 0
force_y = 0
boundary = cavity

[noise]
kind = additive_one
c = 0.5
modes = 2

[levels]
h = 1/4
k_list = 1/8
k0 = 1/8

[mc]
n_p = 4
seed = 99
"""


# ---------------------------------------------------------------------------
# configuration objects
# ---------------------------------------------------------------------------


def test_presets_exist_and_validate():
    assert preset_names() == [
        "cavity",
        "cavity-desk",
        "test1",
        "test1-balanced-desk",
        "test1-desk",
        "test1-fixedh-desk",
    ]
    for name in preset_names():
        preset(name)  # validates internally
    with pytest.raises(ConfigError, match="unknown preset 'bogus'"):
        preset("bogus")


def test_preset_values():
    full = preset("test1")
    assert full.h == 1.0 / 40
    assert full.k0 == 1.0 / 10240
    assert full.n_p == 6000
    assert full.k_levels == (1.0 / 10, 1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160)
    assert preset("test1-desk") == ExperimentConfig(nu=0.25)
    balanced = preset("test1-balanced-desk")
    assert balanced.pairs[-1] == (1.0 / 64, 1.0 / 32)
    assert len(balanced.pairs) == 4
    assert balanced.noise_modes == 3
    fixedh = preset("test1-fixedh-desk")
    assert fixedh.h == 1.0 / 8
    assert fixedh.k_levels == (1.0 / 16, 1.0 / 64, 1.0 / 256)
    cavity = preset("cavity")
    assert cavity.boundary == "cavity"
    assert cavity.noise_kind == "additive_one"
    assert cavity.domain == (0.0, 1.0, 0.0, 1.0)
    assert preset("cavity-desk") == replace(cavity, n_p=100)


def test_round_trip_through_ini():
    for name in preset_names():
        cfg = preset(name)
        assert parse_config(emit_config(cfg)) == cfg


def test_empty_config_rejected():
    with pytest.raises(ConfigError, match="k_list"):
        parse_config("\n")


def test_unknown_section_and_key_are_named():
    with pytest.raises(ConfigError, match=r"unknown section \[physic\]"):
        parse_config("[physic]\nnu = 1\n")
    with pytest.raises(ConfigError, match=r"unknown key 'mu' in section \[physics\]"):
        parse_config("[physics]\nmu = 1\n\n[levels]\nk_list = 1/8\n")


def test_keys_are_case_sensitive():
    assert parse_config("[physics]\nT = 0.5\n\n[levels]\nk_list = 1/8\n").T == 0.5
    with pytest.raises(ConfigError, match="unknown key 't'"):
        parse_config("[physics]\nt = 0.5\n\n[levels]\nk_list = 1/8\n")


def test_fraction_and_pair_parsing():
    cfg = parse_config(TINY_INI)
    assert cfg.h == 0.25
    assert cfg.k_levels == (1.0 / 8, 1.0 / 16, 1.0 / 32)
    assert cfg.k0 == 1.0 / 64
    assert cfg.T == 0.25
    assert cfg.n_p == 2 and cfg.seed == 12345
    with_pairs = parse_config(
        TINY_INI.replace("k0 = 1/64", "k0 = 1/64\npairs = 1/8:1/4 1/16:1/8")
    )
    assert with_pairs.pairs == ((1.0 / 8, 0.25), (1.0 / 16, 0.125))


def test_parse_errors_name_the_location():
    with pytest.raises(ConfigError, match=r"cannot parse number 'abc'"):
        parse_config("[levels]\nk_list = abc\n")
    with pytest.raises(ConfigError, match=r"cannot parse integer 'x' in \[mc\] n_p"):
        parse_config("[levels]\nk_list = 1/8\n\n[mc]\nn_p = x\n")
    with pytest.raises(ConfigError, match=r"pair '7' must look like k:h"):
        parse_config("[levels]\nk_list = 1/8\npairs = 7\n")


def test_validate_errors():
    good = parse_config(TINY_INI)
    with pytest.raises(ConfigError, match="x1 > x0"):
        replace(good, domain=(1.0, -1.0, 0.0, 1.0)).validate()
    with pytest.raises(ConfigError, match="integer multiple of k"):
        replace(good, k_levels=(1.0 / 7,)).validate()
    with pytest.raises(ConfigError, match="multiple of k0"):
        replace(good, k_levels=(1.0 / 48,)).validate()
    with pytest.raises(ConfigError, match="noise kind"):
        replace(good, noise_kind="cubic").validate()
    with pytest.raises(ConfigError, match="n_p"):
        replace(good, n_p=0).validate()
    with pytest.raises(ConfigError, match="threads"):
        replace(good, threads=0).validate()
    with pytest.raises(ConfigError, match="solver strategy"):
        replace(good, solver_strategy="magic").validate()
    with pytest.raises(ConfigError, match="seed"):
        replace(good, seed=-1).validate()


def test_config_hash_ignores_runtime_only_fields():
    cfg = parse_config(TINY_INI)
    assert config_hash(replace(cfg, threads=8, out="elsewhere")) == config_hash(cfg)
    assert config_hash(replace(cfg, nu=2.0)) != config_hash(cfg)
    assert config_hash(replace(cfg, seed=1)) != config_hash(cfg)


def test_emit_rejects_callable_force():
    cfg = replace(ExperimentConfig(), force=lambda pts: pts)
    with pytest.raises(ConfigError, match="constant force"):
        emit_config(cfg)


def test_cavity_boundary_values():
    cfg = preset("cavity-desk")
    bc = cfg.boundary_values()
    for marker in ("bottom", "left", "right"):
        assert bc[marker] == (0.0, 0.0)
    lid = bc["top"]
    pts = np.array([[0.0, 1.0], [0.5, 1.0], [1.0, 1.0]])
    vals = lid(pts)
    assert vals[0].tolist() == [0.0, 0.0]  # corners stay with the walls
    assert vals[2].tolist() == [0.0, 0.0]
    assert vals[1].tolist() == [1.0, 0.0]


# ---------------------------------------------------------------------------
# command line driver
# ---------------------------------------------------------------------------


def _write_cfg(tmp_path, text=TINY_INI, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _read_csv_rows(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# seed = ")
    assert lines[1].startswith("# config = sha256:")
    assert lines[2] == ",".join(CSV_COLUMNS)
    return [dict(zip(CSV_COLUMNS, line.split(","))) for line in lines[3:]]


def test_cli_temporal_artifacts(tmp_path):
    cfg_path = _write_cfg(tmp_path)
    out = tmp_path / "out"
    rc = main(["temporal", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 0
    rows = _read_csv_rows(out / "temporal.csv")
    level_rows = [r for r in rows if r["study"] == "temporal"]
    assert {r["statistic"] for r in level_rows} == {"au", "bu", "ap", "bp"}
    assert len(level_rows) == 3 * 4  # three levels, four statistics
    for r in level_rows:
        assert float(r["value"]) > 0.0
        assert float(r["ci_low"]) <= float(r["value"]) <= float(r["ci_high"])
        assert r["seed"] == "12345" and r["n_p"] == "2"
    rate_rows = [r for r in rows if r["study"].startswith("temporal/")]
    assert {r["study"] for r in rate_rows} == {"temporal/au", "temporal/ap"}
    assert {r["statistic"] for r in rate_rows} == {"slope", "intercept", "residual"}

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "temporal"
    assert manifest["seed"] == 12345
    assert manifest["partial"] is False
    assert manifest["outputs"] == ["config.ini", "temporal.csv"]
    assert manifest["wall_seconds"] >= 0.0
    assert manifest["git_describe"]
    digest = manifest["config"]
    assert digest.startswith("sha256:")
    assert rows[0]  # non-empty payload

    echoed = (out / "config.ini").read_text(encoding="utf-8")
    first, second, rest = echoed.split("\n", 2)
    assert first == "# seed = 12345"
    assert second == "# config = " + digest
    want = replace(parse_config(cfg_path), out=str(out))
    assert parse_config(rest) == want


def test_cli_rerun_is_byte_identical(tmp_path):
    cfg_path = _write_cfg(tmp_path)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["temporal", "--config", str(cfg_path), "--out", str(out)]) == 0
        outs.append((out / "temporal.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_seed_precedence(tmp_path, monkeypatch):
    cfg_path = _write_cfg(tmp_path)

    def run_seed(extra, env_seed=None):
        out = tmp_path / f"seed-{env_seed}-{'-'.join(extra) or 'none'}"
        if env_seed is None:
            monkeypatch.delenv("STOCH_STOKES_SEED", raising=False)
        else:
            monkeypatch.setenv("STOCH_STOKES_SEED", env_seed)
        rc = main(["infsup", "--config", str(cfg_path), "--out", str(out)] + extra)
        assert rc == 0
        return json.loads((out / "manifest.json").read_text())["seed"]

    assert run_seed([]) == 12345  # from the file
    assert run_seed([], env_seed="222") == 222  # environment beats file
    assert run_seed(["--seed", "333"], env_seed="222") == 333  # flag beats both

    monkeypatch.setenv("STOCH_STOKES_SEED", "not-a-number")
    rc = main(["infsup", "--config", str(cfg_path), "--out", str(tmp_path / "bad")])
    assert rc == 2


def test_cli_infsup_single_gamma_row(tmp_path):
    cfg_path = _write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["infsup", "--config", str(cfg_path), "--out", str(out)]) == 0
    rows = _read_csv_rows(out / "infsup.csv")
    assert len(rows) == 1
    assert rows[0]["statistic"] == "gamma"
    assert 0.1 < float(rows[0]["value"]) < 1.0


def test_cli_isometry(tmp_path):
    cfg_path = _write_cfg(tmp_path)
    out = tmp_path / "out"
    rc = main(
        [
            "isometry",
            "--config",
            str(cfg_path),
            "--out",
            str(out),
            "--samples",
            "500",
        ]
    )
    assert rc == 0
    rows = _read_csv_rows(out / "isometry.csv")
    stats = {r["statistic"]: float(r["value"]) for r in rows}
    assert set(stats) == {"sample_mean", "analytic", "stderr", "z_score", "n_samples"}
    assert stats["n_samples"] == 500
    assert abs(stats["z_score"]) <= 5.0


def test_cli_cavity_artifacts(tmp_path):
    cfg_path = _write_cfg(tmp_path, text=CAVITY_INI)
    out = tmp_path / "out"
    assert main(["cavity", "--config", str(cfg_path), "--out", str(out)]) == 0
    names = ["cavity_mean.vtk"] + [f"cavity_sample_{i}.vtk" for i in range(3)]
    for name in names:
        lines = (out / name).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert "seed=99" in lines[1] and "config=sha256:" in lines[1]
        assert any(line.startswith("POINT_DATA") for line in lines)
        assert any(line.startswith("VECTORS velocity") for line in lines)
        assert any(line.startswith("SCALARS pressure") for line in lines)
    mean = (out / "cavity_mean.vtk").read_text(encoding="utf-8")
    assert "cavity mean |" in mean.splitlines()[1]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"] == ["config.ini"] + names


def test_cli_flag_overrides(tmp_path):
    cfg_path = _write_cfg(tmp_path)
    out = tmp_path / "out"
    rc = main(
        [
            "temporal",
            "--config",
            str(cfg_path),
            "--out",
            str(out),
            "--np",
            "3",
            "--seed",
            "7",
        ]
    )
    assert rc == 0
    rows = _read_csv_rows(out / "temporal.csv")
    level_rows = [r for r in rows if r["study"] == "temporal"]
    assert all(r["n_p"] == "3" and r["seed"] == "7" for r in level_rows)


def test_cli_missing_and_invalid_config(tmp_path, capsys):
    assert main(["temporal", "--config", str(tmp_path / "nope.ini")]) == 2
    bad = _write_cfg(tmp_path, text=TINY_INI.replace("k0 = 1/64", "k0 = 1/7"))
    assert main(["temporal", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "error:" in err


def test_cli_partial_run_recorded_in_manifest(tmp_path, capsys):
    # A study that fails after configuration passes leaves a manifest that
    # says so, with the failure message, and exits nonzero.
    text = TINY_INI.replace(
        "k0 = 1/64", "k0 = 1/64\npairs = 1/32:1/4 1/8:1/4"
    )
    cfg_path = _write_cfg(tmp_path, text=text)
    out = tmp_path / "out"
    rc = main(["balanced", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["partial"] is True
    assert "smallest time step" in manifest["error"]
    assert not (out / "balanced.csv").exists()
    assert "error:" in capsys.readouterr().err
