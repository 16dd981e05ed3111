import subprocess
import sys

import pytest

from fraclab import cli
from fraclab.config import DEFAULTS, ConfigError, config_hash, load_config

FAST = ["--set", "kernel.modes_1d=64", "--set", "kernel.modes_2d=16", "--set", "poisson.coarse=16",
        "--set", "poisson.fine=32", "--set", "born.modes=12"]


def test_defaults_load():
    cfg = load_config()
    assert cfg == DEFAULTS


def test_override_parses_yaml_values():
    cfg = load_config(overrides=["kernel.tol=1e-9", "cgo.h=[0.3, 0.15]"])
    assert cfg["kernel"]["tol"] == 1e-9
    assert cfg["cgo"]["h"] == [0.3, 0.15]


def test_potential_override_keeps_other_keys():
    cfg = load_config(overrides=["born.potential.amplitude=0.5"])
    assert cfg["born"]["potential"]["center"] == DEFAULTS["born"]["potential"]["center"]


@pytest.mark.parametrize("override", ["kernel.nope=1", "kernel.tol=abc", "s=0.3",
                                      "stability.weightings=[h1]", "born.potential.family=x"])
def test_invalid_overrides_rejected(override):
    with pytest.raises(ConfigError):
        load_config(overrides=[override])


def test_file_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 3\ngauge:\n  samples: 5\n  tol: 1e-6\n")
    cfg = load_config(p)
    assert cfg["seed"] == 3 and cfg["gauge"]["samples"] == 5 and cfg["gauge"]["tol"] == 1e-6
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_hash_ignores_output_directory():
    assert config_hash(load_config(output="a")) == config_hash(load_config(output="b"))
    assert config_hash(load_config(seed=1)) != config_hash(load_config(seed=2))


def test_solve_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["solve", "--quiet", "--out", str(a)] + FAST) == 0
    assert cli.main(["solve", "--quiet", "--out", str(b)] + FAST) == 0
    files = sorted(p.name for p in a.iterdir())
    assert len(files) == 4
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    text = (a / files[0]).read_text()
    assert text.startswith("# fraclab ") and "config sha256" in text


def test_failing_tolerance_exits_one(tmp_path):
    args = ["solve", "--quiet", "--out", str(tmp_path)] + FAST + ["--set", "ibp.tol=1e-30"]
    assert cli.main(args) == 1


def test_bad_config_exits_two(tmp_path):
    assert cli.main(["cgo", "--out", str(tmp_path), "--set", "cgo.order=1"]) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "fraclab.cli", "gauge", "--set", "gauge.bogus=1"],
                         capture_output=True, text=True)
    assert out.returncode == 2
    assert "configuration error" in out.stderr
