import pytest

from gaslab.cli import shipped_config
from gaslab.config import EXPERIMENTS, ConfigError, config_hash, dump, load, parse

GOOD = """
[model]
d = 2
beta = 2
N = [64, 128]

[sampler]
sweeps = 3000
burn_in = 1000
seed = 5

[experiment]
name = "gaps"
"""


def test_defaults_and_coercion():
    cfg = parse(GOOD)
    assert cfg["model"]["beta"] == 2.0 and isinstance(cfg["model"]["beta"], float)
    assert cfg["sampler"]["thin"] == 10 and cfg["sampler"]["chains"] == 4
    assert "sigma" not in cfg["sampler"]
    assert cfg["experiment"]["k"] == 1


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_round_trip(name):
    cfg = load(shipped_config(name))
    assert cfg["experiment"]["name"] == name
    again = parse(dump(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_hash_changes_with_content():
    a = parse(GOOD)
    b = parse(GOOD.replace("seed = 5", "seed = 6"))
    assert config_hash(a) != config_hash(b)


@pytest.mark.parametrize("text,line,fragment", [
    (GOOD.replace("beta = 2", "beta = -1"), 4, "beta"),
    (GOOD.replace("d = 2", "d = 5"), 3, "2 or 3"),
    (GOOD.replace("seed = 5", "seed = 5\nbogus = 1"), 11, "unknown field"),
    (GOOD.replace('"gaps"', '"nope"'), 13, "name"),
    (GOOD.replace("sweeps = 3000", "sweeps = 500"), 8, "exceed burn_in"),
    (GOOD.replace("[sampler]", "[sampler"), 7, "syntax"),
    (GOOD + "\n[extra]\nx = 1\n", 15, "unknown section"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse(text, path="cfg.toml")
    assert err.value.line == line
    assert fragment in str(err.value) and str(err.value).startswith(f"cfg.toml:{line}:")


def test_missing_required():
    with pytest.raises(ConfigError, match="sweeps"):
        parse(GOOD.replace("sweeps = 3000\n", ""))
