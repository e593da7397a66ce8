import pytest

from squentropy_lab.config import (
    BUILTIN,
    DEFAULTS,
    ConfigError,
    dump_config,
    load_config,
    parse_config,
    resolve,
)


def test_builtin_configs_load():
    for name in BUILTIN:
        values = load_config(name)
        assert values["loss"]
    tab = load_config("tabular")
    assert (tab["lr"], tab["weight_decay"], tab["epochs"], tab["hidden"]) == (0.01, 5e-4, 400, (64, 128, 64))
    assert (tab["t"], tab["M"]) == (1.0, 5.0)
    assert load_config("spiral")["hidden"] == (12, 12, 12)


def test_parse_comments_and_types():
    v = parse_config("# run\nlr = 0.5  # fast\nbatch_size = full\nshuffle = no\nhidden = 3, 4\n")
    assert v == {"lr": 0.5, "batch_size": "full", "shuffle": False, "hidden": (3, 4)}


@pytest.mark.parametrize("text,match", [("lr 0.1", "key = value"), ("speed = 1", "unknown key"), ("epochs = x", "epochs")])
def test_parse_errors_carry_line(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config("\n" + text, "f.cfg")


def test_overrides_win_and_none_means_unset():
    v = resolve({"lr": 0.2, "epochs": 3}, {"lr": 0.3, "epochs": None})
    assert v["lr"] == 0.3 and v["epochs"] == 3 and v["seed"] == DEFAULTS["seed"]


def test_dump_round_trip():
    v = resolve(load_config("tabular"))
    assert resolve(parse_config(dump_config(v))) == v


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "nope.cfg"))
