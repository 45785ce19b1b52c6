import pytest

from walldiff.config import RunConfig, load_config, parse_list, split_overrides
from walldiff.errors import SchemaError


def test_defaults_round_trip_through_ini(tmp_path):
    cfg = RunConfig()
    cfg.write(tmp_path / "c.ini")
    again = load_config(tmp_path / "c.ini")
    assert again == cfg
    text = (tmp_path / "c.ini").read_text()
    for section in ("[problem]", "[solver]", "[rom]", "[oed]", "[estimate]"):
        assert section in text
    assert "p_apr = 2.8e-07" in text and "polish = true" in text


def test_file_then_overrides(tmp_path):
    (tmp_path / "c.ini").write_text("[solver]\nn_nodes = 40\n[estimate]\nmodel = lom\n")
    cfg = load_config(tmp_path / "c.ini", [("solver", "n_nodes", "50"), ("rom", "polish", "no")])
    assert cfg.solver.n_nodes == 50 and cfg.estimate.model == "lom" and cfg.rom.polish is False


def test_optional_values():
    cfg = load_config(None, [("problem", "T_ref", "40"), ("oed", "start_days", "none")])
    assert cfg.problem.T_ref == 40.0 and cfg.oed.start_days is None


@pytest.mark.parametrize("section,key", [("solver", "nodes"), ("mystery", "x")])
def test_unknown_keys_rejected(section, key):
    with pytest.raises(SchemaError, match="unknown config"):
        load_config(None, [(section, key, "1")])


@pytest.mark.parametrize("key,value", [("solver.n_nodes", "many"), ("solver.dt", "-1"),
                                       ("rom.order", "0"), ("estimate.model", "gp"),
                                       ("estimate.lower", "1e-4"), ("oed.initial", "cold"),
                                       ("rom.polish", "maybe")])
def test_bad_values_rejected(key, value):
    section, _, k = key.partition(".")
    with pytest.raises(SchemaError, match=k):
        load_config(None, [(section, k, value)])


def test_missing_config_file(tmp_path):
    with pytest.raises(SchemaError, match="nope.ini"):
        load_config(tmp_path / "nope.ini")


def test_split_overrides_both_spellings():
    rest, found = split_overrides(["learn", "--rom.order", "5", "--seed", "1", "--solver.dt=15"])
    assert rest == ["learn", "--seed", "1"]
    assert found == [("rom", "order", "5"), ("solver", "dt", "15")]
    with pytest.raises(SchemaError):
        split_overrides(["--rom.order"])


def test_parse_list():
    assert parse_list("1, 2;3,") == [1.0, 2.0, 3.0]
    assert parse_list("4,5", int) == [4, 5]
