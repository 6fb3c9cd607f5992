import pytest

from thermoscatter.config import ExperimentConfig, from_dict, load_config
from thermoscatter.errors import ValidationError


def test_defaults_describe_headline():
    cfg = ExperimentConfig().validate()
    assert (cfg.grid.N, cfg.ensemble.M, cfg.packet.k0) == (4096, 4000, 0.2)
    assert (cfg.thermostat.gamma, cfg.thermostat.mu, cfg.thermostat.T) == (1.0, 1.0, 0.0)


def test_hash_tracks_content():
    a = ExperimentConfig()
    b = from_dict({"thermostat": {"gamma": 1.0}})
    assert a.content_hash() == b.content_hash()
    c = from_dict({"thermostat": {"gamma": 2.0}})
    assert a.content_hash() != c.content_hash()


def test_load_file_and_overrides(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('seed = 5\n[grid]\nN = 1024\n[packet]\nk0 = 0.3\n')
    cfg = load_config(p, seed=9)
    assert cfg.seed == 9 and cfg.grid.N == 1024 and cfg.packet.k0 == 0.3


@pytest.mark.parametrize("data", [
    {"thermostat": {"mu": 0.4}},
    {"thermostat": {"gamma": -1.0}},
    {"grid": {"N": 3000}},
    {"ensemble": {"initial": "thermal"}},  # needs an explicit t_end
    {"ensemble": {"initial": "bogus"}},
    {"packet": {"k0": 0.0}},
    {"kind": "plot"},
    {"dispersion": {"type": "tabulated"}},
    {"identities": {"mus": [0.3]}},
    {"colour": "blue"},
    {"grid": 5},
])
def test_invalid_configs(data):
    with pytest.raises(ValidationError):
        from_dict(data).validate()


def test_bad_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[grid\nN = 3")
    with pytest.raises(ValidationError):
        load_config(p)
