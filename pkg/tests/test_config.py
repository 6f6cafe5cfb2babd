import pytest

from vismem.config import ConfigError, RunConfig, dump_config, load_config, parse_config


def test_defaults_round_trip():
    cfg = RunConfig().validate()
    assert parse_config(dump_config(cfg)) == cfg


def test_overrides_and_comments():
    cfg = parse_config(
        """
        # memory
        memory.n = 12          # small
        memory.gamma_w = 0.2
        encoder.resize = 96x72
        encoder.h = 6
        encoder.w = 8
        eval.deltas = 1, 2.5
        online.timing = yes
        paths.labels = labels.csv
        """
    )
    assert cfg.memory.n == 12 and cfg.memory.gamma_w == 0.2
    assert cfg.encoder.resize == (96, 72)
    assert cfg.eval.deltas == (1.0, 2.5)
    assert cfg.online.timing is True
    assert cfg.paths.labels == "labels.csv"
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "memory.size = 3",
        "nothing = 1",
        "memory.n = many",
        "memory.n = 0",
        "memory.gamma_r = -1",
        "eval.deltas = 0.5",
        "encoder.kernel = 4",
        "online.timing = maybe",
        "just words",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config(tmp_path):
    assert load_config(None) == RunConfig()
    (tmp_path / "c.cfg").write_text("memory.seed = 4\n")
    assert load_config(tmp_path / "c.cfg").memory.seed == 4
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
