"""Config defaults, the key = value file format, and override precedence."""

import pytest

from segrelax.config import Config, load_config, parse_config_text
from segrelax.errors import InputError


def test_defaults():
    cfg = Config()
    assert cfg.edge_constant == 1e-5
    assert cfg.boundary_weight == 10.0
    assert cfg.threshold == 0.08
    assert cfg.epsilon is None
    assert cfg.superpixels == 800
    assert cfg.compactness == 0.2
    assert cfg.lp_tol == 1e-7
    assert cfg.lp_max_iter == 200
    assert cfg.session_ttl == 1800.0


def test_parse_basic_file():
    cfg = parse_config_text(
        """
        # solver setup
        superpixels = 300     # inline comment
        threshold = 0.25

        epsilon = 1e-6
        """
    )
    assert cfg.superpixels == 300
    assert cfg.threshold == 0.25
    assert cfg.epsilon == 1e-6
    assert cfg.boundary_weight == 10.0   # untouched default


def test_aliases_map_to_long_names():
    cfg = parse_config_text("c = 0.5\nlambda = 3.0\n")
    assert cfg.edge_constant == 0.5
    assert cfg.boundary_weight == 3.0


def test_auto_epsilon_survives_merge():
    base = parse_config_text("epsilon = 0.125")
    assert base.epsilon == 0.125
    cfg = parse_config_text("epsilon = auto", base)
    assert cfg.epsilon is None


def test_integer_keys_coerced():
    cfg = parse_config_text("superpixels = 2e2\nlp_max_iter = 50.0\n")
    assert cfg.superpixels == 200 and isinstance(cfg.superpixels, int)
    assert cfg.lp_max_iter == 50 and isinstance(cfg.lp_max_iter, int)


def test_quoted_values_accepted():
    cfg = parse_config_text('threshold = "0.5"\n')
    assert cfg.threshold == 0.5


def test_unknown_key_reports_line():
    with pytest.raises(InputError, match="line 2.*mystery"):
        parse_config_text("threshold = 0.5\nmystery = 1\n")


def test_malformed_line_reports_line():
    with pytest.raises(InputError, match="line 1"):
        parse_config_text("just some words\n")


def test_bad_value_rejected():
    with pytest.raises(InputError, match="threshold"):
        parse_config_text("threshold = fast\n")


def test_validation_runs_on_parsed_values():
    with pytest.raises(InputError, match="threshold"):
        parse_config_text("threshold = 1.5\n")
    with pytest.raises(InputError, match="edge_constant"):
        parse_config_text("c = 0\n")
    with pytest.raises(InputError, match="superpixels"):
        parse_config_text("superpixels = 0\n")
    with pytest.raises(InputError, match="epsilon"):
        parse_config_text("epsilon = -1\n")


def test_override_skips_none():
    cfg = Config().override(threshold=0.5, superpixels=None)
    assert cfg.threshold == 0.5
    assert cfg.superpixels == 800
    assert Config().override() == Config()


def test_flag_over_file_precedence():
    file_cfg = parse_config_text("threshold = 0.3\nsuperpixels = 100\n")
    final = file_cfg.override(threshold=0.9)
    assert final.threshold == 0.9        # flag wins
    assert final.superpixels == 100      # file value kept


def test_load_config_from_disk(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("superpixels = 64\n")
    assert load_config(path).superpixels == 64
    with pytest.raises(InputError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")
