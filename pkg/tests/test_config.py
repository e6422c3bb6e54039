import json
import math

import pytest

from kerrcat.config import (
    ConfigError,
    KEYS,
    MissingKeyError,
    ParamSet,
    UnitMismatchError,
    UnknownKeyError,
    full_key,
    parse_config,
    parse_config_text,
)
from kerrcat.constants import MHZ, NS


def test_defaults_convert_to_si():
    ps = ParamSet()
    assert ps.angular("g_over_2pi") == pytest.approx(2 * math.pi * 10 * MHZ)
    assert ps.seconds("t_f") == pytest.approx(16 * NS)
    assert ps.seconds_list("t_f_list") == pytest.approx([8 * NS, 16 * NS, 30 * NS, 60 * NS])
    assert ps.get("kpo_cutoff") == 30


def test_every_key_has_a_unit_or_is_dimensionless():
    for base, spec in KEYS.items():
        assert full_key(base).endswith(spec.unit) if spec.unit else full_key(base) == base


def test_unit_mismatch_and_unknown_keys():
    ps = ParamSet()
    with pytest.raises(UnitMismatchError, match="g_over_2pi_mhz"):
        ps.set("g_over_2pi_ghz", "0.01")
    with pytest.raises(UnitMismatchError):
        ps.set("t_f", "16")
    with pytest.raises(UnknownKeyError):
        ps.set("frobnicate", "1")
    with pytest.raises(ConfigError):
        ps.set("kpo_cutoff", "thirty")


def test_missing_value_names_key_and_unit():
    with pytest.raises(MissingKeyError, match=r"alpha_max.*dimensionless"):
        ParamSet().get("alpha_max")
    with pytest.raises(MissingKeyError, match=r"t_end_ns.*ns"):
        ParamSet().get("t_end")


def test_parse_text_with_comments():
    raw = parse_config_text("# header\nt_f_ns = 30  # gate\nalpha_max = 0.3\n")
    assert raw == {"t_f_ns": "30", "alpha_max": "0.3"}
    with pytest.raises(ConfigError):
        parse_config_text("[section]\nx = 1\n")


def test_parse_file_overrides_and_validation(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa_over_2pi_khz = 20\nt_f_ns = 40\n")
    ps = parse_config(cfg, ["t_f_ns=60"])
    assert ps.seconds("t_f") == pytest.approx(60 * NS)
    assert ps.angular("kappa_over_2pi") == pytest.approx(2 * math.pi * 20e3)
    with pytest.raises(ConfigError):
        parse_config(cfg, ["alpha_min=2"])
    with pytest.raises(ConfigError):
        parse_config(cfg, ["no_equals_sign"])
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.cfg")


def test_manifest_round_trip(tmp_path):
    ps = parse_config(None, ["alpha_max=0.4", "t_f_ns=20"])
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"config": ps.as_file_dict()}))
    again = parse_config(manifest)
    assert again.as_file_dict() == ps.as_file_dict()
