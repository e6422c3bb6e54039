"""Run configuration: unit-suffixed ``key = value`` text files.

Every key carries its unit in the name (``g_over_2pi_mhz``, ``t_f_ns``), so a
value can never be read in the wrong unit. Frequencies are given as f/2pi and
converted to rad/s; times in ns are converted to seconds.
"""

from __future__ import annotations

import configparser
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .constants import GHZ, KHZ, MHZ, NS, PLANCK, TWO_PI


class ConfigError(ValueError):
    """Malformed configuration (usage error)."""


class UnknownKeyError(ConfigError):
    pass


class UnitMismatchError(ConfigError):
    pass


class MissingKeyError(ConfigError):
    pass


@dataclass(frozen=True)
class KeySpec:
    unit: str  # unit suffix written in the key ("" for dimensionless)
    default: object
    kind: type = float
    description: str = ""


# base name -> spec; the full key is base + "_" + unit (or base alone when dimensionless)
KEYS: dict[str, KeySpec] = {
    "kerr_over_2pi": KeySpec("mhz", 20.0, description="KPO Kerr coefficient K/2pi"),
    "pump_over_2pi": KeySpec("mhz", 80.0, description="two-photon drive p/2pi"),
    "chi_over_2pi": KeySpec("mhz", 10.0, description="coupler Kerr chi/2pi"),
    "g_over_2pi": KeySpec("mhz", 10.0, description="KPO-coupler coupling g/2pi"),
    "kappa_over_2pi": KeySpec("khz", 0.0, description="single-photon loss kappa/2pi"),
    "alpha_min": KeySpec("", 0.04, description="coupler displacement with coupling off"),
    "alpha_max": KeySpec("", None, description="peak coupler displacement of the schedule"),
    "t_f": KeySpec("ns", 16.0, description="gate time"),
    "t_f_list": KeySpec("ns", "8,16,30,60", str, "gate times for optimize-alpha"),
    "gate_t_f_list": KeySpec("ns", "", str, "gate times for rzz-gate (empty: t_f_ns alone)"),
    "target_theta": KeySpec("rad", -math.pi / 2, description="gate rotation angle"),
    "t_end": KeySpec("ns", None, description="end of the idle-state run"),
    "t_step": KeySpec("ns", 0.05, description="sample spacing of the idle-state run"),
    "t_samples": KeySpec("ns", "", str, "explicit sample times (overrides t_end/t_step)"),
    "model": KeySpec("", "I", str, "circuit model for the idle-state run: I or II"),
    "kpo_cutoff": KeySpec("", 30, int, "KPO Fock cutoff before eigen-truncation"),
    "kpo_keep_dim": KeySpec("", 6, int, "retained KPO eigenstates (state-vector runs)"),
    "coupler_cutoff": KeySpec("", 10, int, "coupler Fock dimension (state-vector gate runs)"),
    "idle_coupler_cutoff": KeySpec("", 4, int, "coupler Fock dimension (state-vector idle runs)"),
    "dm_kpo_keep_dim": KeySpec("", 4, int, "retained KPO eigenstates (density-matrix runs)"),
    "dm_coupler_cutoff": KeySpec("", 4, int, "coupler Fock dimension (density-matrix gate runs)"),
    "dm_idle_coupler_cutoff": KeySpec("", 3, int, "coupler Fock dimension (density-matrix idle runs)"),
    "rtol": KeySpec("", 1e-9, description="integrator relative tolerance"),
    "atol": KeySpec("", 1e-12, description="integrator absolute tolerance"),
    "preview_points": KeySpec("", 201, int, "samples in schedule-preview"),
    "c": KeySpec("pf", 1.1, description="shunt capacitance"),
    "c_tilde": KeySpec("ff", 2.0, description="coupling capacitance"),
    "ej_kpo_over_h": KeySpec("ghz", 800.0, description="KPO SQUID junction energy"),
    "ej_c1_over_h": KeySpec("ghz", 660.0, description="coupler-1 SQUID junction energy"),
    "ej_c2_over_h": KeySpec("ghz", 444.69, description="coupler-2 SQUID junction energy"),
    "el_over_h": KeySpec("ghz", 0.0, description="inductive cross-link energy (model I)"),
    "phi_kpo": KeySpec("rad", math.pi / 2, description="KPO flux bias"),
    "phi_c1": KeySpec("rad", 0.0, description="coupler-1 flux bias"),
    "phi_c2": KeySpec("rad", 0.0, description="coupler-2 flux bias"),
    "epsilon_p": KeySpec("", 7e-3, description="KPO pump amplitude"),
    "circuit_model": KeySpec("", "II", str, "circuit-derive model: I or II"),
}

UNITS = {"thz", "ghz", "mhz", "khz", "hz", "ns", "us", "ms", "ps", "s", "rad", "deg", "pf", "ff", "nf", "f", "j", "ev"}


def full_key(base: str) -> str:
    unit = KEYS[base].unit
    return f"{base}_{unit}" if unit else base


def unit_label(base: str) -> str:
    return KEYS[base].unit or "dimensionless"


_FULL = {full_key(b): b for b in KEYS}


def _split_unit(key: str) -> tuple[str, str]:
    m = re.fullmatch(r"(.+?)_([a-z]+)", key)
    if m and m.group(2) in UNITS:
        return m.group(1), m.group(2)
    return key, ""


def _convert(base: str, raw: str):
    spec = KEYS[base]
    text = raw.strip()
    if spec.kind is str:
        return text
    if text == "":
        return None
    try:
        if spec.kind is int:
            return int(text)
        if spec.kind is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{full_key(base)}: cannot parse {raw!r} as {spec.kind.__name__}") from exc


class ParamSet:
    """Resolved configuration values in their file units, with SI accessors."""

    def __init__(self, values: dict | None = None):
        self.values = {b: spec.default for b, spec in KEYS.items()}
        self.explicit: set[str] = set()
        for key, raw in (values or {}).items():
            self.set(key, raw)

    def set(self, key: str, raw) -> None:
        key = key.strip().lower()
        if key in _FULL:
            base = _FULL[key]
        else:
            stem, unit = _split_unit(key)
            if stem in KEYS:
                raise UnitMismatchError(
                    f"{key}: unit '{unit or 'none'}' does not match expected {full_key(stem)}"
                )
            if key in KEYS and KEYS[key].unit:
                raise UnitMismatchError(f"{key}: missing unit suffix, expected {full_key(key)}")
            raise UnknownKeyError(f"unknown configuration key {key!r}")
        value = _convert(base, raw) if isinstance(raw, str) else raw
        self.values[base] = value
        self.explicit.add(base)

    def get(self, base: str):
        value = self.values[base]
        if value is None:
            raise MissingKeyError(f"missing value for {full_key(base)} (unit: {unit_label(base)})")
        return value

    def get_or(self, base: str, fallback):
        value = self.values[base]
        return fallback if value is None else value

    def angular(self, base: str) -> float:
        scale = {"mhz": MHZ, "khz": KHZ, "ghz": GHZ}[KEYS[base].unit]
        return TWO_PI * float(self.get(base)) * scale

    def seconds(self, base: str) -> float:
        return float(self.get(base)) * NS

    def seconds_list(self, base: str) -> list[float]:
        text = str(self.get(base)).strip()
        if not text:
            return []
        return [float(v) * NS for v in text.split(",")]

    def joules(self, base: str) -> float:
        return float(self.get(base)) * PLANCK * GHZ

    def as_file_dict(self) -> dict:
        return {full_key(b): v for b, v in self.values.items()}

    def validate(self) -> None:
        for base in ("kerr_over_2pi", "pump_over_2pi"):
            if float(self.get(base)) <= 0:
                raise ConfigError(f"{full_key(base)} must be positive")
        if float(self.get("kappa_over_2pi")) < 0:
            raise ConfigError("kappa_over_2pi_khz must be non-negative")
        if not 0 < float(self.get("alpha_min")) < 1:
            raise ConfigError("alpha_min must lie in (0, 1)")
        if self.values["model"] not in ("I", "II"):
            raise ConfigError("model must be I or II")
        if self.values["circuit_model"] not in ("I", "II"):
            raise ConfigError("circuit_model must be I or II")


def parse_config_text(text: str) -> dict:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        interpolation=None,
    )
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    if len(parser.sections()) != 1:
        raise ConfigError("section headers are not supported")
    return dict(parser["run"])


def parse_config(path: str | Path | None, overrides: list[str] = ()) -> ParamSet:
    """Read a config file (or a run manifest ``.json``) and apply ``key=value`` overrides."""
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        if path.suffix == ".json":
            raw = {k: ("" if v is None else v) for k, v in json.loads(path.read_text())["config"].items()}
        else:
            raw = parse_config_text(path.read_text())
    params = ParamSet()
    for key, value in raw.items():
        params.set(key, value if not isinstance(value, (int, float)) else value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        params.set(key, value)
    params.validate()
    return params
