"""Scenario-file ingestion (INI-style key-value text) and built-in presets.

The file mirrors the model sections: ``[path_loss]``, ``[noise]``,
``[link]``, and ``[coding]``.  Unknown sections or keys are rejected so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

from .energy_opt import DEFAULT_ENC_ENERGY_PER_BIT_J, ScenarioConfig
from .phy_model import DEEP_TISSUE, NEAR_SURFACE, LinkBudget, NoiseModel

__all__ = [
    "ConfigError",
    "SimSettings",
    "SCENARIO_PRESETS",
    "default_settings",
    "parse_settings",
    "load_settings",
    "render_default_config",
]

SCENARIO_PRESETS = {"deep": DEEP_TISSUE, "near": NEAR_SURFACE}

DEFAULT_BLOCK_BITS = 1024


class ConfigError(ValueError):
    """Scenario file could not be understood."""


@dataclass(frozen=True)
class SimSettings:
    """Parsed scenario plus simulator-only knobs."""

    config: ScenarioConfig
    block_bits: int = DEFAULT_BLOCK_BITS


_PATH_KEYS = {"scenario", "l0_db", "eta", "sigma_chi_db", "d0_m"}
_NOISE_KEYS = {"t0_kelvin", "nf_db", "n0_dbm"}
_LINK_KEYS = {
    "m",
    "bandwidth_hz",
    "frame_bits",
    "alpha_amp",
    "p_sy_w",
    "p_filt_w",
    "p_filr_w",
    "p_lna_w",
    "p_ed_w",
    "p_ifa_w",
    "p_adc_w",
    "t_tr_s",
    "t_frame_s",
    "f0_hz",
}
_CODING_KEYS = {
    "pb_target",
    "e_enc_per_bit_j",
    "e_dec_per_bit_j",
    "chi_percentile",
    "block_bits",
}
_SECTIONS = {
    "path_loss": _PATH_KEYS,
    "noise": _NOISE_KEYS,
    "link": _LINK_KEYS,
    "coding": _CODING_KEYS,
}


def default_settings(scenario: str = "deep", pb_target: float = 1e-3) -> SimSettings:
    if scenario not in SCENARIO_PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r}; use deep or near")
    cfg = ScenarioConfig(path_loss=SCENARIO_PRESETS[scenario], pb_target=pb_target)
    return SimSettings(config=cfg)


def _check_keys(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{section}]; expected one of {sorted(_SECTIONS)}"
            )
        allowed = _SECTIONS[section]
        for key in parser[section]:
            if key not in allowed:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; allowed: {sorted(allowed)}"
                )


def _coerce(section: str, key: str, raw: str):
    try:
        if key in ("m", "frame_bits", "block_bits"):
            return int(float(raw))
        if key == "scenario":
            return raw.strip()
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r} in [{section}]: {raw!r}") from exc


def parse_settings(text: str) -> SimSettings:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse scenario file: {exc}") from exc
    _check_keys(parser)

    path_loss = DEEP_TISSUE
    if parser.has_section("path_loss"):
        sec = parser["path_loss"]
        if "scenario" in sec:
            name = _coerce("path_loss", "scenario", sec["scenario"])
            if name not in SCENARIO_PRESETS:
                raise ConfigError(f"unknown scenario {name!r}; use deep or near")
            path_loss = SCENARIO_PRESETS[name]
        overrides = {
            k: _coerce("path_loss", k, sec[k]) for k in sec if k != "scenario"
        }
        if overrides:
            path_loss = replace(path_loss, **overrides)

    noise = NoiseModel()
    n0_ref_w = None
    if parser.has_section("noise"):
        sec = parser["noise"]
        values = {k: _coerce("noise", k, sec[k]) for k in sec}
        if "n0_dbm" in values:
            n0_ref_w = 1e-3 * 10.0 ** (values.pop("n0_dbm") / 10.0)
        noise = replace(noise, **values)

    link = LinkBudget()
    if parser.has_section("link"):
        sec = parser["link"]
        link = replace(link, **{k: _coerce("link", k, sec[k]) for k in sec})

    coding: dict = {}
    block_bits = DEFAULT_BLOCK_BITS
    if parser.has_section("coding"):
        sec = parser["coding"]
        coding = {k: _coerce("coding", k, sec[k]) for k in sec}
        block_bits = coding.pop("block_bits", DEFAULT_BLOCK_BITS)

    try:
        cfg = ScenarioConfig(
            path_loss=path_loss, noise=noise, link=link, n0_ref_w=n0_ref_w, **coding
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if block_bits < 1:
        raise ConfigError("block_bits must be >= 1")
    return SimSettings(config=cfg, block_bits=block_bits)


def load_settings(path) -> SimSettings:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_settings(fh.read())


def render_default_config(scenario: str = "deep") -> str:
    """Scenario file text carrying every default; also the digest reference
    when a run uses built-in settings."""
    if scenario not in SCENARIO_PRESETS:
        raise ConfigError(f"unknown scenario {scenario!r}; use deep or near")
    pl = SCENARIO_PRESETS[scenario]
    nm = NoiseModel()
    lb = LinkBudget()
    return (
        "[path_loss]\n"
        f"scenario = {scenario}\n"
        f"l0_db = {pl.l0_db}\n"
        f"eta = {pl.eta}\n"
        f"sigma_chi_db = {pl.sigma_chi_db}\n"
        f"d0_m = {pl.d0_m}\n"
        "\n[noise]\n"
        f"t0_kelvin = {nm.t0_kelvin}\n"
        f"nf_db = {nm.nf_db}\n"
        "\n[link]\n"
        f"m = {lb.m}\n"
        f"bandwidth_hz = {lb.bandwidth_hz}\n"
        f"frame_bits = {lb.frame_bits}\n"
        f"alpha_amp = {lb.alpha_amp}\n"
        f"p_sy_w = {lb.p_sy_w}\n"
        f"p_filt_w = {lb.p_filt_w}\n"
        f"p_filr_w = {lb.p_filr_w}\n"
        f"p_lna_w = {lb.p_lna_w}\n"
        f"p_ed_w = {lb.p_ed_w}\n"
        f"p_ifa_w = {lb.p_ifa_w}\n"
        f"p_adc_w = {lb.p_adc_w}\n"
        f"t_tr_s = {lb.t_tr_s}\n"
        f"t_frame_s = {lb.t_frame_s}\n"
        f"f0_hz = {lb.f0_hz}\n"
        "\n[coding]\n"
        "pb_target = 0.001\n"
        f"e_enc_per_bit_j = {DEFAULT_ENC_ENERGY_PER_BIT_J!r}\n"
        "e_dec_per_bit_j = 0.0\n"
        "chi_percentile = 0.0\n"
        f"block_bits = {DEFAULT_BLOCK_BITS}\n"
    )
