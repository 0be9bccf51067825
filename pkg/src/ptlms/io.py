"""Flat experiment configs, CSV data files and run manifests."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import yaml

from .gains import GainRule, Variant
from .harness import ExperimentConfig, SweepRow
from .theory import DEFAULT_MAX_L


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_RULE_PARAMS = ("rho", "delta", "alpha", "delta_i", "epsilon")

#: Optional keys and the defaults echoed into every manifest.
DEFAULTS = {
    "rho": 0.01,
    "delta": 0.01,
    "alpha": 0.0,
    "delta_i": 0.01,
    "epsilon": 1000.0,
    "sigma_u2": 1.0,
    "sigma_v2": 0.01,
    "n_iters": 1000,
    "n_runs": 200,
    "seed": 0,
    "system_seed": 0,
    "regressor_model": "tapped_delay_line",
    "tail_fraction": 0.1,
    "theory_max_L": DEFAULT_MAX_L,
    "n_iters_mu_product": 0.0,
    "mu_values": [],
}
REQUIRED = ("L", "n_active", "mu", "rules")

_INT_KEYS = {"L", "n_active", "n_iters", "n_runs", "seed", "system_seed", "theory_max_L"}
_FLOAT_KEYS = {"mu", "rho", "delta", "alpha", "delta_i", "epsilon", "sigma_u2", "sigma_v2",
               "tail_fraction", "n_iters_mu_product"}


def load_config(path) -> dict:
    """Read a flat YAML config, or the config snapshot stored in a manifest.

    Returns a fully resolved dict: every optional key is filled from
    ``DEFAULTS`` and per-rule step sizes ``mu_<Rule>`` are kept.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        raw = json.loads(text)
        raw = raw.get("config", raw)
    else:
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a flat mapping of keys to values")
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    raw = dict(raw)
    if "rule" in raw:
        if "rules" in raw:
            raise ConfigError("rule: give either 'rule' or 'rules', not both")
        raw["rules"] = [raw.pop("rule")]
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"{key}: missing required key")
    cfg = dict(DEFAULTS)
    mu_overrides = {}
    for key, value in raw.items():
        if key.startswith("mu_") and key != "mu_values":
            mu_overrides[key] = value
        elif key not in DEFAULTS and key not in REQUIRED:
            raise ConfigError(f"{key}: unknown key")
        cfg[key] = value

    for key in _INT_KEYS:
        cfg[key] = _coerce(key, cfg[key], int)
    for key in _FLOAT_KEYS:
        cfg[key] = _coerce(key, cfg[key], float)
    rules = cfg["rules"]
    if isinstance(rules, str):
        rules = [r.strip() for r in rules.split(",") if r.strip()]
    if not isinstance(rules, list) or not rules:
        raise ConfigError("rules: expected a non-empty list of rule names")
    valid = [v.value for v in Variant]
    for r in rules:
        if r not in valid:
            raise ConfigError(f"rules: unknown rule {r!r}; choose from {valid}")
    cfg["rules"] = list(rules)
    for key, value in mu_overrides.items():
        if key[3:] not in valid:
            raise ConfigError(f"{key}: unknown rule {key[3:]!r}")
        cfg[key] = _coerce(key, value, float)
    mus = cfg["mu_values"]
    if isinstance(mus, str):
        mus = parse_mu_list(mus)
    cfg["mu_values"] = [_coerce("mu_values", m, float) for m in mus]
    # construct once so that range errors surface with the field name
    for name in cfg["rules"]:
        experiment_config(cfg, name)
    return cfg


def _coerce(key, value, typ):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {value!r}")
    try:
        out = typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {value!r}") from None
    if typ is int and out != value and not (isinstance(value, float) and value.is_integer()):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if typ is float and not math.isfinite(out):
        raise ConfigError(f"{key}: expected a finite number, got {value!r}")
    return out


def parse_mu_list(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"mu: cannot parse step-size list {text!r}") from None


def gain_rule(cfg: dict, name: str) -> GainRule:
    try:
        return GainRule(name, **{k: cfg[k] for k in _RULE_PARAMS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def experiment_config(cfg: dict, name: str) -> ExperimentConfig:
    mu = cfg.get(f"mu_{name}", cfg["mu"])
    try:
        return ExperimentConfig(
            L=cfg["L"], n_active=cfg["n_active"], mu=mu, rule=gain_rule(cfg, name),
            sigma_u2=cfg["sigma_u2"], sigma_v2=cfg["sigma_v2"], n_iters=cfg["n_iters"],
            n_runs=cfg["n_runs"], seed=cfg["seed"], regressor_model=cfg["regressor_model"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def fmt(x) -> str:
    """Six significant digits; NaN written as ``nan``."""
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.6g}"


def write_curve_csv(path, values) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "msd_db"])
        for n, v in enumerate(values):
            w.writerow([n, fmt(v)])
    return path


def read_curve_csv(path):
    """Return ``(iterations, msd_db)`` lists."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [int(r["iteration"]) for r in rows], [float(r["msd_db"]) for r in rows]


SWEEP_COLUMNS = ["mu", "sim_msd_db", "theory_msd_db", "stable"]


def write_sweep_csv(path, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([fmt(r.mu), fmt(r.sim_msd_db), fmt(r.theory_msd_db),
                        "true" if r.stable else "false"])
    return path


def read_sweep_csv(path) -> list[SweepRow]:
    with Path(path).open(newline="") as fh:
        return [SweepRow(float(r["mu"]), float(r["sim_msd_db"]), float(r["theory_msd_db"]),
                         r["stable"] == "true") for r in csv.DictReader(fh)]
