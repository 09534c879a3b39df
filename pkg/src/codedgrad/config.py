"""Typed JSON configuration for the command-line runner.

Each subcommand has a schema of ``key -> (type, default)``. Without a config
file the defaults apply; a config file must spell out every key of the
subcommand (it is meant to be a complete experiment description, and the run
manifest written to the output directory is one). ``--set key=value`` always
wins.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import ConfigError

ALL_SCHEMES = ["MCC", "UC_MMC", "CPGC"]

_STRAGGLER = {"mu": (float, 10.0), "alpha": (float, 0.01)}

SCHEMAS: dict[str, dict[str, tuple[type, Any]]] = {
    "tables": {},
    "analyze": {
        "M": (int, 4),
        "K": (int, 4),
        "r": (int, 2),
        **_STRAGGLER,
        "schemes": (list, ALL_SCHEMES),
        "thresholds": (list, [4, 3]),
        "t_max": (float, 0.6),
        "t_points": (int, 50),
        "eval_points": (str, "powers_of_two"),
    },
    "simulate": {
        "M": (int, 20),
        "K": (int, 20),
        "r": (int, 3),
        **_STRAGGLER,
        "schemes": (list, ALL_SCHEMES),
        "tolerance_grid": (list, [0.0, 0.05, 0.10, 0.15, 0.20, 0.25]),
        "trials": (int, 10_000),
        "seed": (int, 0),
        "chunk_size": (int, 4096),
        "threads": (int, 1),
        "eval_points": (str, "linear"),
        "trace": (bool, False),
    },
    "gd": {
        "scheme": (str, "CPGC"),
        "M": (int, 20),
        "K": (int, 20),
        "r": (int, 3),
        **_STRAGGLER,
        "tolerance": (float, 0.05),
        "L": (int, 40),
        "N": (int, 200),
        "noise": (float, 0.01),
        "data_seed": (int, 0),
        "seed": (int, 0),
        "iterations": (int, 50),
        "eta": (float, 0.0),  # 0 selects 1 / lambda_max(W / N)
        "eval_points": (str, "linear"),
    },
    "dump-schedule": {
        "scheme": (str, "CPGC"),
        "M": (int, 20),
        "K": (int, 20),
        "r": (int, 3),
        "eval_points": (str, "linear"),
    },
}

# type names as they appear in error messages
_TYPE_NAMES = {int: "an integer", float: "a number", str: "a string", list: "a list", bool: "a boolean"}
_RUNTIME_ONLY = {"threads"}  # never changes results


def _coerce(key: str, typ: type, value: Any) -> Any:
    name = _TYPE_NAMES[typ]
    if typ is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
            return value.lower() in ("true", "1")
    elif typ is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
    elif typ is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
    elif typ is str:
        if isinstance(value, str):
            return value
    elif typ is list:
        if isinstance(value, list):
            return value
        if isinstance(value, str):
            text = value.strip()
            if text.startswith("["):
                try:
                    return json.loads(text)
                except json.JSONDecodeError:
                    pass
            return [_scalar(x) for x in text.split(",") if x.strip()]
    raise ConfigError(f"config key '{key}' expects {name}, got {value!r}")


def _scalar(text: str) -> Any:
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def load_file(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    # a run manifest wraps the resolved config
    if "config" in data and "subcommand" in data:
        data = data["config"]
    return data


def resolve(subcommand: str, file_data: dict | None, overrides: dict[str, Any]) -> dict:
    schema = SCHEMAS[subcommand]
    cfg: dict[str, Any] = {}
    if file_data is not None:
        for key in file_data:
            if key not in schema:
                raise ConfigError(f"unknown config key '{key}' for '{subcommand}'")
        for key, (typ, _) in schema.items():
            if key not in file_data:
                raise ConfigError(
                    f"missing config key '{key}' (expected {_TYPE_NAMES[typ]}) for '{subcommand}'"
                )
            cfg[key] = _coerce(key, typ, file_data[key])
    else:
        cfg = {key: default for key, (_, default) in schema.items()}
    for key, value in overrides.items():
        if key not in schema:
            raise ConfigError(f"unknown config key '{key}' for '{subcommand}'")
        cfg[key] = _coerce(key, schema[key][0], value)
    return cfg


def parse_overrides(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value
    return out


def manifest(subcommand: str, cfg: dict) -> dict:
    return {"subcommand": subcommand, "config": cfg}


def result_fields(cfg: dict) -> dict:
    """Config entries that influence outputs."""
    return {k: v for k, v in cfg.items() if k not in _RUNTIME_ONLY}
