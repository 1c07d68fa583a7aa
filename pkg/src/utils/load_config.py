#!/usr/bin/env python3
"""Load run settings from config.yaml"""

import copy
import logging
import os
from dataclasses import dataclass, fields

import yaml
from dotenv import load_dotenv

load_dotenv()

CONFIG_ENV_VAR = "GIBBS_SAMPLER_CONFIG"

DEFAULT_CONFIG = {
    "commands": {
        "gen": True,
        "sample": True,
        "verify": True,
        "logz": True,
        "walk": True,
    },
    "sampling": {
        "epsilon": 0.1,
        "delta": 0.01,
        "workers": 1,
        "max_redraws": 1000,
    },
    "walk": {
        "schedule": "calibrated",
        "c1": None,
        "c2": None,
        "eta_ratio": 0.01,
        "move_probability": 0.01,
        "ratio_warning": 10.0,
        "steps_per_epoch": None,
        "max_epochs": None,
    },
    "cluster": {
        "w_max": 8,
        "ursell_max_vertices": 9,
        "max_clusters": 2_000_000,
    },
    "oracle": {
        "max_sites": 12,
    },
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
    },
    "debug": False,
}


def resolve_config_path(config_path: str | None = None) -> str:
    """Explicit path, then $GIBBS_SAMPLER_CONFIG, then ./config.yaml"""
    if config_path:
        return config_path
    return os.environ.get(CONFIG_ENV_VAR, "config.yaml")


def load_config(config_path: str | None = None) -> dict:
    """Load configuration from config.yaml, section by section over the defaults"""
    config = copy.deepcopy(DEFAULT_CONFIG)
    path = resolve_config_path(config_path)

    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            loaded_config = yaml.safe_load(f)
        if loaded_config:
            for key, value in loaded_config.items():
                if isinstance(value, dict) and isinstance(config.get(key), dict):
                    config[key].update(value)
                else:
                    config[key] = value

    return config


@dataclass(frozen=True)
class SamplingSettings:
    epsilon: float = 0.1
    delta: float = 0.01
    workers: int = 1
    max_redraws: int = 1000


@dataclass(frozen=True)
class WalkSettings:
    schedule: str = "calibrated"
    c1: float | None = None
    c2: float | None = None
    eta_ratio: float = 0.01
    move_probability: float = 0.01
    ratio_warning: float = 10.0
    steps_per_epoch: int | None = None
    max_epochs: int | None = None


@dataclass(frozen=True)
class ClusterSettings:
    w_max: int = 8
    ursell_max_vertices: int = 9
    max_clusters: int = 2_000_000


@dataclass(frozen=True)
class OracleSettings:
    max_sites: int = 12


@dataclass(frozen=True)
class Settings:
    sampling: SamplingSettings
    walk: WalkSettings
    cluster: ClusterSettings
    oracle: OracleSettings


def _section(cls, values: dict | None):
    # Unknown keys stay in the dict but are not settings
    known = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in (values or {}).items() if k in known})


def get_settings(config: dict) -> Settings:
    """Typed view of the numeric sections of a loaded config"""
    return Settings(
        sampling=_section(SamplingSettings, config.get("sampling")),
        walk=_section(WalkSettings, config.get("walk")),
        cluster=_section(ClusterSettings, config.get("cluster")),
        oracle=_section(OracleSettings, config.get("oracle")),
    )


def setup_logging(config: dict, verbose: bool = False) -> None:
    """Configure the root logger once from the logging section"""
    log_config = config.get("logging", {})
    level = log_config.get("level", "INFO")
    if verbose or config.get("debug", False):
        level = "DEBUG"
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=log_config.get("format", DEFAULT_CONFIG["logging"]["format"]),
    )


if __name__ == "__main__":
    config = load_config()
    settings = get_settings(config)

    print("Configuration loaded:")
    print(f"  Path: {resolve_config_path()}")
    print(f"  Walk: {settings.walk}")
    print(f"  Cluster: {settings.cluster}")
    print(f"  Sampling: {settings.sampling}")
