"""Run configuration: a YAML file merged with command-line overrides.

Schema (every section and key optional; unknown keys are rejected)::

    network:            # NetworkConfig fields
      blocks: [[32, 32], [64, 64]]
      hidden: [256]
    train:              # TrainConfig fields
      epochs: 20
      seed: 1
      augment: true
    eval:
      profile: small    # or large
      families: [gaussian-noise, salt-pepper, speckle, gaussian-blur, motion-blur]
      seed: 0

Command-line flags win over the file. The resolved result is a plain dict
that gets embedded verbatim in every manifest the CLI writes.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import yaml

from .distortions import KINDS, Kind, get_profile
from .nn import NetworkConfig
from .train import TrainConfig

EVAL_DEFAULTS = {"profile": "small", "families": [k.value for k in KINDS], "seed": 0}


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def load_file(path) -> dict:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must be a mapping")
    return data


def resolve(file_config: dict, overrides: dict) -> dict:
    """Merge ``overrides`` (section -> {key: value}, None meaning unset) over
    the file config and defaults, validate, and return the resolved dict."""
    unknown = set(file_config) - {"network", "train", "eval"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")

    merged = {}
    for section, cls_fields, defaults in (
        ("network", _fields(NetworkConfig), NetworkConfig().to_dict()),
        ("train", _fields(TrainConfig), TrainConfig().to_dict()),
        ("eval", set(EVAL_DEFAULTS), dict(EVAL_DEFAULTS)),
    ):
        values = dict(defaults)
        for source in (file_config.get(section) or {}, overrides.get(section) or {}):
            bad = set(source) - cls_fields
            if bad:
                raise ValueError(f"unknown {section} keys: {sorted(bad)}")
            values.update({k: v for k, v in source.items() if v is not None})
        merged[section] = values

    # validation happens by construction
    merged["network"] = NetworkConfig.from_dict(merged["network"]).to_dict()
    TrainConfig(**merged["train"])
    get_profile(merged["eval"]["profile"])
    merged["eval"]["families"] = [Kind(f).value for f in merged["eval"]["families"]]
    return merged


def network_config(resolved: dict) -> NetworkConfig:
    return NetworkConfig.from_dict(resolved["network"])


def train_config(resolved: dict) -> TrainConfig:
    return TrainConfig(**resolved["train"])
