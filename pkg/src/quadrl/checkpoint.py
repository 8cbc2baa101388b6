"""Versioned JSON checkpoints with exact 64-bit parameter round trips.

Parameter arrays are stored as base64 of their little-endian float64
bytes, so save/load reproduces every bit. Network specs are stored as
[input_size, output_size, activation, bound] rows per layer. The config
snapshot uses the flat dotted-key dictionary from the config module.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, config_from_dict, config_to_dict
from .net import LayerSpec, NetworkSpec, ParamVector

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    algorithm: str
    specs: dict[str, NetworkSpec]
    params: dict[str, np.ndarray]
    config: RunConfig
    progress: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self) -> None:
        if "actor" not in self.specs or "actor" not in self.params:
            raise CheckpointError("checkpoint requires an actor network")
        for name, spec in self.specs.items():
            if name not in self.params:
                raise CheckpointError(f"missing parameters for network {name!r}")
            if self.params[name].size != spec.param_count:
                raise CheckpointError(
                    f"parameter length mismatch for network {name!r}: "
                    f"{self.params[name].size} != {spec.param_count}")

    def actor(self) -> ParamVector:
        return ParamVector(self.params["actor"], self.specs["actor"])


def _encode_spec(spec: NetworkSpec) -> list:
    return [[layer.input_size, layer.output_size, layer.activation, layer.bound]
            for layer in spec.layers]


def _decode_spec(rows, name: str) -> NetworkSpec:
    try:
        layers = tuple(LayerSpec(int(r[0]), int(r[1]), str(r[2]), float(r[3]))
                       for r in rows)
        return NetworkSpec(layers)
    except (ValueError, TypeError, IndexError) as exc:
        raise CheckpointError(f"invalid network spec for {name!r}: {exc}") from None


def _encode_params(values: np.ndarray) -> str:
    return base64.b64encode(np.asarray(values, dtype="<f8").tobytes()).decode("ascii")


def _decode_params(text: str, name: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise CheckpointError(f"invalid base64 parameters for {name!r}: {exc}") from None
    if len(raw) % 8:
        raise CheckpointError(f"parameter byte length for {name!r} is not float64")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def save_checkpoint(ck: Checkpoint, path: str) -> None:
    doc = {
        "format_version": ck.format_version,
        "algorithm": ck.algorithm,
        "specs": {name: _encode_spec(spec) for name, spec in ck.specs.items()},
        "params": {name: _encode_params(values)
                   for name, values in ck.params.items()},
        "config": config_to_dict(ck.config),
        "progress": ck.progress,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, encoding="ascii") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"malformed checkpoint document: {exc}") from None
    if not isinstance(doc, dict):
        raise CheckpointError("malformed checkpoint document: not an object")
    missing = [k for k in ("format_version", "algorithm", "specs", "params",
                           "config", "progress") if k not in doc]
    if missing:
        raise CheckpointError(f"checkpoint missing keys: {', '.join(missing)}")
    if doc["format_version"] != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported format_version {doc['format_version']!r}")
    specs = {name: _decode_spec(rows, name) for name, rows in doc["specs"].items()}
    params = {name: _decode_params(text, name)
              for name, text in doc["params"].items()}
    try:
        config = config_from_dict(doc["config"])
    except ValueError as exc:
        raise CheckpointError(f"invalid config snapshot: {exc}") from None
    return Checkpoint(doc["algorithm"], specs, params, config, doc["progress"])
