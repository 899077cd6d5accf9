# Copyright (c) 2026 snn-rmp contributors

# SPDX-License-Identifier: MIT
# All contributions are certified under the DCO

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to
# deal in the Software without restriction, including without limitation the
# rights to use, copy, modify, merge, publish, distribute, sublicense, and/or
# sell copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NON-INFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
# FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS
# IN THE SOFTWARE.

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any

import yaml
from click import ClickException
from deepmerge import always_merger
from tomli import load as toml_load
from yaml import YAMLError

from snn_rmp.network.model import ARCHS

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

DATASET_KINDS = ("synth", "csv", "idx")
"""Supported dataset sources."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


class ConfigurationError(ClickException):
    """Configuration resolution or validation failed."""

    exit_code = 2


# ----------------------------------------------------------------------------


@dataclass
class DatasetConfig:
    """Where training and test data come from."""

    kind: str = "synth"
    """Dataset source, one of `synth`, `csv` or `idx`."""

    seed: int = 0
    """Seed of the synthetic dataset and of the train/test split."""

    classes: int = 4
    """Number of classes of the synthetic dataset."""

    per_class: int = 500
    """Samples per class of the synthetic dataset."""

    dim: int = 16
    """Feature dimension of the synthetic dataset."""

    spread: float = 0.25
    """Standard deviation of the synthetic clusters."""

    test_fraction: float = 0.2
    """Share of synthetic samples held out for testing."""

    class_count: int | None = None
    """Number of classes of CSV and IDX datasets, inferred if unset."""

    train_path: str | None = None
    """CSV training set."""

    test_path: str | None = None
    """CSV test set."""

    train_images: str | None = None
    """IDX training images."""

    train_labels: str | None = None
    """IDX training labels."""

    test_images: str | None = None
    """IDX test images."""

    test_labels: str | None = None
    """IDX test labels."""

    standardize: bool = True
    """Whether to standardize features with training set statistics."""


@dataclass
class OutputConfig:
    """Where artifacts are written."""

    checkpoint: str = "checkpoint.snn"
    """Checkpoint path."""

    report: str = "report.json"
    """Report path."""


@dataclass
class AnalysisConfig:
    """Settings of membrane potential analysis."""

    bins: int = 200
    """Histogram bins, per spike window for information loss estimates."""

    epsilon: float = 0.05
    """Half-width of the window around each spike value."""

    lo: float = -1.0
    """Lower bound of exported histograms."""

    hi: float = 2.0
    """Upper bound of exported histograms."""


@dataclass
class TrainConfig:
    """All settings of a training run."""

    arch: str = "mlp-s"
    """Architecture, one of `mlp-s` or `cnn-s`."""

    timesteps: int = 4
    """Timesteps per forward pass."""

    epochs: int = 60
    """Training epochs."""

    batch_size: int = 64
    """Samples per minibatch."""

    base_lr: float = 0.1
    """Initial learning rate of the cosine schedule, sized for runs of tens of
    epochs rather than hundreds."""

    momentum: float = 0.9
    """Momentum of stochastic gradient descent."""

    tau: float = 0.25
    """Leak factor of spiking neurons."""

    v_th: float = 0.5
    """Firing threshold of spiking neurons."""

    alpha: float = 1.0
    """Threshold-dependent normalization scale."""

    eps: float = 1e-5
    """Normalization variance stabilizer."""

    bn_momentum: float = 0.9
    """Decay of normalization running statistics."""

    p: float = 2.0
    """Exponent of the quantization error."""

    k: float = 0.1
    """Peak weight of the membrane potential regularizer."""

    seed: int = 0
    """Seed of weight initialization and minibatch shuffling."""

    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    """Dataset settings."""

    output: OutputConfig = field(default_factory=OutputConfig)
    """Output settings."""

    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    """Analysis settings."""

    def to_dict(self) -> dict[str, Any]:
        """Return the configuration as a plain mapping."""
        return dataclasses.asdict(self)


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def load_config(
    path: str | None = None,
    overrides: list[str] | None = None,
    *,
    base: TrainConfig | None = None,
) -> TrainConfig:
    """Resolve configuration from defaults, a file and overrides.

    Settings from the file are merged over the defaults, and `key=value`
    overrides are merged over the file, where dotted keys address nested
    sections, e.g., `dataset.kind=csv`. A resumed run passes the configuration
    of its checkpoint as `base`, which then takes the place of the defaults.
    """
    config = (base or TrainConfig()).to_dict()
    if path is not None:
        config = always_merger.merge(config, parse_config(path))
    for override in overrides or []:
        config = always_merger.merge(config, parse_override(override))

    # Validate and return resulting configuration
    return from_dict(config)


def parse_config(path: str) -> dict[str, Any]:
    """Parse a configuration file, deciding the format by extension."""
    _, ext = os.path.splitext(path)
    try:
        if ext.lower() == ".toml":
            with open(path, "rb") as f:
                config = toml_load(f)
        elif ext.lower() in (".yml", ".yaml"):
            with open(path, encoding="utf-8") as f:
                config = yaml.safe_load(f)
        else:
            with open(path, encoding="utf-8") as f:
                config = json.load(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file: {e}") from e
    except (ValueError, YAMLError) as e:
        raise ConfigurationError(
            f"Encountered an error parsing the configuration file: {e}"
        ) from e

    # Empty files are valid and leave defaults untouched
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigurationError("Configuration must be a mapping")
    return config


def parse_override(override: str) -> dict[str, Any]:
    """Turn `a.b=value` into `{"a": {"b": value}}`.

    Values are resolved to Python types using YAML's implicit resolvers, so
    `k=0.1` yields a float and `dataset.standardize=false` a boolean.
    """
    key, sep, raw = override.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(
            f"Invalid override '{override}', expected key=value"
        )
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except YAMLError:
        value = raw

    # Expand dotted key into nested mappings
    parts = key.strip().split(".")
    result: dict[str, Any] = {}
    node = result
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return result


def from_dict(config: dict[str, Any]) -> TrainConfig:
    """Build and validate a configuration from a plain mapping."""
    result = _build(TrainConfig, config, "")
    _validate(result)
    return result


# ----------------------------------------------------------------------------


def _build(cls: type, data: Any, prefix: str) -> Any:
    """Instantiate a configuration dataclass, casting every field."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"Setting '{prefix[:-1]}' must be a section")

    # Reject unknown keys, so typos don't go unnoticed
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in fields:
            raise ConfigurationError(f"Unknown setting: '{prefix}{key}'")

    # Cast values to the declared types
    values: dict[str, Any] = {}
    for name, f in fields.items():
        if name not in data:
            continue
        value = data[name]
        if dataclasses.is_dataclass(f.default_factory):
            values[name] = _build(f.default_factory, value, f"{prefix}{name}.")
        else:
            values[name] = _cast(f"{prefix}{name}", value, str(f.type))
    return cls(**values)


def _cast(key: str, value: Any, annotation: str) -> Any:
    """Cast a value to the type named by a field annotation."""
    optional = "None" in annotation
    if value is None:
        if optional:
            return None
        raise ConfigurationError(f"Setting '{key}' must not be empty")

    # Determine target type from the annotation string
    name = annotation.split("|")[0].strip()
    try:
        if name == "bool":
            if isinstance(value, str) and value.lower() in ("true", "false"):
                return value.lower() == "true"
            if not isinstance(value, bool):
                raise TypeError(f"expected a boolean, got {value!r}")
            return value
        if isinstance(value, bool) or isinstance(value, (dict, list)):
            raise TypeError(f"unexpected value {value!r}")
        if name == "int":
            if isinstance(value, float) and not value.is_integer():
                raise TypeError(f"expected an integer, got {value!r}")
            return int(value)
        if name == "float":
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(
            f"Failed to cast setting '{key}' to {name}: {e}"
        ) from e


def _validate(config: TrainConfig) -> None:
    """Check that all settings lie within their documented ranges."""
    checks: list[tuple[str, bool, str]] = [
        ("arch", config.arch in ARCHS, f"one of {', '.join(ARCHS)}"),
        ("timesteps", config.timesteps >= 1, ">= 1"),
        ("epochs", config.epochs >= 1, ">= 1"),
        ("batch_size", config.batch_size >= 1, ">= 1"),
        ("base_lr", config.base_lr >= 0, ">= 0"),
        ("momentum", 0 <= config.momentum < 1, "in [0, 1)"),
        ("tau", 0 < config.tau < 1, "in (0, 1)"),
        ("v_th", config.v_th > 0, "> 0"),
        ("alpha", config.alpha > 0, "> 0"),
        ("eps", config.eps > 0, "> 0"),
        ("bn_momentum", 0 < config.bn_momentum < 1, "in (0, 1)"),
        ("p", config.p > 0, "> 0"),
        ("k", config.k >= 0, ">= 0"),
        ("seed", config.seed >= 0, ">= 0"),
        (
            "dataset.kind",
            config.dataset.kind in DATASET_KINDS,
            f"one of {', '.join(DATASET_KINDS)}",
        ),
        ("dataset.seed", config.dataset.seed >= 0, ">= 0"),
        ("dataset.classes", config.dataset.classes >= 2, ">= 2"),
        ("dataset.per_class", config.dataset.per_class >= 1, ">= 1"),
        ("dataset.dim", config.dataset.dim >= 2, ">= 2"),
        ("dataset.spread", config.dataset.spread >= 0, ">= 0"),
        (
            "dataset.test_fraction",
            0 < config.dataset.test_fraction < 1,
            "in (0, 1)",
        ),
        ("analysis.bins", config.analysis.bins >= 10, ">= 10"),
        ("analysis.epsilon", 0 < config.analysis.epsilon < 0.5, "in (0, 0.5)"),
        ("analysis.hi", config.analysis.hi > config.analysis.lo, "> lo"),
    ]
    for key, ok, expected in checks:
        if not ok:
            raise ConfigurationError(
                f"Invalid setting '{key}': must be {expected}, "
                f"got {_lookup(config, key)!r}"
            )

    # Check that file-based datasets name their files
    dataset = config.dataset
    required = {
        "csv": ("train_path", "test_path"),
        "idx": ("train_images", "train_labels", "test_images", "test_labels"),
    }
    for name in required.get(dataset.kind, ()):
        if getattr(dataset, name) is None:
            raise ConfigurationError(
                f"Missing required setting: dataset.{name}"
            )


def _lookup(config: Any, key: str) -> Any:
    """Resolve a dotted key on nested dataclasses."""
    for part in key.split("."):
        config = getattr(config, part)
    return config
