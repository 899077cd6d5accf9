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

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from snn_rmp.config import ConfigurationError, TrainConfig, from_dict
from snn_rmp.core.errors import CheckpointError, SnnError
from snn_rmp.core.tensor import SeededRng, Tensor
from snn_rmp.data import FeatureStats
from snn_rmp.network.model import Network, network_from_config
from snn_rmp.network.optim import OptimState
from snn_rmp.network.train import EpochMetrics, TrainState
from snn_rmp.utilities.files import write_atomic

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

SCHEMA_VERSION = "1"
"""Version of the checkpoint layout."""

_LENGTH = struct.Struct("<Q")
"""Prefix holding the byte length of the JSON header."""

_DTYPE = np.dtype("<f8")
"""Element type of the payload."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class Checkpoint:
    """A persisted training run.

    On disk, a checkpoint is an 8-byte little-endian header length, followed
    by a JSON header naming every tensor with its shape and element offset,
    followed by a flat little-endian payload of 64-bit floats. Tensors are
    stored in row-major order, so values round-trip bit for bit.
    """

    state: TrainState
    """Network, optimizer, generator and history."""

    config: TrainConfig
    """Resolved configuration that produced the run."""

    stats: FeatureStats | None = None
    """Standardization statistics of the training split, if applied."""

    @property
    def network(self) -> Network:
        """Trained network."""
        return self.state.network


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    """Write a checkpoint atomically."""
    state = checkpoint.state
    network = state.network
    tensors: dict[str, Tensor] = {}
    for name, value in network.parameters().items():
        tensors[f"param.{name}"] = value
    for name, value in network.buffers().items():
        tensors[f"buffer.{name}"] = value
    for name, value in state.optim.buffers.items():
        tensors[f"optim.{name}"] = value
    if checkpoint.stats is not None:
        tensors["data.mean"] = checkpoint.stats.mean
        tensors["data.std"] = checkpoint.stats.std

    # Lay tensors out back to back
    entries, offset = [], 0
    for name, value in tensors.items():
        entries.append(
            {"name": name, "shape": list(value.shape), "offset": offset}
        )
        offset += value.size
    payload = b"".join(
        np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
        for value in tensors.values()
    )

    # Assemble header
    header = {
        "schema_version": SCHEMA_VERSION,
        "arch": {
            "name": checkpoint.config.arch,
            "input_shape": list(network.input_shape),
            "classes": network.classes,
            "timesteps": network.timesteps,
            "layers": network.describe(),
        },
        "tensors": entries,
        "optim": {
            "base_lr": state.optim.base_lr,
            "momentum": state.optim.momentum,
            "epochs": state.optim.epochs,
            "epoch": state.optim.epoch,
        },
        "epoch": state.epoch,
        "rng_state": state.rng.state,
        "config": checkpoint.config.to_dict(),
        "history": [metrics.to_dict() for metrics in state.history],
    }
    data = json.dumps(header, sort_keys=True).encode("utf-8")
    write_atomic(path, _LENGTH.pack(len(data)) + data + payload)
    log.debug("Saved checkpoint of epoch %d to %s", state.epoch, path)


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint, rebuilding the network it describes.

    Raises:
        CheckpointError: If the file cannot be read, is corrupted, or does
            not match the architecture its configuration names.
    """
    try:
        content = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint: {e}") from e

    # Split header from payload
    if len(content) < _LENGTH.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    (length,) = _LENGTH.unpack_from(content)
    end = _LENGTH.size + length
    if end > len(content) or (len(content) - end) % _DTYPE.itemsize:
        raise CheckpointError(f"{path}: truncated checkpoint")
    try:
        header = json.loads(content[_LENGTH.size : end].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as e:
        raise CheckpointError(f"{path}: corrupted header: {e}") from e
    if not isinstance(header, dict):
        raise CheckpointError(f"{path}: corrupted header")
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CheckpointError(
            f"{path}: unsupported schema version {version!r}, "
            f"expected {SCHEMA_VERSION!r}"
        )
    payload = np.frombuffer(content, dtype=_DTYPE, offset=end)

    # Rebuild everything from the header
    try:
        return _restore(header, payload)
    except (KeyError, TypeError, ValueError, ConfigurationError) as e:
        message = e.message if isinstance(e, ConfigurationError) else e
        raise CheckpointError(f"{path}: corrupted header: {message}") from e
    except CheckpointError as e:
        raise CheckpointError(f"{path}: {e}") from e
    except SnnError as e:
        raise CheckpointError(f"{path}: inconsistent checkpoint: {e}") from e


# ----------------------------------------------------------------------------


def _restore(header: dict[str, Any], payload: Tensor) -> Checkpoint:
    """Rebuild a checkpoint from its parsed header and payload."""
    config = from_dict(header["config"])
    arch = header["arch"]
    if arch["name"] != config.arch or arch["timesteps"] != config.timesteps:
        raise CheckpointError("architecture does not match configuration")
    network = network_from_config(
        config, tuple(arch["input_shape"]), int(arch["classes"]), SeededRng(0)
    )
    if network.describe() != arch["layers"]:
        raise CheckpointError("layer stack does not match configuration")

    # Slice tensors out of the payload
    tensors: dict[str, Tensor] = {}
    for entry in header["tensors"]:
        shape = tuple(int(dim) for dim in entry["shape"])
        start = int(entry["offset"])
        stop = start + int(np.prod(shape, dtype=np.int64))
        if start < 0 or stop > payload.size:
            raise CheckpointError(f"tensor '{entry['name']}' exceeds payload")
        tensors[entry["name"]] = payload[start:stop].reshape(shape).copy()

    # Copy parameters and buffers into the network
    targets = {
        **{f"param.{k}": v for k, v in network.parameters().items()},
        **{f"buffer.{k}": v for k, v in network.buffers().items()},
    }
    for name, target in targets.items():
        if name not in tensors:
            raise CheckpointError(f"missing tensor '{name}'")
        if tensors[name].shape != target.shape:
            raise CheckpointError(
                f"tensor '{name}' has shape {list(tensors[name].shape)}, "
                f"network expects {list(target.shape)}"
            )
        target[...] = tensors[name]

    # Restore optimizer, generator and history
    optim = OptimState(
        **header["optim"],
        buffers={
            name.removeprefix("optim."): value
            for name, value in tensors.items()
            if name.startswith("optim.")
        },
    )
    state = TrainState(
        network=network,
        optim=optim,
        rng=SeededRng.from_state(header["rng_state"]),
        epoch=int(header["epoch"]),
        history=[EpochMetrics(**metrics) for metrics in header["history"]],
    )
    stats = None
    if "data.mean" in tensors and "data.std" in tensors:
        stats = FeatureStats(tensors["data.mean"], tensors["data.std"])
    return Checkpoint(state, config, stats)
