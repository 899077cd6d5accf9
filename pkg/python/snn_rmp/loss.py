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

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, overload

import numpy as np
from scipy.special import log_softmax, softmax

from snn_rmp.core.errors import DataError, ParameterError, UsageError

if TYPE_CHECKING:
    from collections.abc import Iterator

    from numpy.typing import ArrayLike

    from snn_rmp.core.tensor import Tensor

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters of the membrane potential regularizer."""

    p: float = 2.0
    """Exponent of the quantization error norm."""

    k: float = 0.1
    """Peak weight of the regularizer over the schedule."""

    epochs: int = 1
    """Total number of training epochs."""

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise ParameterError(f"p must be > 0, got {self.p}")
        if not self.k >= 0:
            raise ParameterError(f"k must be >= 0, got {self.k}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")


# ----------------------------------------------------------------------------


@dataclass
class TapeRecord:
    """Pre-reset membrane potentials of one spiking layer at one timestep."""

    layer: int
    """Index of the spiking layer within the network."""

    step: int
    """Timestep, starting at 0."""

    u_pre: Tensor
    """Membrane potentials, shaped like the layer's activations."""


@dataclass
class MembraneTape:
    """Record of the membrane potentials seen during forward passes.

    A single forward pass appends one record per spiking layer and timestep.
    Tapes from several passes can be concatenated with `extend`, e.g., to
    collect statistics over a whole test set, in which case `pass_id` refers
    to the most recent pass.
    """

    records: list[TapeRecord] = field(default_factory=list)
    """Records in the order they were produced."""

    pass_id: int = -1
    """Identifier of the forward pass that produced the tape."""

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TapeRecord]:
        return iter(self.records)

    def append(self, layer: int, step: int, u_pre: Tensor) -> None:
        """Add a record."""
        self.records.append(TapeRecord(layer, step, u_pre))

    def extend(self, other: MembraneTape) -> None:
        """Add all records of another tape."""
        self.records.extend(other.records)
        self.pass_id = other.pass_id

    def layers(self) -> list[int]:
        """Return the distinct layer indexes, in ascending order."""
        return sorted({record.layer for record in self.records})

    def select(self, layer: int) -> MembraneTape:
        """Return a tape restricted to the given layer."""
        records = [r for r in self.records if r.layer == layer]
        return MembraneTape(records, self.pass_id)

    def values(self) -> Tensor:
        """Return all recorded potentials as one flat tensor."""
        if not self.records:
            return np.empty(0)
        return np.concatenate([r.u_pre.ravel() for r in self.records])

    @property
    def size(self) -> int:
        """Total number of recorded elements."""
        return sum(record.u_pre.size for record in self.records)


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


@overload
def quant_error(u: float, v_th: float, p: float) -> float: ...
@overload
def quant_error(u: Tensor, v_th: float, p: float) -> Tensor: ...
def quant_error(u: float | Tensor, v_th: float, p: float) -> float | Tensor:
    """Distance between membrane potentials and the spikes they map to.

    A potential at or above the threshold maps to spike 1, all others map to
    spike 0. The error is the p-th power of the absolute distance.
    """
    if not p > 0:
        raise ParameterError(f"p must be > 0, got {p}")
    x = np.asarray(u, dtype=np.float64)
    value = np.abs(_target(x, v_th) - x) ** p
    return float(value) if np.ndim(u) == 0 else value


def rmp_loss(tape: MembraneTape, v_th: float, p: float) -> float:
    """Mean quantization error over every recorded membrane potential."""
    if tape.size == 0:
        raise UsageError("Membrane tape is empty")

    # Sum per record, then normalize by the global element count, which keeps
    # the mean exact when layers differ in shape
    total = 0.0
    for record in tape:
        total += float(np.sum(quant_error(record.u_pre, v_th, p)))
    return total / tape.size


def rmp_loss_grad(tape: MembraneTape, v_th: float, p: float) -> list[Tensor]:
    """Gradient of `rmp_loss` with respect to each recorded tensor.

    The spike target is held constant, as the jump of the indicator at the
    threshold carries no gradient. Where a potential sits exactly on its
    target, the gradient is 0, which is the subgradient choice for `p < 1`.
    """
    if tape.size == 0:
        raise UsageError("Membrane tape is empty")
    if not p > 0:
        raise ParameterError(f"p must be > 0, got {p}")

    # Compute elementwise derivative of |u - target|^p
    grads = []
    for record in tape:
        d = record.u_pre - _target(record.u_pre, v_th)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = p * np.abs(d) ** (p - 1.0) * np.sign(d)
        grads.append(np.where(d == 0.0, 0.0, g) / tape.size)
    return grads


def lambda_schedule(n: int, cfg: LossConfig) -> float:
    """Weight of the regularizer at epoch `n`.

    The weight ramps up linearly from 0 to `k` over the first half of training
    and back down to 0 over the second half. Both halves are evaluated with
    the same expression on the distance to the nearest end, so the schedule is
    exactly symmetric.
    """
    epochs = cfg.epochs
    if not 0 <= n <= epochs:
        raise ParameterError(f"Epoch must be in [0, {epochs}], got {n}")
    m = n if n <= epochs / 2 else epochs - n
    return 2.0 * cfg.k * m / epochs


def cross_entropy(logits: Tensor, labels: ArrayLike) -> tuple[float, Tensor]:
    """Mean softmax cross-entropy over a batch, and its gradient."""
    labels = np.asarray(labels)
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise DataError(
            f"Expected {batch} labels, got array of shape {labels.shape}"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        raise DataError(f"Labels must be integers, got {labels.dtype}")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise DataError(f"Labels must be in [0, {classes})")

    # Compute loss from log-probabilities for numerical stability
    rows = np.arange(batch)
    loss = -float(np.mean(log_softmax(logits, axis=1)[rows, labels]))
    dlogits = softmax(logits, axis=1)
    dlogits[rows, labels] -= 1.0
    return loss, dlogits / batch


def total_loss(ce: float, rmp: float, n: int, cfg: LossConfig) -> float:
    """Classification loss plus the scheduled regularizer."""
    return ce + lambda_schedule(n, cfg) * rmp


# ----------------------------------------------------------------------------


def _target(u: Tensor, v_th: float) -> Tensor:
    """Spike value each potential maps to."""
    return (u >= v_th).astype(np.float64)
