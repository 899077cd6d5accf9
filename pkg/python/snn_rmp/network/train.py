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

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from snn_rmp.analysis import firing_rate, mean_quant_error
from snn_rmp.core.errors import ParameterError, UsageError
from snn_rmp.core.tensor import check_finite
from snn_rmp.loss import (
    LossConfig,
    MembraneTape,
    cross_entropy,
    lambda_schedule,
    rmp_loss,
    rmp_loss_grad,
    total_loss,
)
from snn_rmp.network.optim import sgd_step

if TYPE_CHECKING:
    from collections.abc import Callable

    from snn_rmp.config import TrainConfig
    from snn_rmp.core.tensor import SeededRng
    from snn_rmp.data import Dataset
    from snn_rmp.network.model import Network
    from snn_rmp.network.optim import OptimState

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

THREADS_ENV = "SNN_RMP_THREADS"
"""Environment variable capping evaluation parallelism."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class EpochMetrics:
    """Metrics of one training epoch."""

    epoch: int
    """Epoch index, starting at 0."""

    lam: float
    """Weight of the regularizer during the epoch."""

    loss: float
    """Mean total training loss over minibatches."""

    ce: float
    """Mean cross-entropy over minibatches."""

    rmp: float | None
    """Mean regularizer over minibatches, unless the regularizer is off."""

    quant_error: float
    """Mean quantization error on the test set after the epoch."""

    firing_rate: float
    """Firing rate on the test set after the epoch."""

    accuracy: float
    """Test accuracy after the epoch."""

    def to_dict(self) -> dict[str, Any]:
        """Return the metrics as a plain mapping."""
        return asdict(self)

    def line(self) -> str:
        """Return a machine-parseable `key=value` summary line."""
        rmp = "nan" if self.rmp is None else f"{self.rmp:.6f}"
        return (
            f"epoch={self.epoch} lambda={self.lam:.6f} loss={self.loss:.6f} "
            f"rmp={rmp} qerr={self.quant_error:.6f} "
            f"rate={self.firing_rate:.6f} acc={self.accuracy:.4f}"
        )


@dataclass
class TrainState:
    """Everything needed to continue a training run."""

    network: Network
    """Network being trained."""

    optim: OptimState
    """Optimizer state."""

    rng: SeededRng
    """Generator that shuffles minibatches."""

    epoch: int = 0
    """Next epoch to run."""

    history: list[EpochMetrics] = field(default_factory=list)
    """Metrics of completed epochs."""


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def train(
    state: TrainState,
    train_set: Dataset,
    test_set: Dataset,
    cfg: TrainConfig,
    *,
    until: int | None = None,
    regularize: bool = True,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
) -> TrainState:
    """Train a network with the membrane potential regularizer.

    Each epoch shuffles the training set, then runs forward, loss, backward
    and update per minibatch, where the regularizer weight follows its
    schedule over epochs. After each epoch, the network is evaluated on the
    test set. Training continues from `state.epoch`, which allows resuming.

    Arguments:
        state: The training state, updated in place.
        train_set: The training set.
        test_set: The test set.
        cfg: The configuration.
        until: The epoch to stop before, defaults to `cfg.epochs`.
        regularize: Whether to compute the regularizer at all - when off, no
            membrane potential loss is evaluated, irrespective of `cfg.k`.
        on_epoch: Callback invoked with the metrics of each epoch.

    Returns:
        The training state.
    """
    if not len(train_set):
        raise UsageError("Training set is empty")
    if not len(test_set):
        raise UsageError("Test set is empty")
    loss_cfg = LossConfig(cfg.p, cfg.k, cfg.epochs)
    network = state.network
    stop = cfg.epochs if until is None else min(until, cfg.epochs)
    while state.epoch < stop:
        n = state.epoch
        lam = lambda_schedule(n, loss_cfg)
        state.optim.epoch = n

        # Run minibatches in shuffled order
        order = state.rng.permutation(len(train_set))
        losses, ces, rmps = [], [], []
        for start in range(0, len(order), cfg.batch_size):
            index = order[start : start + cfg.batch_size]
            x, labels = train_set.inputs[index], train_set.labels[index]

            # Feed forward and compute losses
            logits, tape = network.forward(x, record=True, training=True)
            ce, dlogits = cross_entropy(logits, labels)
            rmp, rmp_grads = None, None
            loss = ce
            if regularize:
                rmp = rmp_loss(tape, cfg.v_th, cfg.p)
                rmp_grads = rmp_loss_grad(tape, cfg.v_th, cfg.p)
                loss = total_loss(ce, rmp, n, loss_cfg)
                rmps.append(rmp)
            check_finite(loss, f"training loss at epoch {n}")
            losses.append(loss)
            ces.append(ce)

            # Backpropagate and update parameters
            grads = network.backward(tape, dlogits, rmp_grads, lam)
            sgd_step(network, grads, state.optim)

        # Evaluate on test set
        accuracy, tape_stats = _measure(network, test_set, cfg)
        metrics = EpochMetrics(
            epoch=n,
            lam=lam,
            loss=float(np.mean(losses)),
            ce=float(np.mean(ces)),
            rmp=float(np.mean(rmps)) if rmps else None,
            quant_error=tape_stats[0],
            firing_rate=tape_stats[1],
            accuracy=accuracy,
        )
        state.history.append(metrics)
        state.epoch += 1
        log.debug("Completed %s", metrics.line())
        if on_epoch is not None:
            on_epoch(metrics)

    # Return resulting state
    return state


def evaluate(
    network: Network,
    dataset: Dataset,
    *,
    batch_size: int = 256,
    threads: int | None = None,
) -> float:
    """Return the fraction of samples whose winning class is the label.

    The winner is the class with the largest accumulated output potential,
    ties going to the lowest class index. Batches may be evaluated by several
    threads, capped by `SNN_RMP_THREADS`, and counts are always reduced in
    batch order.
    """
    if not len(dataset):
        raise UsageError("Cannot evaluate on an empty dataset")
    threads = threads if threads is not None else _threads()

    def correct(start: int) -> int:
        x = dataset.inputs[start : start + batch_size]
        logits, _ = network.forward(x)
        labels = dataset.labels[start : start + batch_size]
        return int(np.count_nonzero(np.argmax(logits, axis=1) == labels))

    # Evaluate batches, sequentially or in parallel
    starts = range(0, len(dataset), batch_size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            counts = list(executor.map(correct, starts))
    else:
        counts = [correct(start) for start in starts]
    return sum(counts) / len(dataset)


def collect_tape(
    network: Network,
    dataset: Dataset,
    *,
    batch_size: int = 256,
    layer: int | None = None,
) -> MembraneTape:
    """Record membrane potentials over a dataset in inference mode.

    Arguments:
        network: The network.
        dataset: The dataset.
        batch_size: The number of samples per forward pass.
        layer: The spiking layer to keep records of, defaults to all.

    Returns:
        The membrane tape.
    """
    if not len(dataset):
        raise UsageError("Cannot record on an empty dataset")
    tape = MembraneTape()
    for start in range(0, len(dataset), batch_size):
        x = dataset.inputs[start : start + batch_size]
        _, part = network.forward(x, record=True)
        tape.extend(part if layer is None else part.select(layer))
    return tape


# ----------------------------------------------------------------------------


def _measure(
    network: Network, dataset: Dataset, cfg: TrainConfig
) -> tuple[float, tuple[float, float]]:
    """Return accuracy, quantization error and firing rate on a dataset.

    Statistics are accumulated batch by batch, so that membrane potentials of
    large test sets never have to be held in memory at once.
    """
    correct, error, fired, size = 0, 0.0, 0.0, 0
    for start in range(0, len(dataset), cfg.batch_size):
        x = dataset.inputs[start : start + cfg.batch_size]
        labels = dataset.labels[start : start + cfg.batch_size]
        logits, tape = network.forward(x, record=True)
        correct += int(np.count_nonzero(np.argmax(logits, axis=1) == labels))
        error += mean_quant_error(tape, cfg.v_th, cfg.p) * tape.size
        fired += firing_rate(tape, cfg.v_th) * tape.size
        size += tape.size
    return correct / len(dataset), (error / size, fired / size)


def _threads() -> int:
    """Return the evaluation thread cap from the environment."""
    value = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ParameterError(
            f"{THREADS_ENV} must be a positive integer, got {value!r}"
        )
    return threads
