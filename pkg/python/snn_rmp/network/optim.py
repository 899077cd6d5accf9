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

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from snn_rmp.core.errors import ParameterError, ShapeError

if TYPE_CHECKING:
    from snn_rmp.core.tensor import Tensor
    from snn_rmp.network.model import Network

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class OptimState:
    """State of stochastic gradient descent with momentum.

    The learning rate follows a cosine decay from `base_lr` at epoch 0 to 0 at
    epoch `epochs`, and is held constant within an epoch.
    """

    base_lr: float = 0.01
    """Learning rate at the first epoch."""

    momentum: float = 0.9
    """Momentum coefficient."""

    epochs: int = 1
    """Total number of epochs of the decay."""

    epoch: int = 0
    """Current epoch."""

    buffers: dict[str, Tensor] = field(default_factory=dict)
    """Momentum buffers, keyed like the network parameters."""

    def __post_init__(self) -> None:
        if not self.base_lr >= 0:
            raise ParameterError(f"base_lr must be >= 0, got {self.base_lr}")
        if not 0 <= self.momentum < 1:
            raise ParameterError(
                f"momentum must be in [0, 1), got {self.momentum}"
            )
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")

    @classmethod
    def for_network(
        cls, network: Network, base_lr: float, momentum: float, epochs: int
    ) -> OptimState:
        """Create optimizer state with zeroed buffers for all parameters."""
        buffers = {
            name: np.zeros_like(value)
            for name, value in network.parameters().items()
        }
        return cls(base_lr, momentum, epochs, 0, buffers)

    @property
    def learning_rate(self) -> float:
        """Learning rate at the current epoch."""
        return cosine_lr(self.base_lr, self.epoch, self.epochs)


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def cosine_lr(base_lr: float, epoch: int, epochs: int) -> float:
    """Cosine decay from `base_lr` at epoch 0 to 0 at epoch `epochs`."""
    return base_lr * (1.0 + math.cos(math.pi * epoch / epochs)) / 2.0


def sgd_step(
    network: Network, grads: dict[str, Tensor], opt: OptimState
) -> None:
    """Apply one update, in place, to every parameter with a gradient."""
    params = network.parameters()
    lr = opt.learning_rate
    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"Gradient for unknown parameter: {name}")
        param = params[name]
        if grad.shape != param.shape:
            raise ShapeError(
                f"Gradient shape {grad.shape} does not match parameter "
                f"'{name}' of shape {param.shape}"
            )

        # Accumulate velocity, then descend along it
        velocity = opt.buffers.setdefault(name, np.zeros_like(param))
        velocity *= opt.momentum
        velocity += grad
        param -= lr * velocity
