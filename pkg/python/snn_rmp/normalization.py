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

import numpy as np

from snn_rmp.core.errors import ParameterError, ShapeError, UsageError
from snn_rmp.core.tensor import Tensor, new_tensor

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

_AXES = (0, 1, 3, 4)
"""Axes reduced over - time, batch, height and width, i.e. all but channel."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class TdBNLayer:
    """Threshold-dependent batch normalization.

    Pre-activations are normalized per channel jointly over the temporal and
    spatial dimensions, and scaled to variance `(alpha * v_th)^2`, so that the
    normalized input stays balanced against the firing threshold. A learnable
    per-channel affine map follows.
    """

    channels: int
    """Number of channels."""

    v_th: float = 0.5
    """Firing threshold of the neurons fed by this layer."""

    alpha: float = 1.0
    """Scale of the normalized variance relative to the threshold."""

    eps: float = 1e-5
    """Variance stabilizer."""

    momentum: float = 0.9
    """Decay of the running statistics."""

    gamma: Tensor = field(init=False)
    """Per-channel scale."""

    beta: Tensor = field(init=False)
    """Per-channel shift."""

    running_mean: Tensor = field(init=False)
    """Per-channel mean used at inference."""

    running_var: Tensor = field(init=False)
    """Per-channel variance used at inference."""

    def __post_init__(self) -> None:
        if self.eps <= 0.0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")
        if not 0.0 < self.momentum < 1.0:
            raise ParameterError(
                f"momentum must be in (0, 1), got {self.momentum}"
            )
        self.gamma = new_tensor([self.channels], 1.0)
        self.beta = new_tensor([self.channels], 0.0)
        self.running_mean = new_tensor([self.channels], 0.0)
        self.running_var = new_tensor([self.channels], 1.0)


@dataclass
class TdBNCache:
    """Intermediates a training-mode forward pass keeps for the backward."""

    training: bool
    """Whether the forward pass used batch statistics."""

    x_hat: Tensor
    """Unit-variance normalized input."""

    inv_std: Tensor
    """Reciprocal of the stabilized standard deviation, broadcastable."""

    gamma: Tensor
    """Scale in effect during the forward pass, broadcastable."""

    scale: float
    """Threshold-dependent factor `alpha * v_th`."""


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def tdbn_forward(
    layer: TdBNLayer, x: Tensor, *, training: bool
) -> tuple[Tensor, TdBNCache]:
    """Normalize a `[T, B, C, H, W]` tensor.

    In training mode, statistics are computed from the input itself and folded
    into the running estimates. In inference mode the running estimates are
    used, which turns the layer into a fixed affine map.
    """
    if x.ndim != 5:
        raise ShapeError(f"Expected a 5D [T,B,C,H,W] tensor, got {x.shape}")
    if x.shape[2] != layer.channels:
        raise ShapeError(
            f"Expected {layer.channels} channels, got {x.shape[2]}"
        )

    # Compute statistics over all axes but the channel axis
    if training:
        mean = x.mean(axis=_AXES)
        var = x.var(axis=_AXES)
        m = layer.momentum
        layer.running_mean[:] = m * layer.running_mean + (1.0 - m) * mean
        layer.running_var[:] = m * layer.running_var + (1.0 - m) * var
    else:
        mean, var = layer.running_mean, layer.running_var

    # Normalize, scale to the threshold and apply affine map
    shape = (1, 1, layer.channels, 1, 1)
    inv_std = (1.0 / np.sqrt(var + layer.eps)).reshape(shape)
    x_hat = (x - mean.reshape(shape)) * inv_std
    scale = layer.alpha * layer.v_th
    gamma = layer.gamma.reshape(shape)
    y = gamma * (scale * x_hat) + layer.beta.reshape(shape)
    return y, TdBNCache(training, x_hat, inv_std, gamma, scale)


def tdbn_backward(
    cache: TdBNCache, dy: Tensor
) -> tuple[Tensor, Tensor, Tensor]:
    """Return gradients with respect to the input, `gamma` and `beta`."""
    if not cache.training:
        raise UsageError("Backward pass requires a training-mode forward")

    # Gradients of affine parameters
    x_bar = cache.scale * cache.x_hat
    dgamma = np.sum(dy * x_bar, axis=_AXES)
    dbeta = np.sum(dy, axis=_AXES)

    # Gradient through the normalization, where mean and variance depend on
    # every element of the channel
    dx_hat = dy * cache.gamma * cache.scale
    mean_dx_hat = dx_hat.mean(axis=_AXES, keepdims=True)
    mean_dx_hat_x_hat = (dx_hat * cache.x_hat).mean(axis=_AXES, keepdims=True)
    dx = cache.inv_std * (
        dx_hat - mean_dx_hat - cache.x_hat * mean_dx_hat_x_hat
    )
    return dx, dgamma, dbeta
