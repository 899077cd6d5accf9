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
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from snn_rmp.core.errors import ShapeError
from snn_rmp.core.tensor import Tensor, gauss, matmul, new_tensor
from snn_rmp.neuron import (
    NeuronParams,
    lif_step,
    output_accumulate,
    surrogate_grad,
    surrogate_phi,
)
from snn_rmp.normalization import TdBNLayer, tdbn_backward, tdbn_forward

if TYPE_CHECKING:
    from collections.abc import Sequence

    from snn_rmp.core.tensor import SeededRng

# ----------------------------------------------------------------------------
# Types
# ----------------------------------------------------------------------------

Shape = tuple[int, ...]
"""Per-sample feature shape, i.e., without the leading time and batch axes."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


class Layer(ABC):
    """A layer of a spiking network.

    Layers consume and produce time-major tensors `[T, B, *features]`, so that
    stateless layers can process all timesteps at once, and only spiking
    layers need to iterate over time. Forward passes return a cache instead of
    storing it, which leaves the layer itself untouched at inference, and
    safe to share between threads.
    """

    kind: str = ""
    """Name of the layer variant, as used in architecture descriptors."""

    def parameters(self) -> dict[str, Tensor]:
        """Return the learnable parameters by name."""
        return {}

    def buffers(self) -> dict[str, Tensor]:
        """Return non-learnable state that must persist, by name."""
        return {}

    def describe(self) -> dict[str, Any]:
        """Return a JSON-serializable descriptor of the layer."""
        return {"kind": self.kind}

    @abstractmethod
    def output_shape(self, shape: Shape) -> Shape:
        """Return the output feature shape for an input feature shape."""

    @abstractmethod
    def forward(self, x: Tensor, *, training: bool) -> tuple[Tensor, Any]:
        """Compute the layer output and the cache for the backward pass."""

    @abstractmethod
    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        """Return the input gradient and the parameter gradients by name."""


# ----------------------------------------------------------------------------


class Dense(Layer):
    """Fully connected layer."""

    kind = "dense"

    def __init__(self, rng: SeededRng, features_in: int, features_out: int):
        std = math.sqrt(2.0 / features_in)
        self.weight = gauss(rng, [features_out, features_in], 0.0, std)
        self.bias = new_tensor([features_out], 0.0)

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}

    def describe(self) -> dict[str, Any]:
        out, inp = self.weight.shape
        return {"kind": self.kind, "in": inp, "out": out}

    def output_shape(self, shape: Shape) -> Shape:
        if shape != (self.weight.shape[1],):
            raise ShapeError(
                f"Dense layer expects ({self.weight.shape[1]},), got {shape}"
            )
        return (self.weight.shape[0],)

    def forward(
        self, x: Tensor, *, training: bool  # noqa: ARG002
    ) -> tuple[Tensor, Any]:
        lead = x.shape[:-1]
        x2 = x.reshape(-1, x.shape[-1])
        y = matmul(x2, self.weight.T) + self.bias
        return y.reshape(*lead, -1), x2

    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        x2 = cache
        dy2 = dy.reshape(-1, dy.shape[-1])
        grads = {"weight": dy2.T @ x2, "bias": dy2.sum(axis=0)}
        dx = (dy2 @ self.weight).reshape(*dy.shape[:-1], -1)
        return dx, grads


class Conv2d(Layer):
    """Two-dimensional convolution without bias.

    Convolutions are computed on a strided window view of the padded input,
    contracting the channel and kernel axes in one tensor product.
    """

    kind = "conv2d"

    def __init__(
        self,
        rng: SeededRng,
        channels_in: int,
        channels_out: int,
        kernel: int = 3,
        stride: int = 1,
        padding: int = 1,
    ):
        if kernel < 1 or stride < 1 or padding < 0:
            raise ShapeError(
                f"Invalid convolution geometry: kernel={kernel}, "
                f"stride={stride}, padding={padding}"
            )
        std = math.sqrt(2.0 / (channels_in * kernel * kernel))
        self.weight = gauss(
            rng, [channels_out, channels_in, kernel, kernel], 0.0, std
        )
        self.stride = stride
        self.padding = padding

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight}

    def describe(self) -> dict[str, Any]:
        out, inp, kernel, _ = self.weight.shape
        return {
            "kind": self.kind,
            "in": inp,
            "out": out,
            "kernel": kernel,
            "stride": self.stride,
            "padding": self.padding,
        }

    def output_shape(self, shape: Shape) -> Shape:
        out, inp, kh, kw = self.weight.shape
        if len(shape) != 3 or shape[0] != inp:
            raise ShapeError(
                f"Convolution expects ({inp}, H, W) input, got {shape}"
            )
        height = (shape[1] + 2 * self.padding - kh) // self.stride + 1
        width = (shape[2] + 2 * self.padding - kw) // self.stride + 1
        if height < 1 or width < 1:
            raise ShapeError(f"Input {shape} is smaller than the kernel")
        return (out, height, width)

    def forward(
        self, x: Tensor, *, training: bool  # noqa: ARG002
    ) -> tuple[Tensor, Any]:
        steps, batch = x.shape[:2]
        x4 = x.reshape(-1, *x.shape[2:])
        windows = self._windows(x4)

        # Contract channels and kernel axes: [N,C,Ho,Wo,kh,kw] x [O,C,kh,kw]
        y = np.tensordot(windows, self.weight, axes=([1, 4, 5], [1, 2, 3]))
        y = y.transpose(0, 3, 1, 2)
        return y.reshape(steps, batch, *y.shape[1:]), (x4.shape, windows)

    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        shape, windows = cache
        steps, batch = dy.shape[:2]
        dy4 = dy.reshape(-1, *dy.shape[2:])
        dweight = np.tensordot(dy4, windows, axes=([0, 2, 3], [0, 2, 3]))

        # Scatter window gradients back onto the padded input
        _, _, kh, kw = self.weight.shape
        _, _, height, width = dy4.shape
        dwin = np.tensordot(dy4, self.weight, axes=([1], [0]))
        n, c, h, w = shape
        p, s = self.padding, self.stride
        dxp = np.zeros((n, c, h + 2 * p, w + 2 * p))
        for i in range(kh):
            for j in range(kw):
                dxp[
                    :,
                    :,
                    i : i + s * height : s,
                    j : j + s * width : s,
                ] += dwin[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, p : p + h, p : p + w]
        return dx.reshape(steps, batch, c, h, w), {"weight": dweight}

    def _windows(self, x4: Tensor) -> Tensor:
        """Return the strided `[N, C, Ho, Wo, kh, kw]` window view."""
        _, _, kh, kw = self.weight.shape
        p, s = self.padding, self.stride
        xp = np.pad(x4, ((0, 0), (0, 0), (p, p), (p, p)))
        windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
        return windows[:, :, ::s, ::s]


# ----------------------------------------------------------------------------


class TdBN(Layer):
    """Threshold-dependent batch normalization over pre-activations.

    Dense activations `[T, B, C]` are viewed as `[T, B, C, 1, 1]`.
    """

    kind = "tdbn"

    def __init__(self, norm: TdBNLayer):
        self.norm = norm

    def parameters(self) -> dict[str, Tensor]:
        return {"gamma": self.norm.gamma, "beta": self.norm.beta}

    def buffers(self) -> dict[str, Tensor]:
        return {
            "running_mean": self.norm.running_mean,
            "running_var": self.norm.running_var,
        }

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "channels": self.norm.channels}

    def output_shape(self, shape: Shape) -> Shape:
        if len(shape) not in (1, 3) or shape[0] != self.norm.channels:
            raise ShapeError(
                f"Normalization expects {self.norm.channels} channels "
                f"in a (C,) or (C, H, W) input, got {shape}"
            )
        return shape

    def forward(self, x: Tensor, *, training: bool) -> tuple[Tensor, Any]:
        x5 = x.reshape(*x.shape, 1, 1) if x.ndim == 3 else x
        y, cache = tdbn_forward(self.norm, x5, training=training)
        return y.reshape(x.shape), cache

    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        dy5 = dy.reshape(*dy.shape, 1, 1) if dy.ndim == 3 else dy
        dx, dgamma, dbeta = tdbn_backward(cache, dy5)
        return dx.reshape(dy.shape), {"gamma": dgamma, "beta": dbeta}


class SpikingActivation(Layer):
    """Leaky integrate-and-fire neurons, one per input feature.

    The membrane starts from rest at every forward pass. Forward passes emit
    binary spikes, while the backward pass substitutes the surrogate gradient
    for the step function and treats the reset gate as constant.

    In relaxed mode the forward pass fires `surrogate_phi(u)` instead of a
    binary spike, which makes the whole network smooth. The backward pass then
    also differentiates the reset gate, so that it computes the exact gradient
    of the relaxed forward. This exists for finite-difference gradient checks
    and is never used for training.
    """

    kind = "spike"

    def __init__(self, params: NeuronParams):
        self.params = params
        self.relaxed = False

    def describe(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "tau": self.params.tau,
            "v_th": self.params.v_th,
        }

    def output_shape(self, shape: Shape) -> Shape:
        return shape

    def forward(
        self, x: Tensor, *, training: bool  # noqa: ARG002
    ) -> tuple[Tensor, Any]:
        u = np.zeros(x.shape[1:])
        u_pre = np.empty_like(x)
        spikes = np.empty_like(x)
        for t in range(x.shape[0]):
            if self.relaxed:
                u_pre[t] = self.params.tau * u + x[t]
                spikes[t] = surrogate_phi(u_pre[t])
                u = u_pre[t] * (1.0 - spikes[t])
            else:
                step = lif_step(u, x[t], self.params)
                u_pre[t], spikes[t], u = step.u_pre, step.spikes, step.u_post

        # Spikes leaving a layer in the regular mode must be exactly binary
        assert self.relaxed or np.all((spikes == 0.0) | (spikes == 1.0))
        return spikes, (u_pre, spikes, self.relaxed)

    def backward(
        self,
        cache: Any,
        dy: Tensor,
        inject: Sequence[Tensor | None] | None = None,
    ) -> tuple[Tensor, dict[str, Tensor]]:
        """Propagate gradients backwards through time.

        Gradients of losses that depend on the pre-reset membrane potentials
        directly are passed as `inject`, one entry per timestep.
        """
        u_pre, spikes, relaxed = cache
        tau = self.params.tau
        dx = np.empty_like(dy)
        du = np.zeros(dy.shape[1:])
        for t in reversed(range(dy.shape[0])):
            slope = surrogate_grad(u_pre[t])

            # Membrane carried over to the next step, reset gate held constant
            # unless the forward pass was relaxed
            du_pre = dy[t] * slope + du * (1.0 - spikes[t])
            if relaxed:
                du_pre -= du * u_pre[t] * slope
            if inject is not None and inject[t] is not None:
                du_pre = du_pre + inject[t]

            # Input enters the membrane directly, previous membrane leaks
            dx[t] = du_pre
            du = tau * du_pre
        return dx, {}


# ----------------------------------------------------------------------------


class Flatten(Layer):
    """Collapse feature axes into one."""

    kind = "flatten"

    def output_shape(self, shape: Shape) -> Shape:
        return (math.prod(shape),)

    def forward(
        self, x: Tensor, *, training: bool  # noqa: ARG002
    ) -> tuple[Tensor, Any]:
        return x.reshape(*x.shape[:2], -1), x.shape

    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        return dy.reshape(cache), {}


class AvgPool(Layer):
    """Non-overlapping average pooling over the spatial axes."""

    kind = "avgpool"

    def __init__(self, window: int = 2):
        if window < 1:
            raise ShapeError(f"Pooling window must be >= 1, got {window}")
        self.window = window

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "window": self.window}

    def output_shape(self, shape: Shape) -> Shape:
        w = self.window
        if len(shape) != 3 or shape[1] % w or shape[2] % w:
            raise ShapeError(
                f"Pooling window {w} does not tile input {shape}"
            )
        return (shape[0], shape[1] // w, shape[2] // w)

    def forward(
        self, x: Tensor, *, training: bool  # noqa: ARG002
    ) -> tuple[Tensor, Any]:
        w = self.window
        t, b, c, h, v = x.shape
        y = x.reshape(t, b, c, h // w, w, v // w, w).mean(axis=(4, 6))
        return y, None

    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        w = self.window
        dx = np.repeat(np.repeat(dy, w, axis=3), w, axis=4) / (w * w)
        return dx, {}


class OutputHead(Layer):
    """Non-spiking output neurons that integrate their input over time.

    The head turns a time-major `[T, B, classes]` input into the final
    accumulated membrane potential `[B, classes]`, which serves as logits.
    """

    kind = "output"

    def output_shape(self, shape: Shape) -> Shape:
        if len(shape) != 1:
            raise ShapeError(f"Output head expects (classes,), got {shape}")
        return shape

    def forward(
        self, x: Tensor, *, training: bool  # noqa: ARG002
    ) -> tuple[Tensor, Any]:
        u = np.zeros(x.shape[1:])
        for t in range(x.shape[0]):
            u = output_accumulate(u, x[t])
        return u, x.shape[0]

    def backward(
        self, cache: Any, dy: Tensor
    ) -> tuple[Tensor, dict[str, Tensor]]:
        steps = cache
        return np.broadcast_to(dy, (steps, *dy.shape)).copy(), {}
