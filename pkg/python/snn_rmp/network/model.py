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
from typing import TYPE_CHECKING, Any, Literal

import numpy as np

from snn_rmp.core.errors import ParameterError, ShapeError, UsageError
from snn_rmp.loss import MembraneTape
from snn_rmp.network.layers import (
    AvgPool,
    Conv2d,
    Dense,
    Flatten,
    Layer,
    OutputHead,
    SpikingActivation,
    TdBN,
)
from snn_rmp.neuron import NeuronParams
from snn_rmp.normalization import TdBNLayer

if TYPE_CHECKING:
    from collections.abc import Sequence

    from snn_rmp.config import TrainConfig
    from snn_rmp.core.tensor import SeededRng, Tensor
    from snn_rmp.network.layers import Shape

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Types
# ----------------------------------------------------------------------------

Arch = Literal["mlp-s", "cnn-s"]
"""Name of a reference architecture."""

ARCHS: tuple[Arch, ...] = ("mlp-s", "cnn-s")
"""Available reference architectures."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


class Network:
    """A stack of layers simulated over a fixed number of timesteps.

    The same input is presented at every timestep - direct encoding - and the
    first spiking layer turns it into spikes. The last layer must be the
    output head, whose accumulated membrane potential after the final
    timestep is returned as logits.
    """

    def __init__(
        self, layers: Sequence[Layer], timesteps: int, input_shape: Shape
    ):
        """Initialize the network and validate its shape chain.

        Arguments:
            layers: The layers, in order.
            timesteps: The number of timesteps per forward pass.
            input_shape: The per-sample input shape.
        """
        if timesteps < 1:
            raise ParameterError(f"timesteps must be >= 1, got {timesteps}")
        heads = [i for i, l in enumerate(layers) if isinstance(l, OutputHead)]
        if heads != [len(layers) - 1]:
            raise ShapeError("Output head must appear once, as the last layer")

        # Validate that consecutive layers are compatible
        shape = tuple(input_shape)
        for i, layer in enumerate(layers):
            try:
                shape = layer.output_shape(shape)
            except ShapeError as e:
                raise ShapeError(f"Layer {i} ({layer.kind}): {e}") from e

        self.layers = list(layers)
        self.timesteps = timesteps
        self.input_shape = tuple(input_shape)
        self.classes = shape[0]

        # State of the most recent training-mode forward pass
        self._pass_id = 0
        self._caches: list[Any] | None = None

    # ------------------------------------------------------------------------

    @property
    def spiking_layers(self) -> list[int]:
        """Indexes of spiking layers."""
        return [
            i
            for i, layer in enumerate(self.layers)
            if isinstance(layer, SpikingActivation)
        ]

    @property
    def relaxed(self) -> bool:
        """Whether spiking layers fire smoothly, for gradient checks only."""
        return any(
            layer.relaxed
            for layer in self.layers
            if isinstance(layer, SpikingActivation)
        )

    @relaxed.setter
    def relaxed(self, value: bool) -> None:
        for layer in self.layers:
            if isinstance(layer, SpikingActivation):
                layer.relaxed = value

    def parameters(self) -> dict[str, Tensor]:
        """Return learnable parameters, keyed as `<layer>.<name>`."""
        return {
            f"{i}.{name}": value
            for i, layer in enumerate(self.layers)
            for name, value in layer.parameters().items()
        }

    def buffers(self) -> dict[str, Tensor]:
        """Return persistent non-learnable state, keyed like parameters."""
        return {
            f"{i}.{name}": value
            for i, layer in enumerate(self.layers)
            for name, value in layer.buffers().items()
        }

    def describe(self) -> list[dict[str, Any]]:
        """Return a JSON-serializable descriptor of the layer stack."""
        return [layer.describe() for layer in self.layers]

    # ------------------------------------------------------------------------

    def forward(
        self, x: Tensor, *, record: bool = False, training: bool = False
    ) -> tuple[Tensor, MembraneTape]:
        """Simulate the network on a batch of inputs.

        Inference-mode passes do not modify the network. Training-mode passes
        update normalization statistics and keep the intermediates that a
        subsequent call to `backward` consumes.

        Arguments:
            x: The inputs, shaped `[B, *input_shape]`.
            record: Whether to record pre-reset membrane potentials.
            training: Whether to run in training mode.

        Returns:
            The logits `[B, classes]` and the membrane tape, which is empty
            unless `record` is set.
        """
        if tuple(x.shape[1:]) != self.input_shape:
            expected = ", ".join(map(str, self.input_shape))
            raise ShapeError(
                f"Expected input of shape [B, {expected}], got {list(x.shape)}"
            )

        # Present the same input at every timestep
        h = np.repeat(x[np.newaxis].astype(np.float64), self.timesteps, axis=0)
        tape = MembraneTape()
        caches = []
        for i, layer in enumerate(self.layers):
            h, cache = layer.forward(h, training=training)
            caches.append(cache)
            if record and isinstance(layer, SpikingActivation):
                u_pre = cache[0]
                for t in range(self.timesteps):
                    tape.append(i, t, u_pre[t])

        # Keep intermediates for backpropagation
        if training:
            self._pass_id += 1
            self._caches = caches
            tape.pass_id = self._pass_id
        return h, tape

    def backward(
        self,
        tape: MembraneTape | None,
        dlogits: Tensor,
        rmp_grads: Sequence[Tensor] | None = None,
        rmp_weight: float = 0.0,
    ) -> dict[str, Tensor]:
        """Backpropagate through layers and time.

        Gradients of the regularizer are injected at the recorded membrane
        nodes, scaled by `rmp_weight`, in addition to the classification
        gradient that reaches them through the spikes.

        Arguments:
            tape: The tape of the immediately preceding training-mode pass.
            dlogits: The gradient of the loss with respect to the logits.
            rmp_grads: The regularizer gradients, one per tape record.
            rmp_weight: The scheduled weight of the regularizer.

        Returns:
            Parameter gradients, keyed like `parameters`.
        """
        if tape is None or self._caches is None:
            raise UsageError("Backward pass requires a preceding forward")
        if tape.pass_id != self._pass_id:
            raise UsageError("Membrane tape is stale")
        if len(tape) != len(self.spiking_layers) * self.timesteps:
            raise UsageError("Backward pass requires a recorded forward")

        # Group regularizer gradients by layer and timestep
        inject: dict[int, list[Tensor | None]] = {}
        if rmp_grads is not None and rmp_weight != 0.0:
            if len(rmp_grads) != len(tape):
                raise UsageError("Expected one regularizer gradient per record")
            for record, grad in zip(tape, rmp_grads):
                steps = inject.setdefault(record.layer, [None] * self.timesteps)
                steps[record.step] = rmp_weight * grad

        # Traverse layers in reverse, each of which handles time internally
        caches, self._caches = self._caches, None
        grads: dict[str, Tensor] = {}
        dy = dlogits
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            if isinstance(layer, SpikingActivation):
                dy, layer_grads = layer.backward(caches[i], dy, inject.get(i))
            else:
                dy, layer_grads = layer.backward(caches[i], dy)
            for name, grad in layer_grads.items():
                grads[f"{i}.{name}"] = grad
        return grads


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def build_network(
    arch: Arch,
    input_shape: Shape,
    classes: int,
    rng: SeededRng,
    *,
    timesteps: int = 4,
    params: NeuronParams | None = None,
    alpha: float = 1.0,
    eps: float = 1e-5,
    bn_momentum: float = 0.9,
) -> Network:
    """Build a reference architecture.

    - `mlp-s`: dense 128, normalization, spikes, dense output head.
    - `cnn-s`: two blocks of 3x3 convolution, normalization, spikes and 2x2
      average pooling with 16 and 32 channels, then a dense output head.
    """
    params = params or NeuronParams()

    def tdbn(channels: int) -> TdBN:
        return TdBN(
            TdBNLayer(
                channels,
                v_th=params.v_th,
                alpha=alpha,
                eps=eps,
                momentum=bn_momentum,
            )
        )

    # Assemble layers for the requested architecture
    layers: list[Layer]
    if arch == "mlp-s":
        if len(input_shape) != 1:
            raise ShapeError(f"mlp-s expects flat inputs, got {input_shape}")
        layers = [
            Dense(rng, input_shape[0], 128),
            tdbn(128),
            SpikingActivation(params),
            Dense(rng, 128, classes),
            OutputHead(),
        ]
    elif arch == "cnn-s":
        if len(input_shape) != 3:
            raise ShapeError(
                f"cnn-s expects (C, H, W) inputs, got {input_shape}"
            )
        c, h, w = input_shape
        layers = [
            Conv2d(rng, c, 16),
            tdbn(16),
            SpikingActivation(params),
            AvgPool(2),
            Conv2d(rng, 16, 32),
            tdbn(32),
            SpikingActivation(params),
            AvgPool(2),
            Flatten(),
            Dense(rng, 32 * (h // 4) * (w // 4), classes),
            OutputHead(),
        ]
    else:
        raise ParameterError(f"Unknown architecture: {arch}")

    log.debug("Built %s for input %s, %d classes", arch, input_shape, classes)
    return Network(layers, timesteps, input_shape)


def input_view(inputs: Tensor, arch: str) -> Tensor:
    """Reshape dataset inputs to what an architecture consumes.

    `mlp-s` consumes flat feature vectors, `cnn-s` consumes images, where
    single-channel `[N, H, W]` images gain a channel axis.
    """
    if arch == "mlp-s":
        return inputs.reshape(len(inputs), -1)
    if inputs.ndim == 3:
        return inputs[:, np.newaxis]
    if inputs.ndim != 4:
        raise ShapeError(
            f"cnn-s needs image inputs, got samples of shape {inputs.shape[1:]}"
        )
    return inputs


def network_from_config(
    config: TrainConfig, input_shape: Shape, classes: int, rng: SeededRng
) -> Network:
    """Build the architecture a training configuration names."""
    return build_network(
        config.arch,  # type: ignore[arg-type]
        input_shape,
        classes,
        rng,
        timesteps=config.timesteps,
        params=NeuronParams(config.tau, config.v_th),
        alpha=config.alpha,
        eps=config.eps,
        bn_momentum=config.bn_momentum,
    )
