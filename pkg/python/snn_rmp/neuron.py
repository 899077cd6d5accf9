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
from dataclasses import dataclass
from typing import TYPE_CHECKING, overload

import numpy as np

from snn_rmp.core.errors import ParameterError, ShapeError

if TYPE_CHECKING:
    from snn_rmp.core.tensor import Tensor

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

_SLOPE = 3.0
"""Steepness of the tanh transition inside the surrogate window."""

_SCALE = 2.0 * math.tanh(_SLOPE / 2.0)
"""Normalizer that pins the surrogate to 0 and 1 at the window edges."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class NeuronParams:
    """Constants of the leaky integrate-and-fire neuron."""

    tau: float = 0.25
    """Leak factor applied to the membrane potential each timestep."""

    v_th: float = 0.5
    """Firing threshold."""

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ParameterError(f"tau must be in (0, 1), got {self.tau}")
        if not self.v_th > 0.0:
            raise ParameterError(f"v_th must be > 0, got {self.v_th}")


@dataclass
class LifStepResult:
    """Outcome of advancing a population of neurons by one timestep."""

    u_pre: Tensor
    """Membrane potential after integration, before reset."""

    spikes: Tensor
    """Emitted spikes, exactly 0 or 1 per neuron."""

    u_post: Tensor
    """Membrane potential after hard reset."""


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def lif_step(u_prev: Tensor, x: Tensor, params: NeuronParams) -> LifStepResult:
    """Advance leaky integrate-and-fire neurons by one timestep.

    The membrane leaks by `tau` and integrates the input. Neurons whose
    potential reaches the threshold fire - ties fire - and are hard reset to
    zero, while all others carry their potential over to the next step.
    """
    u_prev, x = np.asarray(u_prev, float), np.asarray(x, float)
    if u_prev.shape != x.shape:
        raise ShapeError(
            f"Membrane and input shapes differ: {u_prev.shape} vs {x.shape}"
        )

    # Integrate, fire, reset
    u_pre = params.tau * u_prev + x
    spikes = (u_pre >= params.v_th).astype(np.float64)
    return LifStepResult(u_pre, spikes, u_pre * (1.0 - spikes))


def output_accumulate(u_prev: Tensor, x: Tensor) -> Tensor:
    """Advance output neurons, which integrate without leak, spike or reset."""
    u_prev, x = np.asarray(u_prev, float), np.asarray(x, float)
    if u_prev.shape != x.shape:
        raise ShapeError(
            f"Accumulator and input shapes differ: {u_prev.shape} vs {x.shape}"
        )
    return u_prev + x


# ----------------------------------------------------------------------------


@overload
def surrogate_phi(u: float) -> float: ...
@overload
def surrogate_phi(u: Tensor) -> Tensor: ...
def surrogate_phi(u: float | Tensor) -> float | Tensor:
    """Smooth stand-in for the firing step.

    Flat at 0 below the window `[0, 1]` and at 1 above it, with a scaled tanh
    in between that meets both plateaus continuously.
    """
    x = np.asarray(u, dtype=np.float64)
    core = np.tanh(_SLOPE * (x - 0.5)) / _SCALE + 0.5
    value = np.where(x < 0.0, 0.0, np.where(x > 1.0, 1.0, core))
    return float(value) if np.ndim(u) == 0 else value


@overload
def surrogate_grad(u: float) -> float: ...
@overload
def surrogate_grad(u: Tensor) -> Tensor: ...
def surrogate_grad(u: float | Tensor) -> float | Tensor:
    """Derivative of `surrogate_phi`, zero outside the window `[0, 1]`."""
    x = np.asarray(u, dtype=np.float64)
    core = _SLOPE * (1.0 - np.tanh(_SLOPE * (x - 0.5)) ** 2) / _SCALE
    value = np.where((x < 0.0) | (x > 1.0), 0.0, core)
    return float(value) if np.ndim(u) == 0 else value
