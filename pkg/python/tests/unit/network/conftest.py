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

import numpy as np
import pytest

from snn_rmp.config import TrainConfig, load_config
from snn_rmp.core.tensor import SeededRng
from snn_rmp.experiment import Splits, prepare_data
from snn_rmp.network import (
    Dense,
    Network,
    OutputHead,
    SpikingActivation,
    TdBN,
)
from snn_rmp.neuron import NeuronParams
from snn_rmp.normalization import TdBNLayer

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def tiny_network(seed: int, timesteps: int = 2) -> Network:
    """Return a [2 -> 3 -> 2] network with randomized normalization.

    Random scale and shift keep membrane potentials away from the threshold,
    which batch statistics of two samples would otherwise pin them to.
    """
    rng = SeededRng(seed)
    norm = TdBNLayer(3)
    norm.gamma[:] = 0.5 + rng.uniform(3)
    norm.beta[:] = 0.3 * rng.normal(3)
    return Network(
        [
            Dense(rng, 2, 3),
            TdBN(norm),
            SpikingActivation(NeuronParams()),
            Dense(rng, 3, 2),
            OutputHead(),
        ],
        timesteps,
        (2,),
    )


def small_config(*overrides: str) -> TrainConfig:
    """Return a configuration that trains in well under a second."""
    return load_config(
        overrides=[
            "epochs=4",
            "batch_size=16",
            "timesteps=2",
            "dataset.classes=3",
            "dataset.per_class=20",
            "dataset.dim=4",
            *overrides,
        ]
    )


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(name="tiny")
def _fixture_tiny() -> Network:
    """Return a tiny network."""
    return tiny_network(0)


@pytest.fixture(name="config")
def _fixture_config() -> TrainConfig:
    """Return a small training configuration."""
    return small_config()


@pytest.fixture(name="data")
def _fixture_data(config: TrainConfig) -> Splits:
    """Return the data of the small training configuration."""
    return prepare_data(config)


@pytest.fixture(name="batch")
def _fixture_batch() -> tuple[np.ndarray, np.ndarray]:
    """Return two samples for the tiny network, with labels."""
    rng = SeededRng(1)
    return rng.normal((2, 2)), np.array([0, 1])
