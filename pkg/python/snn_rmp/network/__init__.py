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
from snn_rmp.network.model import (
    ARCHS,
    Arch,
    Network,
    build_network,
    input_view,
    network_from_config,
)
from snn_rmp.network.optim import OptimState, cosine_lr, sgd_step
from snn_rmp.network.train import (
    EpochMetrics,
    TrainState,
    collect_tape,
    evaluate,
    train,
)

__all__ = [
    "ARCHS",
    "Arch",
    "AvgPool",
    "Conv2d",
    "Dense",
    "EpochMetrics",
    "Flatten",
    "Layer",
    "Network",
    "OptimState",
    "OutputHead",
    "SpikingActivation",
    "TdBN",
    "TrainState",
    "build_network",
    "collect_tape",
    "cosine_lr",
    "evaluate",
    "input_view",
    "network_from_config",
    "sgd_step",
    "train",
]
