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
from typing import TYPE_CHECKING, Any, TypeAlias

import numpy as np
from numpy.random import PCG64, Generator

from snn_rmp.core.errors import NumericError, ParameterError, ShapeError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

# ----------------------------------------------------------------------------
# Types
# ----------------------------------------------------------------------------

Tensor: TypeAlias = "NDArray[np.float64]"
"""
Dense, row-major array of 64-bit reals.

Every numeric quantity in this package is carried by a tensor, from the 5D
`[T, B, C, H, W]` pre-activations that threshold-dependent batch normalization
consumes, to the flat parameter vectors that make up a checkpoint payload.
"""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


class SeededRng:
    """Deterministic random number generator.

    Wraps a PCG64 bit generator, which yields the same stream for the same
    seed on every platform. The full generator state can be captured and
    restored, which is what allows a resumed training run to continue with
    exactly the random draws an uninterrupted run would have made.
    """

    def __init__(self, seed: int):
        """Initialize the generator.

        Arguments:
            seed: The seed, a non-negative integer.
        """
        if seed < 0:
            raise ParameterError(f"Seed must be non-negative, got {seed}")
        self.generator = Generator(PCG64(seed))

    # ------------------------------------------------------------------------

    @property
    def state(self) -> dict[str, Any]:
        """Return the generator state as a JSON-serializable mapping."""
        return self.generator.bit_generator.state

    @state.setter
    def state(self, value: dict[str, Any]) -> None:
        self.generator.bit_generator.state = value

    @classmethod
    def from_state(cls, state: dict[str, Any]) -> SeededRng:
        """Create a generator positioned at a previously captured state."""
        rng = cls(0)
        rng.state = state
        return rng

    # ------------------------------------------------------------------------

    def uniform(self, size: int | Sequence[int]) -> Tensor:
        """Draw uniform samples from `[0, 1)`."""
        return self.generator.random(size)

    def normal(self, size: int | Sequence[int]) -> Tensor:
        """Draw standard normal samples."""
        return self.generator.standard_normal(size)

    def permutation(self, n: int) -> NDArray[np.int64]:
        """Return a random permutation of `range(n)`."""
        return self.generator.permutation(n)


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def new_tensor(shape: Sequence[int], fill: float = 0.0) -> Tensor:
    """Create a tensor of the given shape with every element set to `fill`."""
    shape = _check_shape(shape)
    return np.full(shape, fill, dtype=np.float64)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Multiply two matrices, `[M, K] x [K, N] -> [M, N]`."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(
            f"matmul expects two matrices, got {a.shape} and {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"Inner dimensions disagree: {a.shape} x {b.shape}"
        )
    return a @ b


def gauss(
    rng: SeededRng, shape: Sequence[int], mean: float = 0.0, std: float = 1.0
) -> Tensor:
    """Draw i.i.d. normal samples with the given mean and standard deviation.

    A standard deviation of zero is allowed and yields a constant tensor.
    """
    shape = _check_shape(shape)
    if not math.isfinite(std) or std < 0:
        raise ParameterError(f"Standard deviation must be >= 0, got {std}")
    return mean + std * rng.normal(shape)


def check_finite(tensor: Tensor | float, what: str) -> None:
    """Raise a numeric error if `tensor` holds NaN or infinite values."""
    if not np.all(np.isfinite(tensor)):
        raise NumericError(f"Non-finite values encountered in {what}")


# ----------------------------------------------------------------------------


def _check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    """Validate a dimension list and return it as a tuple."""
    dims = tuple(int(dim) for dim in shape)
    if not dims or any(dim < 1 for dim in dims):
        raise ShapeError(f"All dimensions must be >= 1, got {list(dims)}")
    return dims
