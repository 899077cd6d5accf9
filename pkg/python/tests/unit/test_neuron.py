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

import numpy as np
import pytest

from snn_rmp.core import ParameterError, ShapeError
from snn_rmp.core.tensor import SeededRng
from snn_rmp.neuron import (
    NeuronParams,
    lif_step,
    output_accumulate,
    surrogate_grad,
    surrogate_phi,
)

# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


class TestNeuronParams:
    """Tests for NeuronParams."""

    def test_defaults(self) -> None:
        """Defaults are a leak of 0.25 and a threshold of 0.5."""
        params = NeuronParams()
        assert params.tau == 0.25
        assert params.v_th == 0.5

    @pytest.mark.parametrize(
        ("tau", "v_th"),
        [
            pytest.param(0.0, 0.5, id="tau-zero"),
            pytest.param(1.0, 0.5, id="tau-one"),
            pytest.param(0.25, 0.0, id="v_th-zero"),
        ],
    )
    def test_invalid(self, tau: float, v_th: float) -> None:
        """Out-of-range constants are rejected."""
        with pytest.raises(ParameterError):
            NeuronParams(tau, v_th)


class TestLifStep:
    """Tests for lif_step."""

    @pytest.mark.parametrize(
        ("u_prev", "x", "u_pre", "spike", "u_post"),
        [
            pytest.param(0.0, 0.6, 0.6, 1.0, 0.0, id="fire"),
            pytest.param(0.4, 0.0, 0.1, 0.0, 0.1, id="leak"),
            pytest.param(0.0, 0.5, 0.5, 1.0, 0.0, id="tie-fires"),
        ],
    )
    def test_step(
        self,
        u_prev: float,
        x: float,
        u_pre: float,
        spike: float,
        u_post: float,
    ) -> None:
        """Integration, firing and hard reset follow the LIF equations."""
        step = lif_step(np.array([u_prev]), np.array([x]), NeuronParams())
        assert step.u_pre[0] == pytest.approx(u_pre)
        assert step.spikes[0] == spike
        assert step.u_post[0] == pytest.approx(u_post)

    def test_invariants(self, rng: SeededRng) -> None:
        """Spikes are binary and fired neurons are reset to zero."""
        u_prev, x = rng.normal((50,)), rng.normal((50,))
        step = lif_step(u_prev, x, NeuronParams())
        assert set(np.unique(step.spikes)) <= {0.0, 1.0}
        assert np.all(step.u_post[step.spikes == 1.0] == 0.0)
        np.testing.assert_array_equal(
            step.u_post, step.u_pre * (1.0 - step.spikes)
        )

    def test_scale_invariance(self, rng: SeededRng) -> None:
        """Scaling potentials and threshold alike keeps the spike pattern."""
        x = rng.normal((100,))
        zero = np.zeros(100)
        a = lif_step(zero, x, NeuronParams(0.25, 0.5))
        b = lif_step(zero, 4.0 * x, NeuronParams(0.25, 2.0))
        np.testing.assert_array_equal(a.spikes, b.spikes)

    def test_shape_mismatch(self) -> None:
        """Membrane and input must have the same shape."""
        with pytest.raises(ShapeError):
            lif_step(np.zeros(2), np.zeros(3), NeuronParams())


class TestOutputAccumulate:
    """Tests for output_accumulate."""

    @pytest.mark.parametrize(
        ("u_prev", "x", "expected"),
        [
            pytest.param(0.0, 1.3, 1.3, id="from-rest"),
            pytest.param(-1.0, 1.0, 0.0, id="cancel"),
        ],
    )
    def test_sum(self, u_prev: float, x: float, expected: float) -> None:
        """Output neurons add their input without leak or reset."""
        result = output_accumulate(np.array([u_prev]), np.array([x]))
        assert result[0] == pytest.approx(expected)

    def test_over_time(self) -> None:
        """Accumulating 0.5 over four steps yields 2."""
        u = np.zeros(1)
        for _ in range(4):
            u = output_accumulate(u, np.array([0.5]))
        assert u[0] == 2.0

    def test_shape_mismatch(self) -> None:
        """Shapes must match."""
        with pytest.raises(ShapeError):
            output_accumulate(np.zeros(2), np.zeros(1))


# ---------------------------------------------------------------------------
# Surrogate
# ---------------------------------------------------------------------------


class TestSurrogate:
    """Tests for surrogate_phi and surrogate_grad."""

    @pytest.mark.parametrize(
        ("u", "expected"),
        [
            pytest.param(0.0, 0.0, id="lower-edge"),
            pytest.param(0.5, 0.5, id="center"),
            pytest.param(1.0, 1.0, id="upper-edge"),
            pytest.param(-2.0, 0.0, id="below"),
            pytest.param(3.0, 1.0, id="above"),
        ],
    )
    def test_phi(self, u: float, expected: float) -> None:
        """The surrogate joins its plateaus continuously."""
        assert surrogate_phi(u) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize(
        "u",
        [pytest.param(-0.1, id="below"), pytest.param(1.1, id="above")],
    )
    def test_grad_outside_window(self, u: float) -> None:
        """The derivative vanishes outside the window."""
        assert surrogate_grad(u) == 0.0

    def test_grad_center(self) -> None:
        """The derivative peaks at the center of the window."""
        expected = 3.0 / (2.0 * math.tanh(1.5))
        assert surrogate_grad(0.5) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
    def test_grad_symmetry(self, d: float) -> None:
        """The derivative is even about the center of the window."""
        assert surrogate_grad(0.5 - d) == pytest.approx(
            surrogate_grad(0.5 + d), rel=1e-12
        )

    @pytest.mark.parametrize("u", np.round(np.arange(1, 20) * 0.05, 2))
    def test_grad_matches_finite_differences(self, u: float) -> None:
        """The derivative matches central differences of the surrogate."""
        h = 1e-6
        fd = (surrogate_phi(u + h) - surrogate_phi(u - h)) / (2.0 * h)
        assert surrogate_grad(u) == pytest.approx(fd, rel=1e-5)

    def test_phi_monotone(self) -> None:
        """The surrogate never decreases."""
        values = surrogate_phi(np.linspace(-1.0, 2.0, 3001))
        assert np.all(np.diff(values) >= 0.0)

    def test_vectorized(self) -> None:
        """Tensors are mapped elementwise."""
        u = np.array([[-1.0, 0.5], [0.5, 2.0]])
        np.testing.assert_allclose(surrogate_phi(u), [[0, 0.5], [0.5, 1]])
        assert surrogate_grad(u).shape == (2, 2)
