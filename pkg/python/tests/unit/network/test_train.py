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
from typing import TYPE_CHECKING

import numpy as np
import pytest

from snn_rmp.core import NumericError, ParameterError, UsageError
from snn_rmp.core.tensor import SeededRng
from snn_rmp.data import Dataset
from snn_rmp.experiment import run_training, start_run
from snn_rmp.loss import MembraneTape
from snn_rmp.network import (
    EpochMetrics,
    Network,
    build_network,
    collect_tape,
    evaluate,
    train,
)
from snn_rmp.network.train import THREADS_ENV
from tests.unit.network.conftest import small_config

if TYPE_CHECKING:
    from snn_rmp.config import TrainConfig
    from snn_rmp.experiment import Splits

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


class _Passthrough:
    """Stand-in network whose logits are its inputs."""

    def forward(
        self, x: np.ndarray, *, record: bool = False, training: bool = False
    ) -> tuple[np.ndarray, MembraneTape]:
        return x, MembraneTape()


def _evaluate(logits: list[list[float]], labels: list[int]) -> float:
    """Evaluate the passthrough network on the given logits."""
    dataset = Dataset(np.array(logits), np.array(labels), 3)
    network: Network = _Passthrough()  # type: ignore[assignment]
    return evaluate(network, dataset, threads=1)


def _assert_same_parameters(a: Network, b: Network) -> None:
    """Assert that two networks are bit-identical."""
    pa, pb = a.parameters(), b.parameters()
    assert pa.keys() == pb.keys()
    for name in pa:
        assert np.array_equal(pa[name], pb[name]), name
    for name, value in a.buffers().items():
        assert np.array_equal(value, b.buffers()[name]), name


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


class TestTrain:
    """Tests for train."""

    def test_history(self, config: TrainConfig, data: Splits) -> None:
        """Every epoch is recorded with its metrics."""
        seen: list[EpochMetrics] = []
        checkpoint = run_training(config, data, on_epoch=seen.append)
        history = checkpoint.state.history
        assert history == seen
        assert [m.epoch for m in history] == [0, 1, 2, 3]
        lams = [m.lam for m in history]
        assert lams == pytest.approx([0.0, 0.05, 0.1, 0.05], abs=1e-15)
        assert checkpoint.state.epoch == 4
        for metrics in history:
            assert metrics.rmp is not None
            assert metrics.loss == pytest.approx(
                metrics.ce + metrics.lam * metrics.rmp, rel=1e-9
            )
            assert 0.0 <= metrics.accuracy <= 1.0
            assert 0.0 <= metrics.firing_rate <= 1.0
            assert metrics.quant_error >= 0.0

    def test_deterministic(self, config: TrainConfig, data: Splits) -> None:
        """Equal seeds train bit-identical networks."""
        a = run_training(config, data)
        b = run_training(config, data)
        _assert_same_parameters(a.network, b.network)
        assert a.state.history == b.state.history

    def test_seed_matters(self, config: TrainConfig, data: Splits) -> None:
        """Different seeds train different networks."""
        a = run_training(config, data)
        b = run_training(small_config("seed=1"), data)
        assert not np.array_equal(
            a.network.parameters()["0.weight"],
            b.network.parameters()["0.weight"],
        )

    def test_zero_weight_is_vanilla(self, data: Splits) -> None:
        """Without weight, the regularizer leaves training unchanged."""
        config = small_config("k=0")
        a = run_training(config, data)
        b = run_training(config, data, regularize=False)
        _assert_same_parameters(a.network, b.network)
        for ma, mb in zip(a.state.history, b.state.history):
            assert ma.loss == mb.loss
            assert ma.ce == mb.ce
            assert mb.rmp is None

    def test_regularizer_matters(self, data: Splits) -> None:
        """With weight, the regularizer changes the trajectory."""
        a = run_training(small_config("k=0"), data)
        b = run_training(small_config("k=1"), data)
        assert not np.array_equal(
            a.network.parameters()["0.weight"],
            b.network.parameters()["0.weight"],
        )

    def test_until(self, config: TrainConfig, data: Splits) -> None:
        """Training in parts equals training at once."""
        whole = run_training(config, data)
        state = start_run(config, data)
        train(state, data.train, data.test, config, until=2)
        assert state.epoch == 2
        train(state, data.train, data.test, config)
        _assert_same_parameters(whole.network, state.network)
        assert whole.state.history == state.history
        assert whole.state.rng.state == state.rng.state

    def test_single_step(self, data: Splits) -> None:
        """One epoch of one batch takes exactly one step."""
        config = small_config("epochs=1", "batch_size=1000", "momentum=0.5")
        state = start_run(config, data)
        before = {k: v.copy() for k, v in state.network.parameters().items()}
        train(state, data.train, data.test, config)
        for name, value in state.network.parameters().items():
            np.testing.assert_allclose(
                (before[name] - value) / config.base_lr,
                state.optim.buffers[name],
                rtol=1e-9,
                atol=1e-12,
            )

    def test_divergence(self, config: TrainConfig, data: Splits) -> None:
        """Non-finite losses abort training."""
        state = start_run(config, data)
        state.network.parameters()["3.weight"][0, 0] = math.nan
        with pytest.raises(NumericError, match="epoch 0"):
            train(state, data.train, data.test, config)

    @pytest.mark.parametrize(
        "empty",
        [pytest.param("train", id="train"), pytest.param("test", id="test")],
    )
    def test_empty(
        self, config: TrainConfig, data: Splits, empty: str
    ) -> None:
        """Training and measuring need samples."""
        state = start_run(config, data)
        none = Dataset(np.zeros((0, 4)), np.zeros(0, dtype=np.int64), 3)
        train_set = none if empty == "train" else data.train
        test_set = none if empty == "test" else data.test
        with pytest.raises(UsageError, match=f"(?i){empty}"):
            train(state, train_set, test_set, config)

    def test_line(self) -> None:
        """Summary lines are key-value pairs."""
        metrics = EpochMetrics(3, 0.05, 1.5, 1.25, None, 0.1, 0.2, 0.75)
        assert metrics.line() == (
            "epoch=3 lambda=0.050000 loss=1.500000 rmp=nan qerr=0.100000 "
            "rate=0.200000 acc=0.7500"
        )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class TestEvaluate:
    """Tests for evaluate."""

    def test_perfect(self) -> None:
        """Winning classes that match every label score 1."""
        assert _evaluate([[0.0, 2.0, 1.0]], [1]) == 1.0

    def test_ties(self) -> None:
        """Ties go to the lowest class index."""
        logits = [[1.0, 1.0, 0.0], [0.0, 3.0, 3.0]]
        assert _evaluate(logits, [0, 1]) == 1.0
        assert _evaluate(logits, [1, 2]) == 0.0

    def test_shift_invariance(self) -> None:
        """Adding a constant to all logits of a sample changes nothing."""
        logits = np.array([[0.5, 0.1, 0.4], [0.2, 0.3, 0.1]])
        labels = [0, 2]
        shifted = logits + np.array([[10.0], [-3.0]])
        assert _evaluate(logits.tolist(), labels) == 0.5
        assert _evaluate(shifted.tolist(), labels) == 0.5

    def test_chance(self) -> None:
        """An untrained network guesses permuted labels at chance level."""
        classes, per_class = 4, 250
        rng = SeededRng(11)
        inputs = rng.normal((classes * per_class, 8))
        labels = np.repeat(np.arange(classes), per_class)
        dataset = Dataset(inputs, labels[rng.permutation(len(labels))], 4)
        network = build_network("mlp-s", (8,), classes, SeededRng(12))
        sigma = math.sqrt(0.25 * 0.75 / len(dataset))
        assert abs(evaluate(network, dataset) - 0.25) <= 3.0 * sigma

    def test_threads(
        self, data: Splits, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Parallel evaluation agrees with sequential evaluation."""
        network = start_run(small_config(), data).network
        expected = evaluate(network, data.test, batch_size=5, threads=1)
        monkeypatch.setenv(THREADS_ENV, "3")
        assert evaluate(network, data.test, batch_size=5) == expected

    @pytest.mark.parametrize("value", ["0", "-2", "many"])
    def test_invalid_threads(
        self, tiny: Network, value: str, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """The thread cap must be a positive integer."""
        monkeypatch.setenv(THREADS_ENV, value)
        with pytest.raises(ParameterError, match=THREADS_ENV):
            evaluate(tiny, Dataset(np.ones((1, 2)), np.zeros(1), 2))

    def test_default_threads(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Without a cap, evaluation runs in the calling thread."""
        monkeypatch.delenv(THREADS_ENV, raising=False)
        dataset = Dataset(np.eye(3), np.arange(3), 3)
        network: Network = _Passthrough()  # type: ignore[assignment]
        assert evaluate(network, dataset) == 1.0

    def test_empty(self, tiny: Network) -> None:
        """Empty datasets cannot be evaluated."""
        with pytest.raises(UsageError):
            evaluate(tiny, Dataset(np.zeros((0, 2)), np.zeros(0), 2))


# ---------------------------------------------------------------------------
# Recording
# ---------------------------------------------------------------------------


class TestCollectTape:
    """Tests for collect_tape."""

    def test_all_layers(self) -> None:
        """Every sample, spiking layer and timestep is recorded."""
        network = build_network(
            "cnn-s", (1, 4, 4), 2, SeededRng(0), timesteps=3
        )
        dataset = Dataset(SeededRng(1).normal((5, 1, 4, 4)), np.zeros(5), 2)
        tape = collect_tape(network, dataset, batch_size=2)
        assert len(tape) == 3 * 2 * 3
        assert tape.size == 5 * 3 * (16 * 4 * 4 + 32 * 2 * 2)

    def test_single_layer(self) -> None:
        """Records can be restricted to one spiking layer."""
        network = build_network(
            "cnn-s", (1, 4, 4), 2, SeededRng(0), timesteps=3
        )
        dataset = Dataset(SeededRng(1).normal((5, 1, 4, 4)), np.zeros(5), 2)
        tape = collect_tape(network, dataset, batch_size=2, layer=6)
        assert tape.layers() == [6]
        assert tape.size == 5 * 3 * 32 * 2 * 2

    def test_empty(self, tiny: Network) -> None:
        """Empty datasets cannot be recorded."""
        with pytest.raises(UsageError):
            collect_tape(tiny, Dataset(np.zeros((0, 2)), np.zeros(0), 2))
