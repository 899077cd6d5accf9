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

import dataclasses
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

from snn_rmp.analysis import (
    Histogram,
    KlConfig,
    export_report,
    firing_rate,
    kl_information_loss,
    mean_quant_error,
    membrane_histogram,
)
from snn_rmp.checkpoint import Checkpoint
from snn_rmp.core.errors import DataError, UsageError
from snn_rmp.core.tensor import SeededRng
from snn_rmp.data import (
    Dataset,
    FeatureStats,
    feature_stats,
    load_csv,
    load_idx,
    split,
    standardize,
    synth_blobs,
)
from snn_rmp.network.model import input_view, network_from_config
from snn_rmp.network.optim import OptimState
from snn_rmp.network.train import (
    EpochMetrics,
    TrainState,
    collect_tape,
    evaluate,
    train,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence
    from pathlib import Path

    from snn_rmp.config import DatasetConfig, TrainConfig
    from snn_rmp.network.model import Network

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class Splits:
    """Training and test data, ready to be fed to a network."""

    train: Dataset
    """Training split."""

    test: Dataset
    """Test split."""

    stats: FeatureStats | None = None
    """Standardization statistics fitted on the training split."""


@dataclass
class LayerAnalysis:
    """Membrane potential statistics of one spiking layer."""

    layer: int
    """Index of the spiking layer."""

    quant_error: float
    """Mean quantization error."""

    firing_rate: float
    """Fraction of neuron-timesteps that fire."""

    kl: float
    """Estimated information loss of quantization."""

    histogram: Histogram
    """Distribution of pre-reset membrane potentials."""

    def to_dict(self) -> dict[str, Any]:
        """Return the statistics, without the histogram, as a mapping."""
        return {
            "layer": self.layer,
            "mean_quant_error": self.quant_error,
            "firing_rate": self.firing_rate,
            "kl_estimate": self.kl,
        }


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def load_datasets(config: DatasetConfig) -> tuple[Dataset, Dataset]:
    """Load raw training and test sets from the configured source.

    Synthetic datasets are generated, then split. File-based sources name
    training and test files separately. Both sets end up with the same number
    of classes.
    """
    try:
        if config.kind == "synth":
            dataset = synth_blobs(
                config.seed,
                config.per_class,
                config.classes,
                config.dim,
                config.spread,
            )
            return split(dataset, config.test_fraction, config.seed)
        if config.kind == "csv":
            train_set = load_csv(config.train_path, config.class_count)
            test_set = load_csv(config.test_path, config.class_count)
        else:
            train_set = load_idx(
                config.train_images, config.train_labels, config.class_count
            )
            test_set = load_idx(
                config.test_images, config.test_labels, config.class_count
            )
    except OSError as e:
        raise DataError(f"Cannot read dataset: {e}") from e
    for name, dataset in (("Training", train_set), ("Test", test_set)):
        if not len(dataset):
            raise DataError(f"{name} set is empty")

    # Agree on the number of classes
    classes = max(train_set.class_count, test_set.class_count)
    return (
        Dataset(train_set.inputs, train_set.labels, classes),
        Dataset(test_set.inputs, test_set.labels, classes),
    )


def prepare_data(
    config: TrainConfig, stats: FeatureStats | None = None
) -> Splits:
    """Load, standardize and reshape data for the configured architecture.

    Standardization statistics are fitted on the training split, unless the
    statistics of an earlier run are given.
    """
    train_set, test_set = load_datasets(config.dataset)
    if config.dataset.standardize:
        stats = stats or feature_stats(train_set)
        train_set = standardize(train_set, stats)
        test_set = standardize(test_set, stats)
    else:
        stats = None

    # Reshape inputs to what the architecture consumes
    def view(dataset: Dataset) -> Dataset:
        inputs = input_view(dataset.inputs, config.arch)
        return Dataset(inputs, dataset.labels, dataset.class_count)

    log.info(
        "Loaded %d training and %d test samples of %d classes",
        len(train_set),
        len(test_set),
        train_set.class_count,
    )
    return Splits(view(train_set), view(test_set), stats)


def start_run(config: TrainConfig, data: Splits) -> TrainState:
    """Initialize network, optimizer and generator of a fresh run.

    A single generator, seeded from the configuration, first initializes
    weights and then shuffles minibatches.
    """
    rng = SeededRng(config.seed)
    network = network_from_config(
        config,
        tuple(data.train.inputs.shape[1:]),
        data.train.class_count,
        rng,
    )
    optim = OptimState.for_network(
        network, config.base_lr, config.momentum, config.epochs
    )
    return TrainState(network=network, optim=optim, rng=rng)


def run_training(
    config: TrainConfig,
    data: Splits,
    *,
    resume: Checkpoint | None = None,
    until: int | None = None,
    regularize: bool = True,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
) -> Checkpoint:
    """Train from scratch, or continue the run of a checkpoint."""
    if resume is not None:
        state = resume.state
        check_compatible(state.network, data.train)
        log.info("Resuming at epoch %d", state.epoch)
    else:
        state = start_run(config, data)
    train(
        state,
        data.train,
        data.test,
        config,
        until=until,
        regularize=regularize,
        on_epoch=on_epoch,
    )
    return Checkpoint(state, config, data.stats)


def check_compatible(network: Network, dataset: Dataset) -> None:
    """Ensure that a network can consume a dataset.

    Raises:
        UsageError: If sample shapes or class counts disagree.
    """
    shape = tuple(dataset.inputs.shape[1:])
    if shape != network.input_shape:
        raise UsageError(
            f"Network expects samples of shape {list(network.input_shape)}, "
            f"dataset has {list(shape)}"
        )
    if dataset.class_count > network.classes:
        raise UsageError(
            f"Network has {network.classes} classes, "
            f"dataset has {dataset.class_count}"
        )


# ----------------------------------------------------------------------------


def analyze_layers(
    network: Network,
    dataset: Dataset,
    config: TrainConfig,
    *,
    layers: Sequence[int] | None = None,
    bins: int | None = None,
    epsilon: float | None = None,
) -> list[LayerAnalysis]:
    """Compute membrane potential statistics of spiking layers.

    Arguments:
        network: The network.
        dataset: The dataset to record membrane potentials on.
        config: The configuration, which provides analysis defaults.
        layers: The spiking layers to analyze, defaults to all.
        bins: The number of histogram bins, defaults to `analysis.bins`.
        epsilon: The spike window half-width, defaults to `analysis.epsilon`.

    Returns:
        The statistics of each layer, in layer order.
    """
    settings = config.analysis
    kl_config = KlConfig(
        epsilon=settings.epsilon if epsilon is None else epsilon,
        bins=settings.bins,
    )
    bins = settings.bins if bins is None else bins
    spiking = network.spiking_layers
    for layer in layers or ():
        if layer not in spiking:
            raise UsageError(
                f"Layer {layer} is not a spiking layer, "
                f"choose one of {', '.join(map(str, spiking))}"
            )

    # Record one layer at a time, to bound memory
    result = []
    for layer in layers or spiking:
        tape = collect_tape(
            network, dataset, batch_size=config.batch_size, layer=layer
        )
        rate = firing_rate(tape, config.v_th)
        result.append(
            LayerAnalysis(
                layer=layer,
                quant_error=mean_quant_error(tape, config.v_th, config.p),
                firing_rate=rate,
                kl=kl_information_loss(tape, kl_config, rate),
                histogram=membrane_histogram(
                    tape, bins, settings.lo, settings.hi
                ),
            )
        )
        log.debug("Analyzed layer %d", layer)
    return result


def write_training_report(
    checkpoint: Checkpoint, data: Splits, path: str | Path
) -> dict[str, Any]:
    """Write the report of a training run and return its final metrics.

    Besides the per-epoch metrics, the report carries accuracy, quantization
    error and information loss of the final network on the test split, and
    the membrane potential histogram of every spiking layer.
    """
    config = checkpoint.config
    network = checkpoint.network
    analyses = analyze_layers(network, data.test, config)
    final = summarize(network, data.test, config, analyses)
    export_report(
        path,
        config=config.to_dict(),
        metrics=[m.to_dict() for m in checkpoint.state.history],
        final=final,
        histograms=[a.histogram for a in analyses],
        layers=[a.to_dict() for a in analyses],
    )
    return final


def summarize(
    network: Network,
    dataset: Dataset,
    config: TrainConfig,
    analyses: Sequence[LayerAnalysis],
) -> dict[str, Any]:
    """Aggregate accuracy and per-layer statistics into final metrics.

    Quantization error and firing rate are averaged over layers weighted by
    their number of recorded values, which equals the statistic over all
    layers at once. The information loss estimate is summed over layers.
    """
    sizes = [a.histogram.total for a in analyses]
    total = sum(sizes)
    return {
        "accuracy": evaluate(network, dataset, batch_size=config.batch_size),
        "mean_quant_error": sum(
            a.quant_error * n for a, n in zip(analyses, sizes)
        )
        / total,
        "firing_rate": sum(
            a.firing_rate * n for a, n in zip(analyses, sizes)
        )
        / total,
        "kl_estimate": sum(a.kl for a in analyses),
    }


# ----------------------------------------------------------------------------


def compare_runs(
    config: TrainConfig,
    data: Splits,
    seeds: Sequence[int],
    *,
    on_pair: Callable[[dict[str, Any], Checkpoint, Checkpoint], None]
    | None = None,
) -> list[dict[str, Any]]:
    """Train pairs of runs with and without the regularizer.

    Both runs of a pair share the seed and every setting, except that the
    baseline runs with `k = 0`. For each pair, the final accuracy, mean
    quantization error and information loss estimate on the test split are
    returned side by side.
    """
    if config.k == 0:
        raise UsageError("Comparison needs k > 0, or both runs are identical")
    pairs = []
    for seed in seeds:
        summary: dict[str, Any] = {"seed": seed}
        runs = {}
        for name, k in (("base", 0.0), ("rmp", config.k)):
            run_config = dataclasses.replace(config, seed=seed, k=k)
            checkpoint = run_training(run_config, data)
            analyses = analyze_layers(checkpoint.network, data.test, run_config)
            final = summarize(
                checkpoint.network, data.test, run_config, analyses
            )
            for key in ("accuracy", "mean_quant_error", "kl_estimate"):
                summary[f"{key}_{name}"] = final[key]
            runs[name] = checkpoint
        pairs.append(summary)
        log.info("Completed pair of seed %d", seed)
        if on_pair is not None:
            on_pair(summary, runs["base"], runs["rmp"])
    return pairs
