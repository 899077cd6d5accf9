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
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING, Any

import click
from click import ClickException

from snn_rmp import __version__
from snn_rmp.analysis import export_report
from snn_rmp.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from snn_rmp.config import TrainConfig, load_config
from snn_rmp.core.errors import (
    CheckpointError,
    DataError,
    NumericError,
    ParameterError,
    ShapeError,
    UsageError,
)
from snn_rmp.data import synth_blobs, write_csv
from snn_rmp.experiment import (
    Splits,
    analyze_layers,
    check_compatible,
    compare_runs,
    prepare_data,
    run_training,
    summarize,
    write_training_report,
)
from snn_rmp.network.train import EpochMetrics, evaluate
from snn_rmp.utilities.files import write_atomic

if TYPE_CHECKING:
    from collections.abc import Iterator

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

EXIT_CONFIG = 2
"""Exit code of invalid configuration or arguments."""

EXIT_DATA = 3
"""Exit code of unreadable or malformed datasets, and of I/O failures."""

EXIT_NUMERIC = 4
"""Exit code of numeric divergence during training."""

EXIT_CHECKPOINT = 5
"""Exit code of unusable checkpoints."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


class CommandError(ClickException):
    """A command failed with a documented exit code."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


@click.version_option(version=__version__, message="%(version)s")
@click.group()
@click.option(
    "-v",
    "--verbose",
    default=False,
    is_flag=True,
    help="Print debug diagnostics.",
)
def cli(verbose: bool) -> None:
    """snn-rmp - Spiking networks with membrane potential regularization."""
    logger = logging.getLogger("snn_rmp")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    # Diagnostics go to stderr, so stdout only carries metric lines
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


@cli.command(name="train")
@click.option(
    "-f",
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Path to config file (.json, .toml or .yml).",
)
@click.option(
    "-s",
    "--set",
    "overrides",
    metavar="KEY=VALUE",
    multiple=True,
    help="Override a setting, e.g., k=0 or dataset.kind=csv.",
)
@click.option(
    "-r",
    "--resume",
    type=click.Path(dir_okay=False),
    default=None,
    help="Continue the run of a checkpoint.",
)
@click.option(
    "-u",
    "--until-epoch",
    type=click.IntRange(min=1),
    default=None,
    help="Stop before this epoch, to continue later.",
)
@click.option(
    "--no-rmp",
    default=False,
    is_flag=True,
    help="Skip the membrane potential regularizer entirely.",
)
def execute_train(
    config_file: str | None,
    overrides: tuple[str, ...],
    resume: str | None,
    until_epoch: int | None,
    no_rmp: bool,
) -> None:
    """Train a network, then write a checkpoint and a report."""
    with _exit_codes():
        checkpoint = load_checkpoint(resume) if resume else None
        config = load_config(
            config_file,
            list(overrides),
            base=checkpoint.config if checkpoint else None,
        )
        if checkpoint and _settings(config) != _settings(checkpoint.config):
            log.warning(
                "Settings differ from the checkpoint, so the resumed run "
                "will not reproduce an uninterrupted one"
            )
        data = prepare_data(config, checkpoint.stats if checkpoint else None)

        # Print metrics after every epoch
        def on_epoch(metrics: EpochMetrics) -> None:
            click.echo(metrics.line())

        result = run_training(
            config,
            data,
            resume=checkpoint,
            until=until_epoch,
            regularize=not no_rmp,
            on_epoch=on_epoch,
        )
        save_checkpoint(result, config.output.checkpoint)
        final = write_training_report(result, data, config.output.report)
        click.echo(_line("final", final))


@cli.command(name="eval")
@click.argument("checkpoint_file", type=click.Path(dir_okay=False))
@click.option(
    "-f",
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Path to config file, merged over the checkpoint's settings.",
)
@click.option(
    "-s",
    "--set",
    "overrides",
    metavar="KEY=VALUE",
    multiple=True,
    help="Override a setting, e.g., to evaluate on another dataset.",
)
@click.option(
    "--split",
    type=click.Choice(["test", "train"]),
    default="test",
    help="Dataset split to evaluate on.",
)
def execute_eval(
    checkpoint_file: str,
    config_file: str | None,
    overrides: tuple[str, ...],
    split: str,
) -> None:
    """Print the accuracy of a checkpoint on a dataset."""
    with _exit_codes():
        checkpoint, config, data = _load_for_inference(
            checkpoint_file, config_file, overrides
        )
        dataset = data.test if split == "test" else data.train
        accuracy = evaluate(
            checkpoint.network, dataset, batch_size=config.batch_size
        )
        click.echo(f"accuracy={accuracy:.4f}")


@cli.command(name="analyze")
@click.argument("checkpoint_file", type=click.Path(dir_okay=False))
@click.option(
    "-f",
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Path to config file, merged over the checkpoint's settings.",
)
@click.option(
    "-s",
    "--set",
    "overrides",
    metavar="KEY=VALUE",
    multiple=True,
    help="Override a setting, e.g., analysis.lo=-2.",
)
@click.option(
    "--split",
    type=click.Choice(["test", "train"]),
    default="test",
    help="Dataset split to record membrane potentials on.",
)
@click.option(
    "-l",
    "--layer",
    "layers",
    type=int,
    multiple=True,
    help="Index of a spiking layer to analyze (default: all).",
)
@click.option(
    "-b",
    "--bins",
    type=click.IntRange(min=1),
    default=None,
    help="Histogram bins (default: analysis.bins).",
)
@click.option(
    "-e",
    "--epsilon",
    type=float,
    default=None,
    help="Half-width of the spike windows (default: analysis.epsilon).",
)
@click.option(
    "-o",
    "--out",
    type=click.Path(dir_okay=False),
    default="analysis.json",
    show_default=True,
    help="Path of the JSON report.",
)
def execute_analyze(
    checkpoint_file: str,
    config_file: str | None,
    overrides: tuple[str, ...],
    split: str,
    layers: tuple[int, ...],
    bins: int | None,
    epsilon: float | None,
    out: str,
) -> None:
    """Analyze membrane potential distributions of a checkpoint."""
    with _exit_codes():
        checkpoint, config, data = _load_for_inference(
            checkpoint_file, config_file, overrides
        )
        if epsilon is not None:
            analysis = dataclasses.replace(config.analysis, epsilon=epsilon)
            config = dataclasses.replace(config, analysis=analysis)
        dataset = data.test if split == "test" else data.train

        # Record and analyze, then report
        network = checkpoint.network
        analyses = analyze_layers(
            network, dataset, config, layers=layers or None, bins=bins
        )
        final = summarize(network, dataset, config, analyses)
        export_report(
            out,
            config=config.to_dict(),
            metrics=[m.to_dict() for m in checkpoint.state.history],
            final=final,
            histograms=[a.histogram for a in analyses],
            layers=[a.to_dict() for a in analyses],
        )
        for analysis in analyses:
            click.echo(_line("layer", analysis.to_dict()))
        click.echo(_line("final", final))


@cli.command(name="gen-data")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--classes", type=int, default=4, show_default=True)
@click.option("--per-class", type=int, default=500, show_default=True)
@click.option("--dim", type=int, default=16, show_default=True)
@click.option("--spread", type=float, default=0.25, show_default=True)
@click.option(
    "-o",
    "--out",
    type=click.Path(dir_okay=False),
    required=True,
    help="Path of the CSV file.",
)
def execute_gen_data(
    seed: int, classes: int, per_class: int, dim: int, spread: float, out: str
) -> None:
    """Generate a synthetic dataset of Gaussian clusters as CSV."""
    with _exit_codes():
        dataset = synth_blobs(seed, per_class, classes, dim, spread)
        write_csv(dataset, out)
        click.echo(f"samples={len(dataset)} classes={classes} dim={dim}")


@cli.command(name="compare")
@click.option(
    "-f",
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Path to config file (.json, .toml or .yml).",
)
@click.option(
    "-s",
    "--set",
    "overrides",
    metavar="KEY=VALUE",
    multiple=True,
    help="Override a setting, e.g., epochs=20.",
)
@click.option(
    "--seed",
    "seeds",
    type=click.IntRange(min=0),
    multiple=True,
    help="Seed of a pair of runs (default: the configured seed).",
)
@click.option(
    "-c",
    "--checkpoints",
    type=click.Path(file_okay=False),
    default=None,
    help="Directory to keep the checkpoints of both runs of every pair in.",
)
@click.option(
    "-o",
    "--out",
    type=click.Path(dir_okay=False),
    default="compare.json",
    show_default=True,
    help="Path of the JSON summary.",
)
def execute_compare(
    config_file: str | None,
    overrides: tuple[str, ...],
    seeds: tuple[int, ...],
    checkpoints: str | None,
    out: str,
) -> None:
    """Train pairs of runs with and without the regularizer."""
    with _exit_codes():
        config = load_config(config_file, list(overrides))
        data = prepare_data(config)
        if checkpoints is not None:
            Path(checkpoints).mkdir(parents=True, exist_ok=True)

        # Print every pair as soon as it completes
        def on_pair(
            summary: dict[str, Any], base: Checkpoint, rmp: Checkpoint
        ) -> None:
            click.echo(_line("pair", summary))
            if checkpoints is not None:
                seed = summary["seed"]
                save_checkpoint(base, Path(checkpoints, f"base-{seed}.snn"))
                save_checkpoint(rmp, Path(checkpoints, f"rmp-{seed}.snn"))

        pairs = compare_runs(
            config, data, seeds or (config.seed,), on_pair=on_pair
        )
        summary = {"config": config.to_dict(), "pairs": pairs}
        content = json.dumps(
            summary, indent=2, sort_keys=True, allow_nan=False
        )
        write_atomic(out, content.encode())


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Translate library errors into command errors with exit codes."""
    try:
        yield
    except ClickException:
        raise
    except CheckpointError as e:
        raise CommandError(str(e), EXIT_CHECKPOINT) from e
    except NumericError as e:
        raise CommandError(str(e), EXIT_NUMERIC) from e
    except DataError as e:
        raise CommandError(str(e), EXIT_DATA) from e
    except (ParameterError, ShapeError, UsageError) as e:
        raise CommandError(str(e), EXIT_CONFIG) from e
    except OSError as e:
        raise CommandError(str(e), EXIT_DATA) from e


def _load_for_inference(
    checkpoint_file: str, config_file: str | None, overrides: tuple[str, ...]
) -> tuple[Checkpoint, TrainConfig, Splits]:
    """Load a checkpoint together with the data it is to be applied to.

    Settings of the checkpoint are the base that a config file and overrides
    are merged over. Data that the network cannot consume is reported as a
    checkpoint error.
    """
    checkpoint = load_checkpoint(checkpoint_file)
    config = load_config(config_file, list(overrides), base=checkpoint.config)
    try:
        data = prepare_data(config, checkpoint.stats)
        check_compatible(checkpoint.network, data.train)
        check_compatible(checkpoint.network, data.test)
    except (ShapeError, UsageError) as e:
        raise CheckpointError(
            f"{checkpoint_file} does not fit the dataset: {e}"
        ) from e
    return checkpoint, config, data


def _settings(config: TrainConfig) -> dict[str, Any]:
    """Return the settings that determine a training trajectory."""
    settings = config.to_dict()
    settings.pop("output")
    settings.pop("analysis")
    return settings


def _line(prefix: str, values: dict[str, Any]) -> str:
    """Format values as a machine-parseable `key=value` line."""
    parts = [f"{prefix}"]
    for key, value in values.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.6f}")
        else:
            parts.append(f"{key}={value}")
    return " ".join(parts)


# ----------------------------------------------------------------------------
# Program
# ----------------------------------------------------------------------------

if __name__ == "__main__":  # pragma: no cover
    cli()
