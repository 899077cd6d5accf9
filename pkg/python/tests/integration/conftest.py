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

from typing import TYPE_CHECKING

import pytest
from click.testing import CliRunner, Result

from snn_rmp.main import cli

if TYPE_CHECKING:
    from pathlib import Path

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

SMOKE = (
    "epochs=3",
    "batch_size=16",
    "timesteps=2",
    "dataset.classes=3",
    "dataset.per_class=20",
    "dataset.dim=4",
)
"""Settings of a training run that finishes in about a second."""

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def invoke(*args: str) -> Result:
    """Run the command line interface in-process."""
    return CliRunner().invoke(cli, list(args))


def settings(*overrides: str) -> list[str]:
    """Return `--set` arguments for the smoke settings and overrides."""
    args = []
    for override in (*SMOKE, *overrides):
        args.extend(["--set", override])
    return args


def lines(result: Result, prefix: str) -> list[dict[str, str]]:
    """Parse the `key=value` lines of a command that start with `prefix`."""
    parsed = []
    for line in result.output.splitlines():
        words = line.split()
        if words and words[0] == prefix:
            words = words[1:]
        elif not words or not words[0].startswith(f"{prefix}="):
            continue
        parsed.append(dict(word.split("=", 1) for word in words))
    return parsed


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(autouse=True)
def _fixture_workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Run every test in a fresh working directory."""
    monkeypatch.chdir(tmp_path)


@pytest.fixture(name="trained", scope="module")
def _fixture_trained(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Train once per module and return the run's directory."""
    root = tmp_path_factory.mktemp("trained")
    result = invoke(
        "train",
        *settings(
            f"output.checkpoint={root / 'run.snn'}",
            f"output.report={root / 'report.json'}",
        ),
    )
    assert result.exit_code == 0, result.output
    return root
