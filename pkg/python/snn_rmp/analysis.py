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

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.special import rel_entr

from snn_rmp.core.errors import NumericError, ParameterError, UsageError
from snn_rmp.loss import MembraneTape, rmp_loss
from snn_rmp.utilities.files import write_atomic

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from snn_rmp.core.tensor import Tensor

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

SCHEMA_VERSION = "1"
"""Version of the report format."""

SPIKE_VALUES = (0.0, 1.0)
"""Values a spiking neuron can emit."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class Histogram:
    """Counts of values in uniform bins over `[lo, hi)`."""

    lo: float
    """Lower bound, inclusive."""

    hi: float
    """Upper bound, exclusive."""

    counts: list[int]
    """Number of values per bin."""

    underflow: int = 0
    """Number of values below `lo`."""

    overflow: int = 0
    """Number of values at or above `hi`."""

    total: int = 0
    """Number of values, including under- and overflow."""

    layer: int | None = None
    """Index of the spiking layer the values come from, if a single one."""

    @property
    def width(self) -> float:
        """Width of a bin."""
        return (self.hi - self.lo) / len(self.counts)

    def density(self) -> Tensor:
        """Return the empirical density per bin, relative to all values."""
        if not self.total:
            return np.zeros(len(self.counts))
        return np.asarray(self.counts, dtype=np.float64) / (
            self.total * self.width
        )

    def density_at(self, x: float) -> float:
        """Return the empirical density in the bin containing `x`."""
        if not self.lo <= x < self.hi:
            return 0.0
        index = min(int((x - self.lo) / self.width), len(self.counts) - 1)
        return float(self.density()[index])

    def to_dict(self) -> dict[str, Any]:
        """Return the histogram as a plain mapping."""
        return asdict(self)


@dataclass(frozen=True)
class KlConfig:
    """Settings of the information loss estimate."""

    epsilon: float = 0.05
    """Half-width of the window around each spike value."""

    bins: int = 200
    """Bins per window."""

    spike_values: tuple[float, ...] = field(default=SPIKE_VALUES)
    """Spike values the windows are centered on."""

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 0.5:
            raise ParameterError(
                f"epsilon must be in (0, 0.5), got {self.epsilon}"
            )
        if self.bins < 10:
            raise ParameterError(f"bins must be >= 10, got {self.bins}")


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def mean_quant_error(tape: MembraneTape, v_th: float, p: float) -> float:
    """Mean quantization error of all recorded membrane potentials."""
    return rmp_loss(tape, v_th, p)


def firing_rate(tape: MembraneTape, v_th: float) -> float:
    """Fraction of recorded neuron-timesteps that fire."""
    if tape.size == 0:
        raise UsageError("Membrane tape is empty")
    fired = sum(int(np.count_nonzero(r.u_pre >= v_th)) for r in tape)
    return fired / tape.size


def membrane_histogram(
    tape: MembraneTape | Tensor, bins: int, lo: float, hi: float
) -> Histogram:
    """Count membrane potentials in `bins` uniform bins over `[lo, hi)`."""
    if bins < 1:
        raise ParameterError(f"bins must be >= 1, got {bins}")
    if not hi > lo:
        raise ParameterError(f"hi must be > lo, got [{lo}, {hi})")

    # Collect values, and remember the layer if there's only one
    layer = None
    if isinstance(tape, MembraneTape):
        layers = tape.layers()
        layer = layers[0] if len(layers) == 1 else None
        values = tape.values()
    else:
        values = np.ravel(tape)

    # Bin in-range values, guarding against rounding at the upper edge
    inside = (values >= lo) & (values < hi)
    index = np.floor((values[inside] - lo) / (hi - lo) * bins).astype(np.int64)
    counts = np.bincount(np.minimum(index, bins - 1), minlength=bins)
    return Histogram(
        lo,
        hi,
        [int(count) for count in counts],
        underflow=int(np.count_nonzero(values < lo)),
        overflow=int(np.count_nonzero(values >= hi)),
        total=int(values.size),
        layer=layer,
    )


def kl_information_loss(
    tape: MembraneTape | Tensor, cfg: KlConfig, firing_rate: float
) -> float:
    """Estimate the information lost by quantizing membrane potentials.

    The membrane density is estimated with a histogram over a window of
    half-width `epsilon` around each spike value, and normalized with respect
    to all values. The spike density is modelled as uniform within each
    window, carrying `1 - firing_rate` of the mass around 0 and `firing_rate`
    around 1. The divergence integral is evaluated with the midpoint rule over
    the bins, where empty bins contribute nothing. A window without spike
    mass, i.e., around 1 when no neuron fires or around 0 when all do, has no
    finite divergence and is left out.
    """
    if not 0.0 <= firing_rate <= 1.0:
        raise ParameterError(
            f"firing_rate must be in [0, 1], got {firing_rate}"
        )
    values = tape.values() if isinstance(tape, MembraneTape) else np.ravel(tape)
    if values.size == 0:
        raise UsageError("Membrane tape is empty")

    # Integrate relative entropy of membrane against spike density per window
    eps = cfg.epsilon
    estimate = 0.0
    for spike in cfg.spike_values:
        mass = firing_rate if spike >= 0.5 else 1.0 - firing_rate
        if mass == 0.0:
            log.debug("Skipped window around %g without spike mass", spike)
            continue
        hist = membrane_histogram(values, cfg.bins, spike - eps, spike + eps)
        p_u = hist.density()
        p_o = np.full_like(p_u, mass / (2.0 * eps))
        estimate += float(np.sum(rel_entr(p_u, p_o)) * hist.width)
    return estimate


# ----------------------------------------------------------------------------


def export_report(
    path: str | Path,
    *,
    config: dict[str, Any],
    metrics: Sequence[dict[str, Any]],
    final: dict[str, Any],
    histograms: Sequence[Histogram],
    layers: Sequence[dict[str, Any]] = (),
) -> None:
    """Write a JSON report, atomically.

    Floating point numbers are serialized in their shortest exact form, so
    parsing the report reproduces every value.
    """
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "metrics": list(metrics),
        "final": final,
        "layers": list(layers),
        "histograms": [h.to_dict() for h in histograms],
    }
    try:
        data = json.dumps(report, indent=2, sort_keys=True, allow_nan=False)
    except ValueError as e:
        raise NumericError(f"Report holds non-finite values: {e}") from e
    write_atomic(path, data.encode())
    log.info("Report written to %s", path)


def load_report(path: str | Path) -> dict[str, Any]:
    """Read a JSON report."""
    with open(path, encoding="utf-8") as f:
        return json.load(f)
