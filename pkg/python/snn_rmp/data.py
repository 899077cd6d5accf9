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

import csv
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from snn_rmp.core.errors import (
    DataError,
    FormatError,
    ParameterError,
    ShapeError,
)
from snn_rmp.core.tensor import SeededRng

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from snn_rmp.core.tensor import Tensor

log = logging.getLogger(__name__)

# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

IDX_IMAGES_MAGIC = 0x00000803
"""Magic number of IDX files holding unsigned byte images `[n, rows, cols]`."""

IDX_LABELS_MAGIC = 0x00000801
"""Magic number of IDX files holding unsigned byte labels `[n]`."""

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


@dataclass
class Dataset:
    """Labelled samples."""

    inputs: Tensor
    """Samples, stacked along the first axis."""

    labels: NDArray[np.int64]
    """Class index of each sample."""

    class_count: int
    """Number of classes."""

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim < 2 or len(self.inputs) != len(self.labels):
            raise DataError(
                f"Expected one label per sample, got inputs of shape "
                f"{self.inputs.shape} and {len(self.labels)} labels"
            )
        if self.class_count < 1:
            raise DataError(f"class_count must be >= 1, got {self.class_count}")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.class_count
        ):
            raise DataError(f"Labels must be in [0, {self.class_count})")
        if not np.all(np.isfinite(self.inputs)):
            raise DataError("Inputs must be finite")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indexes: NDArray[np.int64]) -> Dataset:
        """Return the samples at the given indexes."""
        return Dataset(
            self.inputs[indexes], self.labels[indexes], self.class_count
        )


@dataclass
class FeatureStats:
    """Per-feature mean and standard deviation of a training split."""

    mean: Tensor
    """Mean of each feature."""

    std: Tensor
    """Standard deviation of each feature, 0 for constant features."""


# ----------------------------------------------------------------------------
# Functions
# ----------------------------------------------------------------------------


def load_idx(
    image_path: str | Path,
    label_path: str | Path,
    class_count: int | None = None,
) -> Dataset:
    """Load big-endian IDX image and label files.

    Pixel bytes are scaled to `[0, 1]`. If `class_count` is not given, it is
    inferred from the largest label.
    """
    images = Path(image_path).read_bytes()
    labels = Path(label_path).read_bytes()

    # Parse image header: magic, count, rows, columns
    if len(images) < 16:
        raise FormatError(f"{image_path}: truncated IDX header")
    magic, count, rows, cols = struct.unpack(">IIII", images[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(
            f"{image_path}: expected image magic {IDX_IMAGES_MAGIC:#010x}, "
            f"got {magic:#010x}"
        )
    if len(images) != 16 + count * rows * cols:
        raise FormatError(f"{image_path}: payload does not match header")

    # Parse label header: magic, count
    if len(labels) < 8:
        raise FormatError(f"{label_path}: truncated IDX header")
    magic, label_count = struct.unpack(">II", labels[:8])
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(
            f"{label_path}: expected label magic {IDX_LABELS_MAGIC:#010x}, "
            f"got {magic:#010x}"
        )
    if len(labels) != 8 + label_count:
        raise FormatError(f"{label_path}: payload does not match header")
    if label_count != count:
        raise FormatError(
            f"Image count {count} does not match label count {label_count}"
        )

    # Decode payloads
    pixels = np.frombuffer(images, dtype=np.uint8, offset=16)
    inputs = pixels.reshape(count, rows, cols).astype(np.float64) / 255.0
    targets = np.frombuffer(labels, dtype=np.uint8, offset=8).astype(np.int64)
    if class_count is None:
        class_count = int(targets.max()) + 1 if count else 1
    elif targets.size and targets.max() >= class_count:
        raise FormatError(
            f"{label_path}: label {targets.max()} is not in [0, {class_count})"
        )
    return Dataset(inputs, targets, class_count)


def write_idx(
    dataset: Dataset, image_path: str | Path, label_path: str | Path
) -> None:
    """Write a dataset of `[n, rows, cols]` images in `[0, 1]` as IDX files."""
    inputs = dataset.inputs
    if inputs.ndim != 3:
        raise DataError(
            f"IDX images must be [n, rows, cols], got {inputs.shape}"
        )
    if inputs.min(initial=0.0) < 0.0 or inputs.max(initial=0.0) > 1.0:
        raise DataError("IDX images must lie in [0, 1]")
    if dataset.class_count > 256:
        raise DataError("IDX labels must fit into a byte")

    # Write headers followed by byte payloads
    count, rows, cols = inputs.shape
    pixels = np.rint(inputs * 255.0).astype(np.uint8)
    header = struct.pack(">IIII", IDX_IMAGES_MAGIC, count, rows, cols)
    Path(image_path).write_bytes(header + pixels.tobytes())
    header = struct.pack(">II", IDX_LABELS_MAGIC, count)
    labels = dataset.labels.astype(np.uint8)
    Path(label_path).write_bytes(header + labels.tobytes())


# ----------------------------------------------------------------------------


def load_csv(path: str | Path, class_count: int | None = None) -> Dataset:
    """Load rows of `label,f1,f2,...` from a CSV file.

    Every row must carry the same number of features. Errors report the
    offending line number. If `class_count` is not given, it is inferred from
    the largest label.
    """
    labels: list[int] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8", newline="") as f:
        for line, row in enumerate(csv.reader(f), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise FormatError(f"{path}:{line}: expected label and features")
            if rows and len(row) - 1 != len(rows[0]):
                raise FormatError(
                    f"{path}:{line}: expected {len(rows[0])} features, "
                    f"got {len(row) - 1}"
                )

            # Parse label and features
            try:
                label = int(row[0])
                features = [float(cell) for cell in row[1:]]
            except ValueError as e:
                raise FormatError(f"{path}:{line}: {e}") from e
            if not all(math.isfinite(value) for value in features):
                raise FormatError(f"{path}:{line}: non-finite feature")
            if label < 0 or (class_count is not None and label >= class_count):
                raise FormatError(
                    f"{path}:{line}: label {label} is not in "
                    f"[0, {class_count if class_count is not None else 'n'})"
                )
            labels.append(label)
            rows.append(features)

    # Empty files hold no dataset
    if not rows:
        raise FormatError(f"{path}: no samples")
    if class_count is None:
        class_count = max(labels) + 1
    return Dataset(np.array(rows), np.array(labels), class_count)


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset as rows of `label,f1,f2,...`.

    Features are written in their shortest exact decimal form, so reading the
    file back reproduces every value.
    """
    inputs = dataset.inputs.reshape(len(dataset), -1)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for label, features in zip(dataset.labels, inputs):
            writer.writerow([int(label), *(repr(float(x)) for x in features)])


# ----------------------------------------------------------------------------


def synth_blobs(
    seed: int, samples_per_class: int, classes: int, dim: int, spread: float
) -> Dataset:
    """Generate Gaussian clusters around centers on the unit hypersphere.

    Centers are the vertices `+e_i` followed by `-e_i` of the cross-polytope,
    which places any two centers at least `sqrt(2)` apart. When there are more
    classes than vertices, the remaining centers are drawn uniformly from the
    sphere. Samples are ordered by class.
    """
    if classes < 2:
        raise ParameterError(f"classes must be >= 2, got {classes}")
    if dim < 2:
        raise ParameterError(f"dim must be >= 2, got {dim}")
    if samples_per_class < 1:
        raise ParameterError(
            f"samples_per_class must be >= 1, got {samples_per_class}"
        )
    if not spread >= 0:
        raise ParameterError(f"spread must be >= 0, got {spread}")

    # Place centers on the cross-polytope, then randomly
    rng = SeededRng(seed)
    centers = np.zeros((classes, dim))
    for c in range(min(classes, 2 * dim)):
        centers[c, c % dim] = 1.0 if c < dim else -1.0
    if classes > 2 * dim:
        extra = rng.normal((classes - 2 * dim, dim))
        norms = np.linalg.norm(extra, axis=1, keepdims=True)
        centers[2 * dim :] = extra / norms

    # Scatter samples around their centers
    labels = np.repeat(np.arange(classes), samples_per_class)
    noise = rng.normal((len(labels), dim))
    inputs = centers[labels] + spread * noise
    return Dataset(inputs, labels, classes)


def split(
    dataset: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Split a dataset into shuffled training and test parts."""
    if not 0 < test_fraction < 1:
        raise ParameterError(
            f"test_fraction must be in (0, 1), got {test_fraction}"
        )
    order = SeededRng(seed).permutation(len(dataset))
    cut = len(dataset) - max(1, round(len(dataset) * test_fraction))
    if cut < 1:
        raise DataError("Dataset is too small to split")
    return dataset.subset(order[:cut]), dataset.subset(order[cut:])


# ----------------------------------------------------------------------------


def feature_stats(dataset: Dataset) -> FeatureStats:
    """Compute per-feature statistics over a dataset."""
    inputs = dataset.inputs.reshape(len(dataset), -1)
    if not len(inputs):
        raise DataError("Cannot compute statistics of an empty dataset")
    # Rounding leaves a residue in the spread of constant features
    constant = inputs.max(axis=0) == inputs.min(axis=0)
    std = np.where(constant, 0.0, inputs.std(axis=0))
    return FeatureStats(inputs.mean(axis=0), std)


def standardize(dataset: Dataset, stats: FeatureStats | None = None) -> Dataset:
    """Shift and scale features to zero mean and unit variance.

    Statistics default to those of the dataset itself; pass the statistics of
    the training split to transform a test split consistently. Features with
    zero variance map to 0.
    """
    stats = stats or feature_stats(dataset)
    inputs = dataset.inputs.reshape(len(dataset), -1)
    if inputs.shape[1] != stats.mean.size:
        raise ShapeError(
            f"Statistics cover {stats.mean.size} features, "
            f"dataset has {inputs.shape[1]}"
        )

    # Constant features carry no information and are zeroed
    constant = stats.std == 0.0
    if constant.all():
        log.warning("All features are constant")
    scale = np.where(constant, 1.0, stats.std)
    result = np.where(constant, 0.0, (inputs - stats.mean) / scale)
    shaped = result.reshape(dataset.inputs.shape)
    return Dataset(shaped, dataset.labels, dataset.class_count)
