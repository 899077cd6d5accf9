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

# ----------------------------------------------------------------------------
# Classes
# ----------------------------------------------------------------------------


class SnnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SnnError, ValueError):
    """Tensor shapes are degenerate or incompatible."""


class ParameterError(SnnError, ValueError):
    """A numeric parameter lies outside its documented range."""


class UsageError(SnnError, RuntimeError):
    """An operation was invoked out of order or on unsuitable state."""


class NumericError(SnnError, ArithmeticError):
    """A computation produced non-finite values."""


class DataError(SnnError, ValueError):
    """Dataset contents violate the dataset contract."""


class FormatError(DataError):
    """A dataset file is malformed.

    When the offending location is known, the line number is part of the
    message, so callers can surface it verbatim.
    """


class CheckpointError(SnnError):
    """A checkpoint is unreadable, corrupted or incompatible."""
