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

import os
import subprocess
import sys

# ----------------------------------------------------------------------------
# Program
# ----------------------------------------------------------------------------


def main() -> int:
    """Reproduce the regularizer contrast at desk scale.

    This script trains pairs of runs with and without the membrane potential
    regularizer for three seeds, keeps their checkpoints in the tmp directory,
    and analyzes every checkpoint, so quantization errors and information loss
    estimates can be compared side by side.
    """
    out_dir = os.path.join("tmp", "contrast")
    os.makedirs(out_dir, exist_ok=True)

    # Train pairs of runs on the default synthetic dataset
    seeds = ["0", "1", "2"]
    command = [sys.executable, "-m", "snn_rmp", "compare"]
    for seed in seeds:
        command += ["--seed", seed]
    command += ["--checkpoints", out_dir]
    command += ["--out", os.path.join(out_dir, "compare.json")]
    subprocess.run([*command, *sys.argv[1:]], check=True)

    # Analyze every checkpoint
    for seed in seeds:
        for name in ("base", "rmp"):
            path = os.path.join(out_dir, f"{name}-{seed}.snn")
            report = os.path.join(out_dir, f"{name}-{seed}.json")
            command = [sys.executable, "-m", "snn_rmp", "analyze", path]
            subprocess.run([*command, "-o", report], check=True)

    return 0


# ----------------------------------------------------------------------------

if __name__ == "__main__":
    raise SystemExit(main())
