#!/usr/bin/env python3
# Copyright 2026 The DRBN Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the digit subset shipped in the `mnist` npm package to IDX files.

The package stores each class as JSON ({"data": [...]}) with 784 floats per
image (pixel / 255, rounded). Images are split per class into train and test
with a seeded shuffle and written under the standard MNIST file names.

    npm pack mnist@1.1.0
    python3 scripts/prepare_mnist_subset.py --source mnist-1.1.0.tgz --out data/mnist
"""

import argparse
import json
import random
import struct
import tarfile
from pathlib import Path

PIXELS = 28 * 28


def read_classes(source: Path):
    """Yields (label, flat float list) for each digit class."""
    if source.is_file():
        with tarfile.open(source) as tar:
            for label in range(10):
                member = tar.getmember(f"package/src/digits/{label}.json")
                yield label, json.load(tar.extractfile(member))["data"]
        return
    for label in range(10):
        path = source / "src" / "digits" / f"{label}.json"
        if not path.exists():
            path = source / f"{label}.json"
        yield label, json.loads(path.read_text())["data"]


def to_bytes(values):
    return bytes(min(255, max(0, round(v * 255))) for v in values)


def write_idx(out: Path, prefix: str, images, labels):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with open(out / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--source", type=Path, required=True, help="npm tarball or extracted package directory")
    ap.add_argument("--out", type=Path, default=Path("data/mnist"))
    ap.add_argument("--test-fraction", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    train, test = [], []
    for label, flat in read_classes(args.source):
        if len(flat) % PIXELS:
            raise SystemExit(f"class {label}: {len(flat)} values is not a multiple of {PIXELS}")
        images = [to_bytes(flat[i : i + PIXELS]) for i in range(0, len(flat), PIXELS)]
        rng.shuffle(images)
        n_test = round(len(images) * args.test_fraction)
        test += [(img, label) for img in images[:n_test]]
        train += [(img, label) for img in images[n_test:]]
    rng.shuffle(train)
    rng.shuffle(test)

    for prefix, rows in (("train", train), ("t10k", test)):
        write_idx(args.out, prefix, [r[0] for r in rows], [r[1] for r in rows])
        print(f"{prefix}: {len(rows)} images -> {args.out}")


if __name__ == "__main__":
    main()
