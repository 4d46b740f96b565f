#!/usr/bin/env python3
"""Build MNIST IDX files from the digit subset bundled in the `mnist` npm package.

The npm package ships 10,000 MNIST training digits as per-digit JSON arrays of
pixel/255 values rounded to three decimals. Rounding back to the byte grid is
exact for all 256 levels. The pool is split with a seeded permutation into a
training file pair and a held-out test file pair using the standard MNIST
file names, so the C++ loader sees an ordinary IDX directory.

Usage:
    tools/make_mnist_subset.py --out data/mnist [--package DIR] [--test 2000]

If --package is omitted the package tarball is fetched with `npm pack`.
"""

import argparse
import json
import pathlib
import random
import struct
import subprocess
import sys
import tarfile
import tempfile


def load_digits(package_dir):
    images, labels = [], []
    for digit in range(10):
        path = package_dir / "src" / "digits" / f"{digit}.json"
        data = json.loads(path.read_text())["data"]
        if len(data) % 784:
            sys.exit(f"{path}: length {len(data)} is not a multiple of 784")
        for k in range(0, len(data), 784):
            images.append(bytes(round(v * 255) for v in data[k:k + 784]))
            labels.append(digit)
    return images, labels


def write_idx(prefix, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def fetch_package(workdir):
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    tgz = next(pathlib.Path(workdir).glob("mnist-*.tgz"))
    with tarfile.open(tgz) as tar:
        tar.extractall(workdir)
    return pathlib.Path(workdir) / "package"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, type=pathlib.Path)
    parser.add_argument("--package", type=pathlib.Path)
    parser.add_argument("--test", type=int, default=2000,
                        help="number of digits held out for the test files")
    parser.add_argument("--seed", type=int, default=20240101)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        package = args.package or fetch_package(tmp)
        images, labels = load_digits(package)

    order = list(range(len(images)))
    random.Random(args.seed).shuffle(order)
    test_idx, train_idx = order[:args.test], order[args.test:]

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "train", [images[i] for i in train_idx],
              [labels[i] for i in train_idx])
    write_idx(args.out / "t10k", [images[i] for i in test_idx],
              [labels[i] for i in test_idx])
    print(f"wrote {len(train_idx)} train / {len(test_idx)} test digits to {args.out}")


if __name__ == "__main__":
    main()
