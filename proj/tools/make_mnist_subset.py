#!/usr/bin/env python3
"""Write a 4000/1000 MNIST subset in IDX format.

The source is the 5000-digit MNIST sample bundled inside the mlxtend wheel
(500 images per class).  Each class contributes its first 400 images to the
training part and the remaining 100 to the test part; both parts are then
shuffled with a fixed seed.

    pip download --no-deps -d /tmp/wheels mlxtend
    python3 tools/make_mnist_subset.py /tmp/wheels/mlxtend-*.whl data/mnist5k
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def write_idx_images(path: Path, images: np.ndarray) -> None:
    n = images.shape[0]
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        fh.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__)
        return 2
    wheel, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        raw = gzip.decompress(zf.read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.StringIO(raw.decode()), delimiter=",")
    pixels, labels = table[:, :-1], table[:, -1].astype(int)

    train_idx, test_idx = [], []
    for digit in range(10):
        idx = np.flatnonzero(labels == digit)
        train_idx.extend(idx[:400])
        test_idx.extend(idx[400:])
    rng = np.random.default_rng(20190125)
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)

    write_idx_images(out_dir / "train-images-idx3-ubyte", pixels[train_idx])
    write_idx_labels(out_dir / "train-labels-idx1-ubyte", labels[train_idx])
    write_idx_images(out_dir / "t10k-images-idx3-ubyte", pixels[test_idx])
    write_idx_labels(out_dir / "t10k-labels-idx1-ubyte", labels[test_idx])
    print(f"wrote {len(train_idx)} train / {len(test_idx)} test images to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
