#!/usr/bin/env python3
"""Convert the 5000-image MNIST subset shipped with mlxtend into gzipped IDX files.

Usage: mnist5k_to_idx.py <mnist_5k.csv.gz> <out_dir>

The first 400 images of every digit go to the training split, the remaining
100 per digit to the test split.  File names follow the official layout so
the loader treats the directory like a regular MNIST root.
"""
import gzip
import os
import struct
import sys


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + bytes(payload))


def main():
    src, out = sys.argv[1], sys.argv[2]
    rows = gzip.decompress(open(src, "rb").read()).decode().splitlines()
    per_class = {d: [] for d in range(10)}
    for line in rows:
        vals = [int(float(v)) for v in line.split(",")]
        per_class[vals[-1]].append(vals[:-1])
    train, test = [], []
    for digit in range(10):
        imgs = per_class[digit]
        train += [(img, digit) for img in imgs[:400]]
        test += [(img, digit) for img in imgs[400:]]
    os.makedirs(out, exist_ok=True)
    for name, split in (("train", train), ("t10k", test)):
        pixels = [p for img, _ in split for p in img]
        labels = [d for _, d in split]
        write_idx(os.path.join(out, f"{name}-images-idx3-ubyte.gz"), 2051, [len(split), 28, 28], pixels)
        write_idx(os.path.join(out, f"{name}-labels-idx1-ubyte.gz"), 2049, [len(split)], labels)


if __name__ == "__main__":
    main()
