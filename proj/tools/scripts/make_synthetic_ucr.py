#!/usr/bin/env python3
"""Regenerate the generated UCR-layout datasets under data/ucr/.

CBF follows the Cylinder-Bell-Funnel recipe (length 128, z-normalized,
30 train / 900 test). SynthControl follows the six-pattern control-chart
recipe (length 60, 300 train / 300 test, raw scale).
"""
import os
import sys

import numpy as np


def cbf(rng, label, n=128):
    t = np.arange(1, n + 1)
    a = rng.integers(16, 33)
    b = a + rng.integers(32, 97)
    eta = rng.normal()
    chi = ((t >= a) & (t <= b)).astype(float)
    if label == 1:
        shape = chi
    elif label == 2:
        shape = chi * (t - a) / (b - a)
    else:
        shape = chi * (b - t) / (b - a)
    x = (6.0 + eta) * shape + rng.normal(size=n)
    return (x - x.mean()) / x.std()


def control(rng, label, n=60):
    t = np.arange(1, n + 1)
    base = 30.0 + 2.0 * rng.uniform(-3, 3, size=n)
    if label == 1:
        return base
    if label == 2:
        return base + rng.uniform(10, 15) * np.sin(2 * np.pi * t / rng.uniform(10, 15))
    if label in (3, 4):
        g = rng.uniform(0.2, 0.5)
        return base + (g if label == 3 else -g) * t
    shift = rng.integers(n // 3, 2 * n // 3 + 1)
    step = (t >= shift) * rng.uniform(7.5, 20)
    return base + (step if label == 5 else -step)


def write(root, name, split, rows):
    d = os.path.join(root, name)
    os.makedirs(d, exist_ok=True)
    with open(os.path.join(d, f"{name}_{split}.tsv"), "w") as f:
        for label, x in rows:
            f.write("\t".join([str(label)] + [f"{v:.7g}" for v in x]) + "\n")


def main(root):
    rng = np.random.default_rng(20210401)
    for split, count in (("TRAIN", 30), ("TEST", 900)):
        labels = [1 + i % 3 for i in range(count)]
        write(root, "CBF", split, [(k, cbf(rng, k)) for k in labels])
    for split in ("TRAIN", "TEST"):
        labels = [1 + i // 50 for i in range(300)]
        write(root, "SynthControl", split, [(k, control(rng, k)) for k in labels])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "..", "data", "ucr"))
