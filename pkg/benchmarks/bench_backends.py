"""Benchmark the compiled conv kernel against the numpy fallback.

Times the fused conv/relu/max-pool forward and backward passes on feature
matrices with realistic sparsity, then a full training epoch with each
backend swapped in. Run after building the extension:

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --rows 240 --width 510 --filters 768
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import skelscene.cnn.model as model_mod
from skelscene.backend import available_backends
from skelscene.cnn.model import ClassifierConfig
from skelscene.cnn.train import train


def make_batch(rng, n, rows, width, occupied_rows):
    X = np.zeros((n, rows, width))
    for i in range(n):
        occ = rng.choice(rows, size=occupied_rows, replace=False)
        X[i, occ] = rng.standard_normal((occupied_rows, width))
    return X


def time_kernels(backend, X, kernels, bias, repeats):
    fwd = []
    bwd = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        pooled, argmax = backend.conv_pool_forward(X, kernels, bias)
        fwd.append(time.perf_counter() - t0)
        grad = np.where(pooled > 0, 1.0, 0.0)
        dk = np.zeros_like(kernels)
        db = np.zeros(kernels.shape[0])
        t0 = time.perf_counter()
        backend.conv_pool_backward(X, grad, argmax, kernels.shape[1], dk, db)
        bwd.append(time.perf_counter() - t0)
    return min(fwd), min(bwd)


def time_epoch(backend, X, y, config):
    saved = (model_mod.conv_pool_forward, model_mod.conv_pool_backward)
    model_mod.conv_pool_forward = backend.conv_pool_forward
    model_mod.conv_pool_backward = backend.conv_pool_backward
    try:
        t0 = time.perf_counter()
        train(config, X, y, X[:8], y[:8])
        return time.perf_counter() - t0
    finally:
        model_mod.conv_pool_forward, model_mod.conv_pool_backward = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=32)
    ap.add_argument("--rows", type=int, default=240)
    ap.add_argument("--width", type=int, default=126)
    ap.add_argument("--filters", type=int, default=1024)
    ap.add_argument("--kernel-width", type=int, default=3)
    ap.add_argument("--occupied-rows", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--epoch-samples", type=int, default=128)
    args = ap.parse_args()

    backends = available_backends()
    rng = np.random.default_rng(0)
    X = make_batch(rng, args.samples, args.rows, args.width, args.occupied_rows)
    kernels = rng.standard_normal((args.filters, args.kernel_width, args.width)) * 0.05
    bias = rng.standard_normal(args.filters) * 0.01

    print(
        f"batch {args.samples} x ({args.rows} x {args.width}), "
        f"{args.filters} filters of width {args.kernel_width}, "
        f"{args.occupied_rows} occupied rows per sample"
    )
    results = {}
    for name, backend in backends.items():
        fwd, bwd = time_kernels(backend, X, kernels, bias, args.repeats)
        results[name] = (fwd, bwd)
        print(f"  {name:10s} forward {fwd * 1e3:8.2f} ms   backward {bwd * 1e3:8.2f} ms")
    if len(results) == 2:
        f_ratio = results["reference"][0] / results["compiled"][0]
        b_ratio = results["reference"][1] / results["compiled"][1]
        print(f"  speedup     forward {f_ratio:8.2f} x    backward {b_ratio:8.2f} x")

    print(f"\none training epoch, {args.epoch_samples} samples:")
    Xe = make_batch(rng, args.epoch_samples, args.rows, args.width, args.occupied_rows)
    ye = rng.integers(0, 5, args.epoch_samples)
    config = ClassifierConfig(
        classes=5, filters=args.filters, epochs=1, seed=0,
        widths=(2, 3, 4, 5) if args.filters % 4 == 0 else (2, 3, 4),
    )
    for name, backend in backends.items():
        secs = time_epoch(backend, Xe, ye, config)
        print(f"  {name:10s} {secs:8.2f} s")


if __name__ == "__main__":
    main()
