#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot kernels (single-example loss/input-gradient, the
iterated signed-gradient attack, one ranking-SGD epoch) on desk-scale
problem sizes and prints per-call times plus the compiled speedup.

Usage:
    python benchmarks/bench_backends.py [--repeats N] [--sizes small|desk]
"""

from __future__ import annotations

import argparse
import importlib
import time
from dataclasses import dataclass

import numpy as np

from attrex.backends import pyfallback

SIZES = {
    # dim, hidden, n_classes, attack iters, sje (n, n_attrs)
    "small": dict(dim=8, hidden=8, n_classes=4, iters=5, n=50, n_attrs=8),
    "desk": dict(dim=20, hidden=24, n_classes=5, iters=10, n=300, n_attrs=16),
}


@dataclass
class BenchRow:
    kernel: str
    backend: str
    calls: int
    seconds: float

    @property
    def per_call_us(self) -> float:
        return 1e6 * self.seconds / self.calls


def _params(rng, dim, hidden, n_classes):
    w1 = rng.normal(size=(hidden, dim))
    b1 = rng.normal(size=hidden)
    w2 = rng.normal(size=(n_classes, hidden))
    b2 = rng.normal(size=n_classes)
    return w1, b1, w2, b2


def run_benchmarks(repeats: int = 5, sizes: str = "desk") -> list[BenchRow]:
    cfg = SIZES[sizes]
    rng = np.random.default_rng(0)
    w1, b1, w2, b2 = _params(rng, cfg["dim"], cfg["hidden"], cfg["n_classes"])
    x = rng.uniform(0.1, 0.9, cfg["dim"])
    feats = rng.uniform(0, 1, (cfg["n"], cfg["dim"]))
    labels = rng.integers(0, cfg["n_classes"], cfg["n"]).astype(np.int64)
    phi = rng.normal(size=(cfg["n_classes"], cfg["n_attrs"]))
    order = rng.permutation(cfg["n"]).astype(np.int64)
    no_candidates = np.empty(0, dtype=np.int64)

    modules = {"python": pyfallback}
    try:
        modules["compiled"] = importlib.import_module("attrex.backends._core")
    except ImportError:
        print("compiled extension not available; benchmarking the fallback only")

    grad_calls = 200 * repeats
    attack_calls = 50 * repeats
    epoch_calls = 2 * repeats

    rows: list[BenchRow] = []
    for name, mod in modules.items():
        start = time.perf_counter()
        for _ in range(grad_calls):
            mod.loss_input_grad(w1, b1, w2, b2, x, 1)
        rows.append(BenchRow("loss_input_grad", name, grad_calls,
                             time.perf_counter() - start))

        start = time.perf_counter()
        for _ in range(attack_calls):
            mod.attack_steps(w1, b1, w2, b2, x, x, 1, 0.12, 0.03, cfg["iters"],
                             0.0, 1.0, False)
        rows.append(BenchRow("attack_steps", name, attack_calls,
                             time.perf_counter() - start))

        start = time.perf_counter()
        for _ in range(epoch_calls):
            w = np.zeros((cfg["dim"], cfg["n_attrs"]))
            mod.sje_epoch(w, feats, labels, phi, 0.05, order, no_candidates)
        rows.append(BenchRow("sje_epoch", name, epoch_calls,
                             time.perf_counter() - start))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--sizes", choices=sorted(SIZES), default="desk")
    args = parser.parse_args()

    rows = run_benchmarks(args.repeats, args.sizes)
    by_kernel: dict[str, dict[str, BenchRow]] = {}
    for row in rows:
        by_kernel.setdefault(row.kernel, {})[row.backend] = row

    print(f"{'kernel':<18} {'backend':<10} {'calls':>7} {'us/call':>10}")
    for kernel, backends in by_kernel.items():
        for name, row in backends.items():
            print(f"{kernel:<18} {name:<10} {row.calls:>7} {row.per_call_us:>10.1f}")
        if "compiled" in backends and "python" in backends:
            speedup = (backends["python"].per_call_us
                       / backends["compiled"].per_call_us)
            print(f"{'':<18} {'speedup':<10} {'':>7} {speedup:>9.1f}x")


if __name__ == "__main__":
    main()
