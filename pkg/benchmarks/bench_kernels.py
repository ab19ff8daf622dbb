"""Time the numpy and numba kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--p 16] [--q 16] [--k 6] [--n 2000]

Numba timings exclude the first (compiling) call.
"""
import argparse
import time

import numpy as np

from ccnet.kernels import ACT_IDENTITY, REG_L2, get_backend


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench(p, q, k, n, repeat=3):
    rng = np.random.default_rng(0)
    n_nodes = (1 << (k + 1)) - 1
    X = rng.uniform(-1, 1, size=(n, p))
    Y = rng.normal(size=(n, q))
    entries0 = rng.normal(0, 0.1, size=(p, n_nodes, q))
    bits = rng.integers(0, 2, size=(p, k))
    sel = np.tile(np.arange(k, dtype=np.int64), (p, 1))
    order = np.arange(n)
    rows = []
    for name in ("numpy", "numba"):
        kern = get_backend(name)
        nodes = kern.path_nodes(bits)
        coeffs = np.ones((p, k + 1))

        def gather():
            for _ in range(1000):
                kern.gather_weights(entries0, nodes, coeffs)

        def epoch():
            entries = entries0.copy()
            kern.train_epoch(X, Y, order, entries, np.zeros(q), np.zeros((p, n_nodes), np.int64),
                             0, sel, 0.0, ACT_IDENTITY, 0.01, 0.1, REG_L2,
                             np.zeros(3, np.int64))

        if name == "numba":
            gather()
            epoch()
        rows.append((name, _best_of(gather, repeat) / 1000 * 1e6, _best_of(epoch, repeat)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=16)
    ap.add_argument("--q", type=int, default=16)
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--n", type=int, default=2000)
    args = ap.parse_args()
    rows = bench(args.p, args.q, args.k, args.n)
    print(f"p={args.p} q={args.q} k={args.k} n={args.n}")
    print(f"{'backend':<8} {'gather [us]':>12} {'epoch [s]':>10}")
    for name, g, e in rows:
        print(f"{name:<8} {g:12.2f} {e:10.4f}")
    print(f"speedup  {rows[0][1] / rows[1][1]:12.1f} {rows[0][2] / rows[1][2]:10.1f}")


if __name__ == "__main__":
    main()
