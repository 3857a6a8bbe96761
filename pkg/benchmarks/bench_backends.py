#!/usr/bin/env python3
"""Timing comparison of the compiled kernels against the pure-Python twin.

Two parts:
  1. kernel microbenchmarks, both backends loaded side by side in this
     process (best-of-N wall time per kernel);
  2. end-to-end runs (classical solve + short training) in subprocesses,
     one per backend, since the rest of the library binds its backend at
     import time via SYMNMF_FORCE_PURE.

Usage: python3 benchmarks/bench_backends.py [--n 120] [--r 8]
       [--repeats 5] [--skip-end-to-end]
"""

import argparse
import os
import random
import subprocess
import sys
import time
from array import array

from symnmf import backend


def rand_arr(size, seed, lo=0.0, hi=1.0):
    rng = random.Random(seed)
    return array("d", [rng.uniform(lo, hi) for _ in range(size)])


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(n, r):
    u = rand_arr(n * r, 1)
    xn = rand_arr(n * n, 2)
    grad = rand_arr(n * r, 3, lo=-1.0, hi=1.0)
    mom = array("d", [0.0] * (n * r))
    vel = array("d", [0.0] * (n * r))
    signed = rand_arr(n * r, 4, lo=-1.0, hi=1.0)

    from symnmf import _purekernels as pk

    spd = pk.gram(n, r, u)
    spd = pk.add_diag(r, spd, 1.0)

    def chol_inv(k):
        l = array("d", [0.0] * (r * r))
        k.cholesky(r, spd, l)
        k.spd_inverse_from_factor(r, l)

    return [
        (f"matmul {n}x{n} @ {n}x{r}", lambda k: k.matmul(n, n, r, xn, u)),
        (f"gram {n}x{r}", lambda k: k.gram(n, r, u)),
        (f"cholesky+inverse {r}x{r}", chol_inv),
        (f"transpose {n}x{n}", lambda k: k.transpose(n, n, xn)),
        (f"relu {n}x{r}", lambda k: k.relu(n * r, signed)),
        (f"add_scaled {n}x{n}", lambda k: k.add_scaled(n * n, xn, xn, -0.5)),
        (f"sumsq {n}x{n}", lambda k: k.sumsq(n * n, xn)),
        (
            f"adam_update {n}x{r}",
            lambda k: k.adam_update(
                n * r, u, grad, mom, vel, 0.5, 0.9, 0.999, 1e-8, 0.1, 0.001
            ),
        ),
    ]


END_TO_END = """
import time
from symnmf import backend, classical as cl, linalg as la, net
from symnmf.graph import synth_planted

inst = synth_planted({n}, 3, 0.05, 0)
x = inst.x
u0 = cl.random_factor(x, 3, 0)
t0 = time.perf_counter()
cl.run_classical(x, u0, cl.ClassicalConfig(lam=la.fro_norm(x), max_iters={sweeps}, tol=0.0))
t1 = time.perf_counter()
net.train(x, u0, net.TrainConfig(num_blocks=10, epochs={epochs}, seed=0))
t2 = time.perf_counter()
print(backend.ACTIVE, t1 - t0, t2 - t1)
"""


def run_end_to_end(force_pure, n, sweeps, epochs):
    env = dict(os.environ)
    env.pop("SYMNMF_FORCE_PURE", None)
    if force_pure:
        env["SYMNMF_FORCE_PURE"] = "1"
    code = END_TO_END.format(n=n, sweeps=sweeps, epochs=epochs)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    ).stdout.split()
    return out[0], float(out[1]), float(out[2])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=120, help="matrix dimension")
    ap.add_argument("--r", type=int, default=8, help="factor rank")
    ap.add_argument("--repeats", type=int, default=5, help="best-of repeats")
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    if not backend.HAVE_COMPILED:
        print("compiled kernels unavailable; nothing to compare", file=sys.stderr)
        return 1
    compiled = backend.get_backend("compiled")
    pure = backend.get_backend("pure")

    print(f"kernel microbenchmarks (n={args.n}, r={args.r}, best of {args.repeats})")
    header = f"{'kernel':<28} {'pure ms':>10} {'compiled ms':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, fn in kernel_cases(args.n, args.r):
        tp = best_of(lambda: fn(pure), args.repeats)
        tc = best_of(lambda: fn(compiled), args.repeats)
        print(f"{label:<28} {tp * 1e3:>10.3f} {tc * 1e3:>12.3f} {tp / tc:>8.1f}x")

    if args.skip_end_to_end:
        return 0

    n, sweeps, epochs = 60, 30, 10
    print()
    print(f"end to end (planted n={n}: {sweeps} classical sweeps, {epochs} training epochs)")
    rows = [run_end_to_end(False, n, sweeps, epochs), run_end_to_end(True, n, sweeps, epochs)]
    header = f"{'backend':<10} {'solve s':>10} {'train s':>10}"
    print(header)
    print("-" * len(header))
    for name, solve_s, train_s in rows:
        print(f"{name:<10} {solve_s:>10.3f} {train_s:>10.3f}")
    (_, cs, ct), (_, ps, pt) = rows
    print(f"{'speedup':<10} {ps / cs:>9.1f}x {pt / ct:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
