"""Throughput benchmark: compiled simulation kernel vs pure-Python fallback.

Runs every policy kind on a common arrival stream with both kernel
implementations, reports steps per second and the speedup, and checks that
the two kernels agree exactly.

Usage: python3 benchmarks/bench_kernel.py [--steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ehcap import _kernel_py, engine
from ehcap.dist import EnergyDistribution, clip
from ehcap.policies import Policy


def bench_once(impl, policy, cap, arrivals, repeat):
    best = float("inf")
    outputs = None
    for _ in range(repeat):
        start = time.perf_counter()
        outputs = engine.run_policy(policy, cap, cap, arrivals, impl=impl)
        best = min(best, time.perf_counter() - start)
    return len(arrivals) / best, outputs


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    cap = 4.0
    c = clip(EnergyDistribution.bernoulli(0.5, cap), cap)
    arrivals = c.sample(1234, args.steps)
    policies = [
        Policy.bernoulli_exp(0.5),
        Policy.generalized_bernoulli(0.5),
        Policy.binary_quantization(cap, 0.5),
        Policy.fixed_fraction(0.5),
        Policy.greedy(),
        Policy.constant(c.mu),
    ]

    compiled = engine._compiled
    if compiled is None:
        print("compiled kernel not built; benchmarking the fallback only")
    print(f"{'kind':<24}{'python steps/s':>16}{'compiled steps/s':>18}"
          f"{'speedup':>10}{'max |d power|':>15}")
    for policy in policies:
        py_rate, py_out = bench_once(_kernel_py, policy, cap, arrivals, args.repeat)
        if compiled is None:
            print(f"{policy.kind:<24}{py_rate:>16.3g}{'-':>18}{'-':>10}{'-':>15}")
            continue
        c_rate, c_out = bench_once(compiled, policy, cap, arrivals, args.repeat)
        dmax = float(np.max(np.abs(py_out[0] - c_out[0])))
        print(f"{policy.kind:<24}{py_rate:>16.3g}{c_rate:>18.3g}"
              f"{c_rate / py_rate:>9.1f}x{dmax:>15.3g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
