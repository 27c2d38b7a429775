"""Benchmark the compiled kernels against the pure-Python fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Covers the three hot paths: token-LCS matching (long prompt diffs),
mixed-radix Gray enumeration, and the mock generator's block raster.
"""

from __future__ import annotations

import argparse
import random
import time

from promptmap._kernels import pure

try:
    from promptmap._kernels import _core
except ImportError:
    _core = None


def bench(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = random.Random(7)
    lcs_a = [rng.randrange(120) for _ in range(800)]
    lcs_b = lcs_a.copy()
    for _ in range(80):  # 10% token churn, like a heavy prompt edit
        lcs_b[rng.randrange(len(lcs_b))] = rng.randrange(120)

    cases = [
        ("lcs_match_pairs (800x800 tokens)", "lcs_match_pairs", (lcs_a, lcs_b)),
        ("gray_codes (8,8,8,8 = 4096 cells)", "gray_codes", ([8, 8, 8, 8],)),
        ("block_raster (1024x1024 px)", "block_raster", (1024, 1024, 0xDEADBEEF)),
    ]

    print(f"{'kernel':<36} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for label, name, call_args in cases:
        t_pure = bench(getattr(pure, name), *call_args, repeat=args.repeat)
        if _core is None:
            print(f"{label:<36} {t_pure * 1e3:9.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_core = bench(getattr(_core, name), *call_args, repeat=args.repeat)
        assert getattr(pure, name)(*call_args) == getattr(_core, name)(*call_args)
        print(f"{label:<36} {t_pure * 1e3:9.1f}ms {t_core * 1e3:9.1f}ms "
              f"{t_pure / t_core:7.1f}x")
    if _core is None:
        print("\ncompiled kernels not built; install with `pip install -e .`")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
