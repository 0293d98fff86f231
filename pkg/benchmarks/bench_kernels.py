"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends consume the
same random stream, so the script also checks that their outputs agree.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from nvcluster import _fallback

try:
    from nvcluster import _kernels
except ImportError:  # extension not built
    _kernels = None

RATES = dict(gamma_bright=1e5, gamma_dark=1e3, k_ion=50.0, k_rec=10.0)
T = 1e-3


def _telegraph(mod, shots, seed=0):
    rng = np.random.default_rng(seed)
    init = (np.arange(shots) % 3 == 0).astype(np.uint8)
    return np.asarray(mod.telegraph_counts(rng, RATES["gamma_bright"], RATES["gamma_dark"],
                                           RATES["k_ion"], RATES["k_rec"], T, init))


def _rk4(mod, n_max=240, n_steps=2000):
    return np.asarray(mod.count_master_rk4(RATES["gamma_bright"], RATES["gamma_dark"],
                                           RATES["k_ion"], RATES["k_rec"], T, n_max, n_steps))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--shots", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = {"python": _fallback}
    if _kernels is not None:
        backends["cython"] = _kernels
    cases = {
        f"telegraph_counts ({args.shots} shots)": lambda m: _telegraph(m, args.shots),
        "count_master_rk4 (n_max=240, 2000 steps)": _rk4,
    }
    print(f"{'kernel':44s} " + " ".join(f"{b:>12s}" for b in backends) + "    speedup")
    for name, fn in cases.items():
        times = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
                 for b, m in backends.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:44s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times.values())
              + f"    {speed:6.1f}x")
        if "cython" in backends:
            a, b = fn(_fallback), fn(_kernels)
            same = np.array_equal(a, b) if a.dtype.kind == "i" else float(np.max(np.abs(a - b)))
            print(f"{'':44s} agreement: {same}")


if __name__ == "__main__":
    main()
