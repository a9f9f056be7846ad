"""Benchmark the compiled channel kernels against the pure-numpy fallback.

Runs itself twice (once per backend, selected via RFCURVES_PURE_PYTHON)
and reports timings for the raw proximal kernel, one conjugate update and
one full logistic fixed-point solve.

Usage: python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time


def measure():
    import numpy as np

    import rfcurves as rf
    from rfcurves import _kernels
    from rfcurves.saddle import Overlaps, hat_update

    k = (0.0, np.sqrt(2 / np.pi), np.sqrt(1 - 2 / np.pi))
    rng = np.random.default_rng(0)
    y = rng.choice([-1.0, 1.0], size=20200)
    om = rng.uniform(-8.0, 8.0, size=20200)

    t0 = time.perf_counter()
    for _ in range(20):
        _kernels.logistic_prox_shift(y, om, 3.0)
    prox_ms = (time.perf_counter() - t0) / 20 * 1e3

    p = rf.ModelParams(alpha=2.0, gamma=2 / 3, lam=1e-3, rho=1.0, kappa0=0.0,
                       kappa1=k[1], kappa_star=k[2], channel=rf.Sign(),
                       loss=rf.LOGISTIC_CLASSIFICATION,
                       spectral=rf.marchenko_pastur(2 / 3))
    ov = Overlaps(1.0, 0.5, 0.01, 1.0, 0.5)
    hat_update(ov, p)
    t0 = time.perf_counter()
    for _ in range(200):
        hat_update(ov, p)
    hat_us = (time.perf_counter() - t0) / 200 * 1e6

    t0 = time.perf_counter()
    _ov, _h, rep = rf.solve_fixed_point(p)
    solve_s = time.perf_counter() - t0

    print(f"{_kernels.BACKEND:>8} | prox(20200 pts): {prox_ms:8.3f} ms | "
          f"hat_update: {hat_us:9.1f} us | fixed point ({rep.iterations} it): "
          f"{solve_s:7.3f} s")


def main():
    if "--child" in sys.argv:
        measure()
        return
    print("kernel backend benchmark (logistic channel)", flush=True)
    print("-" * 88, flush=True)
    for pure in ("0", "1"):
        env = dict(os.environ, RFCURVES_PURE_PYTHON=pure)
        subprocess.run([sys.executable, __file__, "--child"], env=env, check=True)


if __name__ == "__main__":
    main()
