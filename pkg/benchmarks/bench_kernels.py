"""Compare the compiled kernels against the pure-Python fallback.

Imports both implementations directly (bypassing the import-time selector in
refprior.kernels), checks they agree on the log likelihood, and times the two
hot loops: the two-piece log-likelihood sum and the component-wise
random-walk chain. Run from the repo root:

    python3 benchmarks/bench_kernels.py

Chains are reproducible per backend, not across backends (summation order),
so the chain check compares acceptance counts, not draws.
"""

import argparse
import statistics
import time

import numpy as np

from refprior import _pyloops

try:
    from refprior import _fastloops
except ImportError:
    _fastloops = None


def _time(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def bench_loglik(impl, y, n_calls):
    def run():
        for _ in range(n_calls):
            impl.twopiece_loglik_sum(y, 0.3, 1.2, 2.5)
    return run


def bench_chain(impl, y, n_total, n_burn):
    rng = np.random.default_rng(11)
    normals = rng.standard_normal((n_total, 3))
    uniforms = rng.uniform(size=(n_total, 3))
    draws = np.empty((n_total, 3))
    logp = np.empty(n_total)
    steps = np.empty((n_total, 3))

    def run():
        return impl.twopiece_power_chain(
            y, np.array([0.0, 0.0, 0.0]), np.array([0.5, 0.5, 0.5]),
            0.3, 0.3, -1.0, normals, uniforms, n_burn, True, 0.3,
            draws, logp, steps)
    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats per case (median reported)")
    ap.add_argument("--chain-draws", type=int, default=20000)
    args = ap.parse_args()

    if _fastloops is None:
        print("compiled extension not built; nothing to compare against")
        print("pure-Python backend is the active one")
        return

    rng = np.random.default_rng(0)
    rows = []

    for k in (50, 1000):
        y = rng.standard_normal(k) * 2.0 + 1.0
        a = _pyloops.twopiece_loglik_sum(y, 0.3, 1.2, 2.5)
        b = _fastloops.twopiece_loglik_sum(y, 0.3, 1.2, 2.5)
        assert abs(a - b) <= 1e-12 * abs(a), (a, b)
        n_calls = 2000
        tp = _time(bench_loglik(_pyloops, y, n_calls), args.repeats)
        tc = _time(bench_loglik(_fastloops, y, n_calls), args.repeats)
        rows.append((f"loglik_sum k={k} x{n_calls}", tp, tc))

    y = rng.standard_normal(50) * 2.0 + 1.0
    n_total = args.chain_draws
    n_burn = n_total // 4
    run_p = bench_chain(_pyloops, y, n_total, n_burn)
    run_c = bench_chain(_fastloops, y, n_total, n_burn)
    acc_p, _ = run_p()
    acc_c, _ = run_c()
    tp = _time(run_p, args.repeats)
    tc = _time(run_c, args.repeats)
    rows.append((f"power_chain {n_total} draws", tp, tc))
    rate_p = acc_p / (3 * n_total)
    rate_c = acc_c / (3 * n_total)
    if abs(rate_p - rate_c) > 0.05:
        print(f"warning: acceptance rates differ: python {rate_p:.3f} "
              f"vs cython {rate_c:.3f}")

    w = max(len(r[0]) for r in rows)
    print(f"{'case':<{w}}  {'python':>10}  {'cython':>10}  {'speedup':>8}")
    for name, tp, tc in rows:
        print(f"{name:<{w}}  {tp:>9.4f}s  {tc:>9.4f}s  {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
