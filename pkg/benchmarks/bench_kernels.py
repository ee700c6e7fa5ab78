"""Compare the compiled kernel backend against the pure NumPy fallback.

Times the Jacobi eigensolver and both protocol stepping kernels on ring
graphs, reports best-of-N wall times per backend, and cross-checks that
the two implementations agree on the same seeded inputs.

Usage: python3 benchmarks/bench_kernels.py [--sizes 120,240] [--steps 2000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pushsum_rate import build_mixing_matrix, cycle_graph
from pushsum_rate._kernels import get_backend
from pushsum_rate.simulate import _csr


def best_of(repeat: int, fn) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eigen(backends, sizes, repeat):
    rows = []
    for n in sizes:
        mix = build_mixing_matrix(cycle_graph(n), mode="row-stochastic-regular")
        # kernels want a writable C-contiguous buffer; entries are frozen
        a = np.array(mix.entries, dtype=np.float64)
        vals = {}
        for name, mod in backends:
            ms = best_of(repeat, lambda: mod.jacobi_eigh(a)) * 1e3
            vals[name] = np.sort(mod.jacobi_eigh(a)[0])
            rows.append((f"jacobi_eigh n={n}", name, ms, ""))
        if len(vals) == 2:
            dev = float(np.abs(vals["compiled"] - vals["pure"]).max())
            rows[-1] = rows[-1][:3] + (f"max |dval| = {dev:.1e}",)
    return rows


def bench_steps(backends, n, steps, repeat):
    mix = build_mixing_matrix(cycle_graph(n), mode="row-stochastic-regular")
    indptr, indices = _csr(mix)
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal(n)
    act_u = rng.random((steps, n))
    choice_u = rng.random((steps, n))

    def fresh():
        xs = np.zeros((steps + 1, n))
        ws = np.zeros((steps + 1, n))
        xs[0] = x0
        ws[0] = 1.0
        return xs, ws

    rows = []
    for kind, w, q in [("broadcast", 0.4, 0.5), ("unicast", 0.5, 0.5)]:
        finals = {}
        for name, mod in backends:
            step = getattr(mod, f"{kind}_steps")

            def run():
                xs, ws = fresh()
                if kind == "broadcast":
                    step(indptr, indices, w, q, xs, ws, act_u)
                else:
                    step(indptr, indices, w, q, xs, ws, act_u, choice_u)
                return xs

            ms = best_of(repeat, run) * 1e3
            finals[name] = run()[-1]
            rate = steps / (ms / 1e3)
            rows.append(
                (f"{kind}_steps n={n} T={steps}", name, ms, f"{rate:,.0f} steps/s")
            )
        if len(finals) == 2:
            dev = float(np.abs(finals["compiled"] - finals["pure"]).max())
            note = rows[-1][3] + f", max |dx| = {dev:.1e}"
            rows[-1] = rows[-1][:3] + (note,)
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="120,240",
                        help="comma-separated ring sizes for the eigensolver")
    parser.add_argument("--steps", type=int, default=2000,
                        help="protocol steps per timed run")
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions; best time wins")
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",") if s]

    backends = []
    try:
        backends.append(("compiled", get_backend("compiled")))
    except ImportError:
        print("compiled extension not available; timing pure backend only")
    backends.append(("pure", get_backend("pure")))

    rows = bench_eigen(backends, sizes, args.repeat)
    rows += bench_steps(backends, sizes[0], args.steps, args.repeat)

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  {'backend':<8}  {'best ms':>9}  notes"
    print(header)
    print("-" * len(header))
    speedups = {}
    for kernel, name, ms, note in rows:
        print(f"{kernel:<{width}}  {name:<8}  {ms:>9.2f}  {note}")
        speedups.setdefault(kernel, {})[name] = ms
    for kernel, by in speedups.items():
        if len(by) == 2:
            print(f"{kernel}: compiled is {by['pure'] / by['compiled']:.1f}x faster")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
