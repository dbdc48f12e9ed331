"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]

Times each scalar kernel over a fixed grid of inputs and reports the
per-call cost for both backends and the speed-up.
"""

import argparse
import json
import timeit

import numpy as np

from qlstat import _kernels_py as py

try:
    from qlstat import _kernels as cy
except ImportError:  # pragma: no cover
    cy = None


def _grid(size=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.01, 0.99, size)
    a = np.exp(rng.uniform(np.log(0.5), np.log(2000), size))
    b = np.exp(rng.uniform(np.log(0.5), np.log(2000), size))
    q = rng.uniform(0.01, 0.99, size)
    n = rng.integers(10, 2000, size).astype(float)
    p = rng.uniform(0.1, 0.9, size)
    alpha = rng.uniform(0.01, 0.1, size)
    return [tuple(map(float, t)) for t in zip(x, a, b, q, n, p, alpha)]


CASES = {
    "log_gamma": lambda m, g: [m.log_gamma(a) for _, a, _, _, _, _, _ in g],
    "reg_inc_beta": lambda m, g: [m.reg_inc_beta(x, a, b) for x, a, b, _, _, _, _ in g],
    "inv_reg_inc_beta": lambda m, g: [m.inv_reg_inc_beta(q, a, b) for _, a, b, q, _, _, _ in g],
    "normal_quantile": lambda m, g: [m.normal_quantile(q) for _, _, _, q, _, _, _ in g],
    "solve_endpoint": lambda m, g: [m.solve_endpoint(n, p, al, True) for *_, n, p, al in g],
}


def run(repeat):
    grid = _grid()
    rows = []
    for name, fn in CASES.items():
        row = {"kernel": name, "calls": len(grid)}
        for label, mod in (("python", py), ("cython", cy)):
            if mod is None:
                row[label + "_us"] = None
                continue
            best = min(timeit.repeat(lambda: fn(mod, grid), number=1, repeat=repeat))
            row[label + "_us"] = 1e6 * best / len(grid)
        if row.get("cython_us"):
            row["speedup"] = row["python_us"] / row["cython_us"]
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    rows = run(args.repeat)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':<18}{'python us/call':>16}{'cython us/call':>16}{'speed-up':>10}")
    for r in rows:
        cyt = f"{r['cython_us']:.2f}" if r["cython_us"] else "n/a"
        sp = f"{r['speedup']:.1f}x" if r.get("speedup") else "n/a"
        print(f"{r['kernel']:<18}{r['python_us']:>16.2f}{cyt:>16}{sp:>10}")


if __name__ == "__main__":
    main()
