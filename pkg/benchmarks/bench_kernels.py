"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import platform
import timeit

import numpy as np

from binspike import _backend
from binspike.baselines import operator_norm
from binspike.codebook import build_codebook
from binspike.decoder import search_nearest
from binspike.model import ArModel, simulate


def cases(rng):
    cb = build_codebook(ArModel(0.9, 1.0, 10))
    queries = rng.uniform(-0.1, cb.theta_max + 0.1, 200_000)
    model = ArModel(0.9, 1.0, 5)
    _, z = simulate(model, 200, 0.35, 0.05, rng)
    y = np.ascontiguousarray(z.values)
    h = np.ascontiguousarray(model.h)
    step = 1.0 / (1.01 * operator_norm(model, 200))
    ad = model.alpha_d
    return {
        "nn_search (2e5 queries, D=10)": lambda k: k.nn_search(cb.thetas, queries),
        "exact_search (2e5 queries, D=10)": lambda k: k.exact_search(cb.thetas, queries, 1e-9),
        "forward+adjoint (L=996)": lambda k: k.apply_adjoint(k.apply_forward(np.ones(996), h, ad, 200), h, ad),
        "pdhg box-l1 (2000 iters, L=996)": lambda k: k.pdhg_box_l1(y, h, ad, 1.0, 0.7, step, step, 2000, 0.0),
        "fista lasso (2000 iters, M=200)": lambda k: k.fista_nn_lasso(y, ad, 0.01, (1 - ad) ** 2, 2000, 0.0),
    }, (cb, queries[:20_000])


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    backends = {"python": _backend.load("python")}
    try:
        backends["cython"] = _backend.load("cython")
    except ImportError:
        print("compiled kernels not built; only the fallback is timed")

    rng = np.random.default_rng(0)
    table, (cb, few) = cases(rng)
    rows = []
    for name, fn in table.items():
        times = {b: best_of(lambda: fn(k), args.repeat) for b, k in backends.items()}
        rows.append({"case": name, **times})

    # interpreted per-query loop, for scale
    t = best_of(lambda: [search_nearest(q, cb.thetas) for q in few], 1) * 10
    rows.append({"case": "pure-Python loop (2e5 queries, extrapolated)", "python": t})

    width = max(len(r["case"]) for r in rows)
    print(f"{platform.python_implementation()} {platform.python_version()}, numpy {np.__version__}")
    print(f"{'case':<{width}}  {'python [ms]':>12}  {'cython [ms]':>12}  {'speedup':>8}")
    for r in rows:
        py = r.get("python")
        cy = r.get("cython")
        speed = f"{py / cy:8.1f}" if py and cy else f"{'-':>8}"
        cy_txt = f"{cy * 1e3:12.2f}" if cy else f"{'-':>12}"
        print(f"{r['case']:<{width}}  {py * 1e3:12.2f}  {cy_txt}  {speed}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
