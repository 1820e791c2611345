"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick] [--json out.json]

Each row reports the best of ``--repeat`` runs and checks that both
backends return the same numbers.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from curvemag import _kernels, cross_section as cs, geometry as geo, perturbation as pt
from curvemag import reduced_energy as re


def _best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 16:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench_boundary(panels, repeat):
    bp = cs.disk().panels(panels)
    sv = cs.self_panel_values(bp.weights, "corrected")
    args = (np.ascontiguousarray(bp.nodes), np.ascontiguousarray(bp.normals), bp.weights, sv)
    out = {}
    for name, mod in _kernels.BACKENDS.items():
        out[name] = (_best(lambda: mod.boundary_log_sum(*args), repeat),
                     mod.boundary_log_sum(*args))
    return out


def bench_chain(n, repeat):
    rng = np.random.default_rng(0)
    c = geo.helix(1.0, 0.3, max(1.0, n / 2000), n)
    v = rng.normal(size=(n + 1, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    t_mid = np.ascontiguousarray(c.t_mid)
    out = {}
    for name, mod in _kernels.BACKENDS.items():
        def run():
            g = np.zeros_like(v)
            return mod.chain_dmi(v, t_mid, c.h, 0.36, g), g
        out[name] = (_best(run, repeat), run())
    return out


def bench_energy(n, repeat):
    rng = np.random.default_rng(1)
    c = geo.line(80.0, n)
    f = re.DirectorField.from_vectors(rng.normal(size=(n + 1, 3)))
    demag = cs.demag_matrix(cs.disk(), 512)
    out = {}
    for name in _kernels.BACKENDS:
        def run():
            E, g = re.energy_and_gradient(f, c, pt.DMI(0.36), demag, backend=name)
            return E.total, g
        out[name] = (_best(run, repeat), run())
    return out


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    return bool(np.allclose(a, b, rtol=1e-11, atol=1e-12))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    ap.add_argument("--json", help="write the rows to this file")
    args = ap.parse_args(argv)

    if "compiled" not in _kernels.BACKENDS:
        print("compiled extension not built; only the fallback is timed", file=sys.stderr)
    cases = [("boundary_log_sum", "panels", bench_boundary, [256, 1024] if args.quick else [512, 2048]),
             ("chain_dmi", "segments", bench_chain, [1000] if args.quick else [4000, 64000]),
             ("energy_and_gradient", "segments", bench_energy, [1000] if args.quick else [4000])]
    rows = []
    print(f"{'kernel':<22}{'size':>14}{'python [ms]':>14}{'compiled [ms]':>15}{'speedup':>9}  agree")
    for kernel, unit, fn, sizes in cases:
        for size in sizes:
            res = fn(size, args.repeat)
            py = res["python"][0]
            co = res["compiled"][0] if "compiled" in res else float("nan")
            ok = _agree(res["python"][1], res["compiled"][1]) if "compiled" in res else True
            rows.append({"kernel": kernel, unit: size, "python_s": py, "compiled_s": co,
                         "speedup": py / co, "agree": ok})
            print(f"{kernel:<22}{f'{size} {unit}':>14}{py * 1e3:>14.3f}{co * 1e3:>15.3f}"
                  f"{py / co:>9.1f}  {'yes' if ok else 'NO'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
