"""Compare the compiled and pure-numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both backends are imported directly, so one process times both. Results
are also checked for bit-identical output.
"""
import argparse
import json
import platform
import sys
import timeit

import numpy as np

from attrgame import _kernels_py
from attrgame.game_core import Partition, build_indicator_matrix, strategy_codes

try:
    from attrgame import _kernels
except ImportError:
    _kernels = None


def _cases():
    rng = np.random.default_rng(0)
    yield "indicator p=1024 (k=5, |B|=4)", "indicator", (strategy_codes(Partition(
        [range(4 * i, 4 * i + 4) for i in range(5)])),)
    yield "indicator p=3125 (k=5, |B|=5)", "indicator", (strategy_codes(Partition(
        [range(5 * i, 5 * i + 5) for i in range(5)])),)
    m6 = rng.uniform(-1, 1, (6, 6))
    yield "fp 6x6 random, 200k iters", "fp", (m6, 200_000, 1e-12, True)
    m64 = build_indicator_matrix(Partition([range(4 * i, 4 * i + 4) for i in range(3)])).values
    yield "fp 64x64 indicator, 20k iters", "fp", (np.ascontiguousarray(m64, dtype=float), 20_000, 1e-12, False)
    m = rng.uniform(0, 1, (200, 200))
    yield "fp 200x200 random, 20k iters", "fp", (m, 20_000, 1e-12, True)


def _call(mod, kind, args):
    return mod.indicator_matrix(*args) if kind == "indicator" else mod.fictitious_play(*args)


def _same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1
    rows = []
    print(f"python {platform.python_version()}, numpy {np.__version__}, best of {args.repeat}")
    print(f"{'case':34s} {'compiled':>11s} {'numpy':>11s} {'speedup':>8s}  identical")
    for name, kind, cargs in _cases():
        t_c = min(timeit.repeat(lambda: _call(_kernels, kind, cargs), number=1, repeat=args.repeat))
        t_p = min(timeit.repeat(lambda: _call(_kernels_py, kind, cargs), number=1, repeat=args.repeat))
        same = _same(_call(_kernels, kind, cargs), _call(_kernels_py, kind, cargs))
        rows.append({"case": name, "compiled_s": t_c, "numpy_s": t_p, "speedup": t_p / t_c,
                     "identical": bool(same)})
        print(f"{name:34s} {t_c * 1e3:9.2f}ms {t_p * 1e3:9.2f}ms {t_p / t_c:7.1f}x  {same}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
