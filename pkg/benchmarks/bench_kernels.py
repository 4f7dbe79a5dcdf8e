"""Compare the compiled and numpy kernel backends at 512x512 scale.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from smcodec._backend import available_backends

N = 512 * 512


def cases(rng):
    sig = rng.standard_normal((512, 512))
    blocks = rng.standard_normal((N // 32, 32))
    return {
        "fisher_yates(N)": lambda k: k.fisher_yates(1, N),
        "partial_fisher_yates(N, 0.6N)": lambda k: k.partial_fisher_yates(1, N, 157286),
        "fwht_blocks(N/32 x 32)": lambda k: k.fwht_blocks(blocks.copy()),
        "lift_analysis_rows(512x512)": lambda k: k.lift_analysis_rows(sig),
        "lift_synthesis_rows(512x512)": lambda k: k.lift_synthesis_rows(sig),
        "lift_synthesis_adjoint_rows(512x512)": lambda k: k.lift_synthesis_adjoint_rows(sig),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write timings to this file")
    args = ap.parse_args(argv)

    backends = available_backends()
    rng = np.random.default_rng(0)
    results = {}
    for name, fn in cases(rng).items():
        row = {}
        for bname, mod in backends.items():
            fn(mod)  # warm-up
            row[bname] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        results[name] = row

    names = sorted(backends)
    print(f"{'kernel':40s}" + "".join(f"{b:>12s}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for name, row in results.items():
        line = f"{name:40s}" + "".join(f"{row[b] * 1e3:10.2f}ms" for b in names)
        if "cython" in row:
            line += f"{row['python'] / row['cython']:11.1f}x"
        print(line)
    if "cython" not in backends:
        print("compiled extension not available; only the numpy fallback was timed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
