"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 256] [--repeat 5]

Each kernel is called with identical inputs on both backends; outputs are
checked for bitwise equality before timing. The last row times a full
circle-collapse run end to end, each backend in its own interpreter
(HMCF_PURE_PYTHON selects the fallback at import).
"""
import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from hmcflow import _pykernels as py

try:
    from hmcflow import _ckernels as cy
except ImportError:
    sys.exit("compiled kernels are not built; run pip install -e . first")


def cases(n):
    rng = np.random.default_rng(0)
    s = 1 + 0.1 * rng.random(n)
    sth = 0.05 * rng.random(n)
    p, pth = rng.random(n), rng.random(n) - 0.5
    cols = [rng.random(n) + (1.0 if i in (2, 3) else 0.0) for i in range(8)]
    out = np.empty(n)
    ox, oy = np.empty(n), np.empty(n)
    return {
        "support_accel": lambda k: k.support_accel(s, sth, p, pth, -0.5, out),
        "max_char_speed": lambda k: k.max_char_speed(s, sth, pth),
        "string_accel": lambda k: k.string_accel(*cols, ox, oy),
        "radial_dp54 (flow)": lambda k: k.radial_dp54(
            k.FLOW, 0.0, 1.0, 0.0, math.inf, 1e-12, 1e-12, 1e-6, 1e-3, 10 ** 7),
    }


def end_to_end(pure):
    env = dict(os.environ)
    if pure:
        env["HMCF_PURE_PYTHON"] = "1"
    code = ("import time; from hmcflow import evolve, FlowConfig, BACKEND; "
            "t=time.perf_counter(); evolve(FlowConfig(n=256)); "
            "print(BACKEND, time.perf_counter()-t)")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    print(f"{'kernel':<22}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for name, call in cases(args.n).items():
        a, b = call(py), call(cy)
        same = (np.array_equal(np.asarray(a[0]), np.asarray(b[0]))
                if isinstance(a, tuple) else a == b)
        if not same:
            print(f"{name}: backends disagree", file=sys.stderr)
        number = 3 if name.startswith("radial") else 200
        tp = min(timeit.repeat(lambda: call(py), number=number,
                               repeat=args.repeat)) / number
        tc = min(timeit.repeat(lambda: call(cy), number=number,
                               repeat=args.repeat)) / number
        print(f"{name:<22}{tp * 1e6:>14.1f}{tc * 1e6:>14.1f}{tp / tc:>10.1f}")

    (_, tp), (_, tc) = end_to_end(True), end_to_end(False)
    print(f"{'evolve circle n=256':<22}{tp * 1e6:>14.0f}{tc * 1e6:>14.0f}"
          f"{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
