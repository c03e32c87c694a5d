"""Compare the compiled per-frequency kernels with the NumPy fallback.

Times each kernel on a stack of K quadrature nodes for a few system sizes,
then one end-to-end ``transport`` call under each backend (the pure-Python
run happens in a subprocess with MT_PURE_PYTHON=1 so module selection is
honest).

Usage: python3 benchmarks/bench_kernels.py [--nodes 2000] [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from monitored_transport import _kernels_py as py
from monitored_transport import kernels

try:
    from monitored_transport import _ckernels as cy
except ImportError:
    cy = None

E2E = """
import time
from monitored_transport import cross_monitored_pair, filter_level_junction, transport
from monitored_transport.kernels import BACKEND
t0 = time.perf_counter()
for g in (0.1, 1.0, 10.0):
    transport(filter_level_junction(g))
    transport(cross_monitored_pair(g))
print(BACKEND, time.perf_counter() - t0)
"""


def _inputs(rng, K, n):
    w = np.sort(rng.uniform(-5, 5, K))
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * (h + h.conj().T) - 0.7j * np.eye(n)
    sig = rng.normal(size=(2, K)) - 1j * rng.uniform(0.1, 1, (2, K))
    pl = np.zeros((n, n), complex)
    pr = np.zeros((n, n), complex)
    pl[0, 0] = pr[-1, -1] = 1
    return w, h, sig[0].copy(), pl, sig[1].copy(), pr


def bench(mod, args, repeat):
    w, h, sl, pl, sr, pr = args
    g, _ = mod.resolvent(w, h, sl, pl, sr, pr)
    x = np.eye(h.shape[0], dtype=complex)
    calls = {
        "resolvent": lambda: mod.resolvent(w, h, sl, pl, sr, pr),
        "sandwich": lambda: mod.sandwich(g, x),
        "trace_sandwich": lambda: mod.trace_sandwich(pl, g, pr),
        "superop": lambda: mod.superop(g),
    }
    return {k: min(timeit.repeat(f, number=3, repeat=repeat)) / 3 for k, f in calls.items()}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}; {args.nodes} nodes per call")
    if cy is None:
        print("compiled extension not built; only the NumPy timings are shown")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>3}{'numpy [ms]':>13}{'cython [ms]':>13}{'speedup':>9}")
    for n in (1, 2, 4, 8):
        inp = _inputs(rng, args.nodes, n)
        tp = bench(py, inp, args.repeat)
        tc = bench(cy, inp, args.repeat) if cy else {}
        for k in tp:
            c = tc.get(k, float("nan"))
            print(f"{k:<16}{n:>3}{1e3 * tp[k]:>13.3f}{1e3 * c:>13.3f}{tp[k] / c:>9.1f}")

    print("\nend-to-end: 6 transport calls")
    for pure in ("0", "1"):
        env = dict(os.environ, MT_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        name, sec = out.stdout.split()
        print(f"  {name:<8}{float(sec):8.3f} s")


if __name__ == "__main__":
    main()
