"""Time the compiled and numpy quadrature kernels on oracle-sized batches.

    python benchmarks/bench_kernels.py [--rows 20000] [--repeat 3]

Reports the best wall time per backend and the speedup; also checks that
both backends return the same values.
"""
import argparse
import time

import numpy as np

from slct import kernels
from slct.errorfn import k_relu, k_softmax
from slct.linear import LinearArchitecture, LinearNetwork
from slct.relu import InputDomain, ReLUNetwork


def cases():
    relu = ReLUNetwork([[1, 1]], [[1], [-1]], ["-1/5", "-1/5"])
    wide = ReLUNetwork(np.ones((2, 6)), np.ones((6, 3)), np.zeros(6))
    arch = LinearArchitecture((3, 2, 2), True)
    rng = np.random.default_rng(0)
    soft = LinearNetwork(arch, tuple(rng.normal(size=s) for s in arch.layer_shapes),
                         tuple(rng.normal(size=arch.widths[s]) for s in range(arch.depth)))
    return [
        ("relu (1,2,1)", lambda b: k_relu(relu, InputDomain([-1], [1]), 1024, 0, backend=b)),
        ("relu (2,6,3)", lambda b: k_relu(wide, InputDomain([-1] * 3, [1] * 3), 1024, 0, backend=b)),
        ("softmax (3,2,2)+bias", lambda b: k_softmax(arch, soft, InputDomain([-1, -1], [1, 1]), 1024, 0, backend=b)),
    ]


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000, help="parameter vectors per batch")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = sorted(kernels.BACKENDS)
    print(f"backends available: {', '.join(backends)} (default: {kernels.BACKEND})")
    print(f"{'case':24s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup   max rel diff")
    for name, make in cases():
        times, outs = {}, {}
        for b in backends:
            K = make(b)
            W = K.center + np.random.default_rng(1).uniform(-0.5, 0.5, size=(args.rows, K.dimension))
            times[b], outs[b] = best_time(lambda: K.evaluate(W), args.repeat)
        row = f"{name:24s} " + " ".join(f"{times[b] * 1e3:10.1f}ms" for b in backends)
        if len(backends) == 2:
            diff = np.max(np.abs(outs["cython"] - outs["python"]) / np.maximum(np.abs(outs["python"]), 1e-300))
            row += f"   {times['python'] / times['cython']:6.1f}x   {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
