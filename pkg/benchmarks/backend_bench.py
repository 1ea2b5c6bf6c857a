"""Compare the numba and pure-python kernel backends.

Run once per backend (the choice is frozen at import time):

    CACHESIG_BACKEND=python python3 benchmarks/backend_bench.py
    CACHESIG_BACKEND=numba  python3 benchmarks/backend_bench.py
"""

import time

import numpy as np

from cachesig import _kernels
from cachesig.netlist import build_counter_netlist, compile_program, run_program


def bench_pair_strength(iterations=1_000_000, repeats=5):
    rng = np.random.default_rng(0)
    u = rng.random(iterations)
    _kernels.pair_strength(u, 2e-6, 1672.0)  # warm-up / jit compile
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        _kernels.pair_strength(u, 2e-6, 1672.0)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_tape(n_inputs=64, repeats=20):
    prog = compile_program(build_counter_netlist(n_inputs))
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, n_inputs).tolist()
    run_program(prog, bits)  # warm-up / jit compile
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_program(prog, bits)
        times.append(time.perf_counter() - t0)
    return min(times), prog.n_ops


def main():
    print(f"backend: {_kernels.backend_name()}")
    t = bench_pair_strength()
    print(f"pair_strength, 1e6 iterations: {t * 1e3:.3f} ms")
    t, n_ops = bench_tape()
    print(f"counter tape (64 inputs, {n_ops} ops): {t * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
