"""Compare the numba kernels with the numpy fallback.

Times each kernel on representative shapes and one full solve per backend.
Run from the repository root:

    python benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import time

import numpy as np

from qsdp import _kernels
from qsdp.instances import ising_instance, tomography_instance
from qsdp.solver import SolverConfig, solve


def best_of(fn, repeat):
    fn()  # warm-up, includes numba compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_cases(rng):
    for m, d in ((17, 8), (129, 64), (33, 256)):
        q = rng.normal(size=(m, d, d)) + 1j * rng.normal(size=(m, d, d))
        q = q + q.conj().transpose(0, 2, 1)
        q_re, q_im = np.ascontiguousarray(q.real), np.ascontiguousarray(q.imag)
        alpha = rng.normal(size=m)
        g_re, g_im = np.ascontiguousarray(q_re[0]), np.ascontiguousarray(q_im[0])
        yield f"weighted_sum m={m} d={d}", lambda k, a=alpha, r=q_re, i=q_im: k.weighted_sum(a, r, i)
        yield f"contract     m={m} d={d}", lambda k, r=q_re, i=q_im, gr=g_re, gi=g_im: \
            k.contract(r, i, gr, gi)
    s = rng.normal(size=(10, 2000))
    y = s + 0.1 * rng.normal(size=s.shape)
    g = rng.normal(size=2000)
    yield "two_loop     k=10 n=2000", lambda k: k.two_loop(s, y, g)
    x = np.linspace(-15, 15, 2000)
    yield "hermite      n=60 pts=2000", lambda k: k.hermite_functions(x, 60)


def solve_with(impl, inst):
    saved = {n: getattr(_kernels, n) for n in ("weighted_sum", "contract", "two_loop")}
    try:
        for n in saved:
            setattr(_kernels, n, getattr(impl, n))
        t = time.perf_counter()
        rep = solve(inst, "vn", SolverConfig(tol=1e-6))
        return time.perf_counter() - t, rep.n_iters
    finally:
        for n, f in saved.items():
            setattr(_kernels, n, f)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _kernels.NUMBA is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<30}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in kernel_cases(rng):
        t_np = best_of(lambda: fn(_kernels.NUMPY), args.repeat)
        t_nb = best_of(lambda: fn(_kernels.NUMBA), args.repeat)
        print(f"{name:<30}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")

    print()
    print(f"{'solve (vn, tol 1e-6)':<30}{'numpy [s]':>12}{'numba [s]':>12}{'iters':>10}")
    for label, inst in (("QT1 n=5 qubits", tomography_instance(1, 5, seed=0, epsilon=0.01)),
                        ("IM N=2", ising_instance(2, 0.5, 0.1))):
        solve_with(_kernels.NUMBA, inst)  # compile outside the timing
        t_np, it = solve_with(_kernels.NUMPY, inst)
        t_nb, _ = solve_with(_kernels.NUMBA, inst)
        print(f"{label:<30}{t_np:>12.3f}{t_nb:>12.3f}{it:>10d}")


if __name__ == "__main__":
    main()
