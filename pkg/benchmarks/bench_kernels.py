"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from statswitch import _pykernels, kernels

try:
    from statswitch import _ckernels
except ImportError:
    _ckernels = None


def bench_swap(impl, n_particles, d, repeat):
    rng = np.random.default_rng(0)
    rows = np.arange(4, dtype=np.intp)
    signs = np.ones(4)
    state = rng.normal(size=(8, d**n_particles)) + 0j

    def run():
        kernels.swap_particles(state, rows, signs, n_particles, d, 0, n_particles - 1, impl=impl)

    return min(timeit.repeat(run, number=5, repeat=repeat)) / 5


def bench_hermite(impl, n_max, points, repeat):
    xi = np.linspace(-8, 8, points)
    return min(timeit.repeat(lambda: kernels.hermite_functions(n_max, xi, impl=impl),
                             number=5, repeat=repeat)) / 5


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"numpy": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the numpy fallback only")
    cases = [
        ("swap_particles N=3 d=8", lambda m: bench_swap(m, 3, 8, args.repeat)),
        ("swap_particles N=4 d=8", lambda m: bench_swap(m, 4, 8, args.repeat)),
        ("swap_particles N=3 d=30", lambda m: bench_swap(m, 3, 30, args.repeat)),
        ("hermite n_max=64 x241", lambda m: bench_hermite(m, 64, 241, args.repeat)),
        ("hermite n_max=200 x2001", lambda m: bench_hermite(m, 200, 2001, args.repeat)),
    ]
    print(f"{'case':28s}" + "".join(f"{name:>14s}" for name in impls) + ("     speedup" if len(impls) > 1 else ""))
    for label, fn in cases:
        times = {name: fn(mod) for name, mod in impls.items()}
        line = f"{label:28s}" + "".join(f"{t * 1e3:12.3f}ms" for t in times.values())
        if len(times) > 1:
            line += f"{times['numpy'] / times['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
