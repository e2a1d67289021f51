"""Time the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]

Each kernel is run once to warm the JIT, then timed; outputs of both
backends are checked for equality before timings are printed.
"""
import argparse
import time

import numpy as np

from soficglauber import _kernels_numpy as knp
from soficglauber._backend import HAVE_NUMBA
from soficglauber.analysis import _edge_list
from soficglauber.dynamics import draw_events
from soficglauber.freegroup import ball
from soficglauber.sofic import uniform_random
from soficglauber.spin import ising_from_epsilon

if HAVE_NUMBA:
    from soficglauber import _kernels_numba as knb


def glauber_case():
    n = 2000
    sigma = uniform_random(n, 2, 0)
    phi = ising_from_epsilon(0.45)
    rng = np.random.default_rng(1)
    x0 = rng.integers(0, 2, size=n)
    _, v, u = draw_events(n, 10.0, rng)
    nbr = np.ascontiguousarray(sigma.neighbors)

    def call(mod):
        x = x0.copy()
        return mod.glauber_run(x, nbr, phi.J, phi.h, v, u), x

    return f"glauber_run n={n} events={v.size}", call


def defect_case():
    sigma = uniform_random(10_000, 2, 2)
    cb = ball(2, 4)
    nbr = np.ascontiguousarray(sigma.neighbors)
    return "ball_defect_mask n=10^4 R=4", lambda mod: mod.ball_defect_mask(nbr, cb.parent, cb.letter, cb.boundary_start)


def brute_case():
    sigma = uniform_random(16, 2, 3)
    eu, ew = _edge_list(sigma)
    return "brute_mcut n=16", lambda mod: mod.brute_mcut(16, eu, ew)


def swap_case():
    n = 300
    sigma = uniform_random(n, 2, 4)
    nbr = np.ascontiguousarray(sigma.neighbors)
    side0 = np.zeros(n, dtype=np.int64)
    side0[np.random.default_rng(5).permutation(n)[: n // 2]] = 1

    def call(mod):
        side = side0.copy()
        return mod.swap_descent(nbr, side), side

    return f"swap_descent n={n}", call


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not installed; only the numpy backend is timed")
    print(f"{'kernel':<36}{'numpy s':>10}{'numba s':>10}{'speedup':>10}")
    for make in (glauber_case, defect_case, brute_case, swap_case):
        label, call = make()
        t_np, out_np = best_time(lambda: call(knp), args.repeat)
        if HAVE_NUMBA:
            call(knb)  # compile
            t_nb, out_nb = best_time(lambda: call(knb), args.repeat)
            assert same(out_np, out_nb), f"{label}: backends disagree"
            print(f"{label:<36}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{label:<36}{t_np:>10.4f}{'-':>10}{'-':>10}")


if __name__ == "__main__":
    main()
