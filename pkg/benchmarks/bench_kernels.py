"""Compare the compiled kernels against their numpy twins.

Run: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from mpfec import _kernels
from mpfec.evenfast import _even_loss_python, _per_path_params
from mpfec.exact import _chain_arrays, _exact_python
from mpfec.fec import FecParams
from mpfec.gilbert import PathModel, transition_prob
from mpfec.rng import stream_rng
from mpfec.schedule import PathSet, build_immediate
from mpfec.sim import _mc_python


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    if not _kernels.HAVE_COMPILED:
        print("compiled kernels not available; nothing to compare")
        return

    fec = FecParams(16, 11)
    T = 5e-3
    ps = PathSet((PathModel(0.01, 10e-3, 0.0), PathModel(0.01, 10e-3, 50e-3)))
    s = build_immediate((8, 8), fec, T, ps)
    pos, offsets, trans, pib = _chain_arrays(s, ps)
    core = _kernels._core

    print(f"{'kernel':<12} {'compiled':>12} {'python':>12} {'speedup':>9}")

    t_c, v_c = timeit(lambda: core.exact_loss(
        pos, offsets, trans, pib, fec.n, fec.k, True))
    t_p, v_p = timeit(lambda: _exact_python(
        pos, offsets, trans, pib, fec.n, fec.k, True), repeat=3)
    assert abs(v_c - v_p) < 1e-12
    print(f"{'exact_loss':<12} {t_c:>11.4f}s {t_p:>11.4f}s {t_p / t_c:>8.1f}x")

    params = _per_path_params(s, ps)
    pp = np.array([(n_r, k_r, m.pi_bad,
                    transition_prob(m, 0, 1, T_r),
                    transition_prob(m, 1, 0, T_r))
                   for m, n_r, k_r, T_r in params])
    t_c, v_c = timeit(lambda: core.even_loss(
        pp, fec.n, fec.k, True), repeat=50)
    t_p, v_p = timeit(lambda: _even_loss_python(params, fec.n, fec.k, True),
                      repeat=50)
    assert abs(v_c - v_p) < 1e-12
    print(f"{'even_loss':<12} {t_c * 1e6:>10.1f}us {t_p * 1e6:>10.1f}us "
          f"{t_p / t_c:>8.1f}x")

    u = stream_rng(0, 0).random((1 << 16, fec.n))
    t_c, v_c = timeit(lambda: core.mc_count(
        u, pos, offsets, trans, pib, fec.n, fec.k, True))
    t_p, v_p = timeit(lambda: _mc_python(
        u, pos, offsets, trans, pib, fec.n, fec.k, True), repeat=3)
    assert v_c == v_p
    print(f"{'mc_count':<12} {t_c:>11.4f}s {t_p:>11.4f}s {t_p / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
