"""Compare the numba and pure-numpy kernels on the three-cavity ramp.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n-max 3]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from polariton_bh import _kernels
from polariton_bh.fock_space import CavityGraph, enumerate_basis, ladder_operator
from polariton_bh.open_dynamics import IntegratorControl, evolve, initial_mott_state, pack_jumps
from polariton_bh.polariton_params import make_ramp, toroidal_2005


def bench_rhs(n_max: int, repeat: int) -> dict:
    b = enumerate_basis(3, n_max)
    rng = np.random.default_rng(0)
    rows, cols, vals = pack_jumps([ladder_operator(b, i) for i in range(3)])
    h = rng.normal(size=(b.dim, b.dim)) + 1j * rng.normal(size=(b.dim, b.dim))
    rho = np.eye(b.dim, dtype=np.complex128) / b.dim
    rates = np.ones(3)
    out = np.empty_like(rho)
    kernels = {"numpy": _kernels.lindblad_rhs_numpy}
    if _kernels.HAVE_NUMBA:
        kernels["numba"] = _kernels.lindblad_rhs_numba
    result = {}
    for name, fn in kernels.items():
        fn(rho, h, rows, cols, vals, rates, out)  # warm-up / compile
        timer = timeit.Timer(lambda: fn(rho, h, rows, cols, vals, rates, out))
        loops, _ = timer.autorange()
        result[name] = min(timer.repeat(repeat, loops)) / loops
    return result


def bench_ramp(n_max: int, repeat: int) -> dict:
    b = enumerate_basis(3, n_max)
    rho0 = initial_mott_state(b, (1, 1, 1))
    args = (rho0, toroidal_2005(), make_ramp(7.8e10, 1.1e12, 1e-6), CavityGraph.cycle(3), b,
            IntegratorControl())
    kernels = {"numpy": _kernels.integrate_ramp_numpy}
    if _kernels.HAVE_NUMBA:
        kernels["numba"] = _kernels.integrate_ramp_numba
    result = {}
    for name, fn in kernels.items():
        evolve(*args, integrator=fn)
        result[name] = min(timeit.repeat(lambda: evolve(*args, integrator=fn), number=1,
                                         repeat=repeat))
    return result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-max", type=int, default=3)
    args = ap.parse_args()
    dim = enumerate_basis(3, args.n_max).dim
    print(f"basis: 3 cavities, n_max={args.n_max}, {dim} states")
    for label, res, unit, scale in (("lindblad rhs", bench_rhs(args.n_max, args.repeat), "us", 1e6),
                                    ("full ramp", bench_ramp(args.n_max, args.repeat), "s", 1.0)):
        line = ", ".join(f"{k} {v * scale:.3g} {unit}" for k, v in res.items())
        if "numba" in res:
            line += f" (speed-up {res['numpy'] / res['numba']:.1f}x)"
        print(f"{label:>13}: {line}")


if __name__ == "__main__":
    main()
