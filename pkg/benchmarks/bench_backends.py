"""Compare the numba and numpy kernel backends on the full-size 100x100 grid.

Each kernel is timed with both implementations on the same inputs; the
full-order and reduced AVF directions are then timed end to end in a fresh
interpreter per backend (the backend is fixed at import).

    python3 benchmarks/bench_backends.py [--grid NX NY] [--repeat R]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def best(f, repeat, number):
    return min(timeit.repeat(f, repeat=repeat, number=number)) / number


def kernel_table(Nx, Ny, repeat):
    from swrom import kernels

    rng = np.random.default_rng(0)
    za = rng.standard_normal((3, Nx, Ny)) * 0.1
    za[2] += 1.0
    zb = za + 1e-3
    hb = np.zeros((Nx, Ny))
    Fa = np.empty_like(za)
    out = np.empty_like(za)
    work = np.empty((2,) + za.shape)
    Vu, Vv = rng.standard_normal((Nx * Ny, 30)), rng.standard_normal((Nx * Ny, 30))
    q = rng.standard_normal(Nx * Ny)
    B = np.empty((30, 30))
    kernels.warmup()
    rows = []
    for name, call in [
        ("fom_direction", lambda k: k["fom_direction"](za, Fa, zb, hb, 0.0, 0.1, 1.0, 0.7, 0.1, 0.1, out, work)),
        ("gradient", lambda k: k["gradient"](za[0].ravel(), za[1].ravel(), za[2].ravel(), hb.ravel(), 0.0, 0.1, 1.0,
                                             Fa[0].ravel(), Fa[1].ravel(), Fa[2].ravel())),
        ("vorticity_block", lambda k: k["vorticity_block"](Vu, Vv, q, B)),
    ]:
        t_np = best(lambda: call(kernels.NUMPY_KERNELS), repeat, 20)
        t_nb = best(lambda: call(kernels.NUMBA_KERNELS), repeat, 20)
        rows.append((name, t_np, t_nb))
    return rows


SYSTEM_SCRIPT = r"""
import json, sys, timeit
import numpy as np
from swrom import kernels
from swrom.grid import make_grid, build_diff_ops
from swrom.model import FullOrderModel, PhysParams
from swrom.pod import PodBasis, PodRom, build_reduced_operators
from swrom.scenarios import build_scenario
Nx, Ny, repeat = map(int, sys.argv[1:4])
kernels.warmup()
g = make_grid(-5, 5, -5, 5, Nx, Ny)
m = FullOrderModel(g, build_diff_ops(g), PhysParams.from_latitude())
z = build_scenario("ex1", g, m.params).as_vector()
ctx = m.prepare(z)
t_fom = min(timeit.repeat(lambda: m.avf_direction(z, ctx, z), repeat=repeat, number=20)) / 20
rng = np.random.default_rng(0)
N, n = g.N, 30
modes = tuple(np.linalg.qr(rng.standard_normal((N, n)))[0] for _ in range(3))
means = tuple(z[c * N:(c + 1) * N].copy() for c in range(3))
rom = PodRom(build_reduced_operators(PodBasis(modes, tuple(np.ones(n) for _ in range(3)), means), m), block_method="loop")
zr = np.zeros(3 * n)
c2 = rom.prepare(zr)
t_pod = min(timeit.repeat(lambda: rom.avf_direction(zr, c2, zr), repeat=repeat, number=5)) / 5
print(json.dumps({"backend": kernels.BACKEND, "fom_direction": t_fom, "pod_direction_loop": t_pod}))
"""


def system_timings(Nx, Ny, repeat):
    res = []
    for flag in ("1", "0"):
        env = dict(os.environ, SWROM_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", SYSTEM_SCRIPT, str(Nx), str(Ny), str(repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        res.append(json.loads(out.stdout))
    return res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", nargs=2, type=int, default=(100, 100), metavar=("NX", "NY"))
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    Nx, Ny = args.grid
    print(f"grid {Nx}x{Ny}, best of {args.repeat}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'ratio':>8}")
    for name, t_np, t_nb in kernel_table(Nx, Ny, args.repeat):
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>8.1f}")
    print()
    for r in system_timings(Nx, Ny, args.repeat):
        print(f"backend {r['backend']:<6} FOM AVF direction {1e3 * r['fom_direction']:.3f} ms,"
              f" POD AVF direction (n=30) {1e3 * r['pod_direction_loop']:.3f} ms")


if __name__ == "__main__":
    main()
