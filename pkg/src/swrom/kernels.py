"""Hot loops of the full- and reduced-order models.

Every kernel exists twice: a vectorized numpy version and a loop version
compiled with ``numba.njit``. The numba versions are used unless numba is
missing or the environment variable ``SWROM_DISABLE_NUMBA`` is set to a
non-empty value other than ``0``; the flag is read once, at import.

Field arguments named ``*_2d`` are ``(Nx, Ny)`` C-contiguous arrays (x index
first); the pointwise kernels take flat arrays of any length. All kernels
write into caller-provided output arrays.

Physical coefficients are passed pre-combined: ``sx = delta * Omega_x`` and
``sy = delta * Omega_y`` (nondimensional canonical shift), ``oz = Omega_z``.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_flag = os.environ.get("SWROM_DISABLE_NUMBA", "")
USE_NUMBA = _HAVE_NUMBA and _flag in ("", "0")
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations


def _np_gradient(ut, vt, h, hb, sx, sy, g, F1, F2, F3):
    s = hb + 0.5 * h
    u = ut - sy * s
    v = vt + sx * s
    F1[...] = u * h
    F2[...] = v * h
    F3[...] = 0.5 * (u * u + v * v) + g * (hb + h) + 0.5 * h * (sx * v - sy * u)


def _ddx(f, dx):
    return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * dx)


def _ddy(f, dy):
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * dy)


def _np_potential_vorticity(ut_2d, vt_2d, h_2d, oz, dx, dy, q_2d):
    q_2d[...] = (oz + _ddx(vt_2d, dx) - _ddy(ut_2d, dy)) / h_2d


def _np_apply_poisson(q_2d, F1_2d, F2_2d, F3_2d, dx, dy, R1, R2, R3):
    R1[...] = q_2d * F2_2d - _ddx(F3_2d, dx)
    R2[...] = -q_2d * F1_2d - _ddy(F3_2d, dy)
    R3[...] = -_ddx(F1_2d, dx) - _ddy(F2_2d, dy)


def _np_fom_direction(za, Fa, zb, hb_2d, sx, sy, g, oz, dx, dy, out, work):
    """``J(mid) * Simpson(F)`` on the segment ``za -> zb``; arrays are ``(3, Nx, Ny)``."""
    mid = 0.5 * (za + zb)
    Fm = work[0]
    Fb = work[1]
    _np_gradient(mid[0], mid[1], mid[2], hb_2d, sx, sy, g, Fm[0], Fm[1], Fm[2])
    _np_gradient(zb[0], zb[1], zb[2], hb_2d, sx, sy, g, Fb[0], Fb[1], Fb[2])
    avg = (Fa + 4.0 * Fm + Fb) / 6.0
    q = np.empty_like(mid[0])
    _np_potential_vorticity(mid[0], mid[1], mid[2], oz, dx, dy, q)
    _np_apply_poisson(q, avg[0], avg[1], avg[2], dx, dy, out[0], out[1], out[2])


def _np_vorticity_block(Vu, Vv, q, B):
    B[...] = (Vu * q[:, None]).T @ Vv


def _np_sampled_rhs(ut, vt, h, F1, F2, F3, nbr, comp, oz, dx, dy, out):
    p, xp, xm, yp, ym = nbr[:, 0], nbr[:, 1], nbr[:, 2], nbr[:, 3], nbr[:, 4]
    if comp == 2:
        out[...] = -(F1[xp] - F1[xm]) / (2.0 * dx) - (F2[yp] - F2[ym]) / (2.0 * dy)
        return
    q = (oz + (vt[xp] - vt[xm]) / (2.0 * dx) - (ut[yp] - ut[ym]) / (2.0 * dy)) / h[p]
    if comp == 0:
        out[...] = q * F2[p] - (F3[xp] - F3[xm]) / (2.0 * dx)
    else:
        out[...] = -q * F1[p] - (F3[yp] - F3[ym]) / (2.0 * dy)


def _np_deim_samples(zg, hb, nbr3, sx, sy, g, oz, dx, dy, out, F):
    """Sampled entries of all three right-hand-side blocks from gathered states ``zg`` (3, G)."""
    _np_gradient(zg[0], zg[1], zg[2], hb, sx, sy, g, F[0], F[1], F[2])
    for c in range(3):
        _np_sampled_rhs(zg[0], zg[1], zg[2], F[0], F[1], F[2], nbr3[c], c, oz, dx, dy, out[c])


# ---------------------------------------------------------------------------
# numba implementations


def _nb_gradient(ut, vt, h, hb, sx, sy, g, F1, F2, F3):
    for i in range(ut.size):
        hi = h[i]
        s = hb[i] + 0.5 * hi
        u = ut[i] - sy * s
        v = vt[i] + sx * s
        F1[i] = u * hi
        F2[i] = v * hi
        F3[i] = 0.5 * (u * u + v * v) + g * (hb[i] + hi) + 0.5 * hi * (sx * v - sy * u)


def _nb_potential_vorticity(ut_2d, vt_2d, h_2d, oz, dx, dy, q_2d):
    Nx, Ny = h_2d.shape
    cx = 0.5 / dx
    cy = 0.5 / dy
    for i in range(Nx):
        ip = i + 1 if i + 1 < Nx else 0
        im = i - 1 if i > 0 else Nx - 1
        for j in range(Ny):
            jp = j + 1 if j + 1 < Ny else 0
            jm = j - 1 if j > 0 else Ny - 1
            q_2d[i, j] = (
                oz + (vt_2d[ip, j] - vt_2d[im, j]) * cx - (ut_2d[i, jp] - ut_2d[i, jm]) * cy
            ) / h_2d[i, j]


def _nb_apply_poisson(q_2d, F1_2d, F2_2d, F3_2d, dx, dy, R1, R2, R3):
    Nx, Ny = q_2d.shape
    cx = 0.5 / dx
    cy = 0.5 / dy
    for i in range(Nx):
        ip = i + 1 if i + 1 < Nx else 0
        im = i - 1 if i > 0 else Nx - 1
        for j in range(Ny):
            jp = j + 1 if j + 1 < Ny else 0
            jm = j - 1 if j > 0 else Ny - 1
            q = q_2d[i, j]
            R1[i, j] = q * F2_2d[i, j] - (F3_2d[ip, j] - F3_2d[im, j]) * cx
            R2[i, j] = -q * F1_2d[i, j] - (F3_2d[i, jp] - F3_2d[i, jm]) * cy
            R3[i, j] = -(F1_2d[ip, j] - F1_2d[im, j]) * cx - (F2_2d[i, jp] - F2_2d[i, jm]) * cy


def _nb_fom_direction(za, Fa, zb, hb_2d, sx, sy, g, oz, dx, dy, out, work):
    # pass 1: midpoint state into work[0], Simpson-averaged gradient into work[1]
    Nx, Ny = hb_2d.shape
    mid = work[0]
    avg = work[1]
    for i in range(Nx):
        for j in range(Ny):
            hbij = hb_2d[i, j]
            # midpoint
            um_t = 0.5 * (za[0, i, j] + zb[0, i, j])
            vm_t = 0.5 * (za[1, i, j] + zb[1, i, j])
            hm = 0.5 * (za[2, i, j] + zb[2, i, j])
            mid[0, i, j] = um_t
            mid[1, i, j] = vm_t
            mid[2, i, j] = hm
            s = hbij + 0.5 * hm
            u = um_t - sy * s
            v = vm_t + sx * s
            Fm1 = u * hm
            Fm2 = v * hm
            Fm3 = 0.5 * (u * u + v * v) + g * (hbij + hm) + 0.5 * hm * (sx * v - sy * u)
            # end point
            hB = zb[2, i, j]
            s = hbij + 0.5 * hB
            u = zb[0, i, j] - sy * s
            v = zb[1, i, j] + sx * s
            Fb1 = u * hB
            Fb2 = v * hB
            Fb3 = 0.5 * (u * u + v * v) + g * (hbij + hB) + 0.5 * hB * (sx * v - sy * u)
            avg[0, i, j] = (Fa[0, i, j] + 4.0 * Fm1 + Fb1) / 6.0
            avg[1, i, j] = (Fa[1, i, j] + 4.0 * Fm2 + Fb2) / 6.0
            avg[2, i, j] = (Fa[2, i, j] + 4.0 * Fm3 + Fb3) / 6.0
    # pass 2: q(mid) and the Poisson matrix applied to the averaged gradient
    cx = 0.5 / dx
    cy = 0.5 / dy
    for i in range(Nx):
        ip = i + 1 if i + 1 < Nx else 0
        im = i - 1 if i > 0 else Nx - 1
        for j in range(Ny):
            jp = j + 1 if j + 1 < Ny else 0
            jm = j - 1 if j > 0 else Ny - 1
            q = (
                oz + (mid[1, ip, j] - mid[1, im, j]) * cx - (mid[0, i, jp] - mid[0, i, jm]) * cy
            ) / mid[2, i, j]
            out[0, i, j] = q * avg[1, i, j] - (avg[2, ip, j] - avg[2, im, j]) * cx
            out[1, i, j] = -q * avg[0, i, j] - (avg[2, i, jp] - avg[2, i, jm]) * cy
            out[2, i, j] = -(avg[0, ip, j] - avg[0, im, j]) * cx - (avg[1, i, jp] - avg[1, i, jm]) * cy


def _nb_vorticity_block(Vu, Vv, q, B):
    N, n = Vu.shape
    m = Vv.shape[1]
    B[:, :] = 0.0
    for i in range(N):
        qi = q[i]
        for a in range(n):
            c = qi * Vu[i, a]
            for b in range(m):
                B[a, b] += c * Vv[i, b]


def _nb_sampled_rhs(ut, vt, h, F1, F2, F3, nbr, comp, oz, dx, dy, out):
    cx = 0.5 / dx
    cy = 0.5 / dy
    for k in range(nbr.shape[0]):
        p = nbr[k, 0]
        xp = nbr[k, 1]
        xm = nbr[k, 2]
        yp = nbr[k, 3]
        ym = nbr[k, 4]
        if comp == 2:
            out[k] = -(F1[xp] - F1[xm]) * cx - (F2[yp] - F2[ym]) * cy
        else:
            q = (oz + (vt[xp] - vt[xm]) * cx - (ut[yp] - ut[ym]) * cy) / h[p]
            if comp == 0:
                out[k] = q * F2[p] - (F3[xp] - F3[xm]) * cx
            else:
                out[k] = -q * F1[p] - (F3[yp] - F3[ym]) * cy


def _nb_deim_samples(zg, hb, nbr3, sx, sy, g, oz, dx, dy, out, F):
    _nb_gradient(zg[0], zg[1], zg[2], hb, sx, sy, g, F[0], F[1], F[2])
    for c in range(3):
        _nb_sampled_rhs(zg[0], zg[1], zg[2], F[0], F[1], F[2], nbr3[c], c, oz, dx, dy, out[c])


NUMPY_KERNELS = {
    "gradient": _np_gradient,
    "potential_vorticity": _np_potential_vorticity,
    "apply_poisson": _np_apply_poisson,
    "fom_direction": _np_fom_direction,
    "vorticity_block": _np_vorticity_block,
    "sampled_rhs": _np_sampled_rhs,
    "deim_samples": _np_deim_samples,
}

if _HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    # the fused kernels call the pointwise ones, so those are compiled first
    _nb_gradient = _jit(_nb_gradient)
    _nb_sampled_rhs = _jit(_nb_sampled_rhs)
    NUMBA_KERNELS = {
        "gradient": _nb_gradient,
        "potential_vorticity": _jit(_nb_potential_vorticity),
        "apply_poisson": _jit(_nb_apply_poisson),
        "fom_direction": _jit(_nb_fom_direction),
        "vorticity_block": _jit(_nb_vorticity_block),
        "sampled_rhs": _nb_sampled_rhs,
        "deim_samples": _jit(_nb_deim_samples),
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

gradient = _ACTIVE["gradient"]
potential_vorticity = _ACTIVE["potential_vorticity"]
apply_poisson = _ACTIVE["apply_poisson"]
fom_direction = _ACTIVE["fom_direction"]
vorticity_block = _ACTIVE["vorticity_block"]
sampled_rhs = _ACTIVE["sampled_rhs"]
deim_samples = _ACTIVE["deim_samples"]


def warmup() -> None:
    """Run every active kernel once on tiny inputs so that JIT compilation stays out of timings."""
    z = np.ones((3, 3, 3))
    out = np.empty_like(z)
    work = np.empty((2,) + z.shape)
    hb = np.zeros((3, 3))
    fom_direction(z, z, z, hb, 0.1, 0.1, 1.0, 0.7, 1.0, 1.0, out, work)
    q = np.empty((3, 3))
    potential_vorticity(z[0], z[1], z[2], 0.7, 1.0, 1.0, q)
    apply_poisson(q, z[0], z[1], z[2], 1.0, 1.0, out[0], out[1], out[2])
    f = z.reshape(3, 9)
    F = np.empty_like(f)
    gradient(f[0], f[1], f[2], hb.ravel(), 0.1, 0.1, 1.0, F[0], F[1], F[2])
    V = np.ones((9, 2))
    vorticity_block(V, V, f[0].copy(), np.empty((2, 2)))
    nbr = np.zeros((3, 2, 5), dtype=np.int64)
    deim_samples(f, hb.ravel(), nbr, 0.1, 0.1, 1.0, 0.7, 1.0, 1.0, np.empty((3, 2)), F)
