"""Nondimensional non-traditional shallow water physics on a periodic grid.

Unknowns are the canonical velocities ``u_tilde, v_tilde`` and the layer
height ``h``. With ``s = h_b + h/2`` the particle velocities are

    u = u_tilde - delta * Omega_y * s,    v = v_tilde + delta * Omega_x * s

and the semi-discrete system is ``dz/dt = J(z) F(z)`` with the gradient
``F = (u h, v h, Phi)`` and the state-dependent skew-symmetric matrix

    J = [[ 0,  q, -Dx],
         [-q,  0, -Dy],
         [-Dx, -Dy, 0]],       q = (Omega_z + Dx v_tilde - Dy u_tilde) / h.

The discrete energy satisfies ``grad H = dx * dy * F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import DiffOperators, Grid
from .integrator import SkewGradientSystem


class DomainError(ValueError):
    """Raised when the layer height is not strictly positive."""

    def __init__(self, index: int, value: float):
        super().__init__(f"layer height must be positive, h[{index}] = {value!r}")
        self.index = index
        self.value = value


def check_height(h: np.ndarray) -> None:
    if not np.all(h > 0.0):
        bad = np.flatnonzero(~(h > 0.0))[0]
        raise DomainError(int(bad), float(h[bad]))


@dataclass(frozen=True)
class NondimScales:
    """Dimensional scales used to derive the non-traditional parameter."""

    H_scale: float = 1000.0
    Omega_rot: float = 7.3e-5
    g_dim: float = 1e-3

    @property
    def c(self) -> float:
        return math.sqrt(self.g_dim * self.H_scale)

    @property
    def R_d(self) -> float:
        return self.c / (2.0 * self.Omega_rot)

    @property
    def delta(self) -> float:
        return self.H_scale / self.R_d


@dataclass(frozen=True)
class PhysParams:
    omega_hat: tuple[float, float, float]
    delta: float
    g_nd: float = 1.0
    h_b: np.ndarray | None = field(default=None, repr=False)
    phi_lat: float | None = None

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    @classmethod
    def from_latitude(
        cls,
        phi_lat: float = math.pi / 4,
        scales: NondimScales | None = None,
        delta: float | None = None,
        g_nd: float = 1.0,
        h_b: np.ndarray | None = None,
    ) -> "PhysParams":
        if delta is None:
            delta = (scales or NondimScales()).delta
        omega = (0.0, math.cos(phi_lat), math.sin(phi_lat))
        return cls(omega_hat=omega, delta=float(delta), g_nd=g_nd, h_b=h_b, phi_lat=phi_lat)

    @property
    def sx(self) -> float:
        return self.delta * self.omega_hat[0]

    @property
    def sy(self) -> float:
        return self.delta * self.omega_hat[1]

    @property
    def oz(self) -> float:
        return self.omega_hat[2]

    def bottom(self, N: int) -> np.ndarray:
        if self.h_b is None:
            return np.zeros(N)
        hb = np.asarray(self.h_b, dtype=float)
        if hb.shape != (N,):
            raise ValueError(f"h_b has shape {hb.shape}, expected ({N},)")
        return hb


@dataclass
class CanonicalState:
    u_tilde: np.ndarray
    v_tilde: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.u_tilde = np.asarray(self.u_tilde, dtype=float)
        self.v_tilde = np.asarray(self.v_tilde, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        n = self.h.shape
        if self.u_tilde.shape != n or self.v_tilde.shape != n or len(n) != 1:
            raise ValueError("u_tilde, v_tilde and h must be vectors of equal length")

    @property
    def N(self) -> int:
        return self.h.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u_tilde, self.v_tilde, self.h])

    @classmethod
    def from_vector(cls, z: np.ndarray) -> "CanonicalState":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size % 3:
            raise ValueError("state vector length must be a multiple of 3")
        N = z.size // 3
        return cls(z[:N].copy(), z[N : 2 * N].copy(), z[2 * N :].copy())


@dataclass
class ParticleVelocities:
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class ConservedQuantities:
    energy: float
    enstrophy: float
    mass: float
    vorticity: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.energy, self.enstrophy, self.mass, self.vorticity)

    def __iter__(self):
        return iter(self.as_tuple())


def canonical_from_particle(vel: ParticleVelocities, h: np.ndarray, params: PhysParams) -> CanonicalState:
    u = np.asarray(vel.u, dtype=float)
    v = np.asarray(vel.v, dtype=float)
    h = np.asarray(h, dtype=float)
    if not (u.shape == v.shape == h.shape):
        raise ValueError("u, v and h must have the same length")
    check_height(h)
    s = params.bottom(h.size) + 0.5 * h
    return CanonicalState(u + params.sy * s, v - params.sx * s, h.copy())


def particle_from_canonical(state: CanonicalState, params: PhysParams) -> ParticleVelocities:
    s = params.bottom(state.N) + 0.5 * state.h
    return ParticleVelocities(state.u_tilde - params.sy * s, state.v_tilde + params.sx * s)


def potential_vorticity(state: CanonicalState, ops: DiffOperators, params: PhysParams) -> np.ndarray:
    check_height(state.h)
    return (params.oz + ops.Dx @ state.v_tilde - ops.Dy @ state.u_tilde) / state.h


def bernoulli(state: CanonicalState, params: PhysParams) -> np.ndarray:
    vel = particle_from_canonical(state, params)
    u, v, h = vel.u, vel.v, state.h
    hb = params.bottom(state.N)
    return (
        0.5 * (u * u + v * v)
        + params.g_nd * (hb + h)
        + 0.5 * params.delta * h * (params.omega_hat[0] * v - params.omega_hat[1] * u)
    )


def grad_hamiltonian(state: CanonicalState, params: PhysParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(u h, v h, Phi)``; the energy gradient is this times ``dx * dy``."""
    vel = particle_from_canonical(state, params)
    return vel.u * state.h, vel.v * state.h, bernoulli(state, params)


def apply_poisson(q: np.ndarray, F, ops: DiffOperators) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    F1, F2, F3 = (np.asarray(f, dtype=float) for f in F)
    if not (q.shape == F1.shape == F2.shape == F3.shape):
        raise ValueError("q and the gradient blocks must have equal length")
    return (
        q * F2 - ops.Dx @ F3,
        -q * F1 - ops.Dy @ F3,
        -(ops.Dx @ F1) - ops.Dy @ F2,
    )


def energy(state: CanonicalState, grid: Grid, params: PhysParams) -> float:
    vel = particle_from_canonical(state, params)
    h = state.h
    hb = params.bottom(state.N)
    dens = 0.5 * h * (vel.u**2 + vel.v**2) + params.g_nd * h * (hb + 0.5 * h)
    return float(np.sum(dens) * grid.cell_area)


def conserved_quantities(
    state: CanonicalState, grid: Grid, ops: DiffOperators, params: PhysParams
) -> ConservedQuantities:
    check_height(state.h)
    w = grid.cell_area
    curl = ops.Dx @ state.v_tilde - ops.Dy @ state.u_tilde + params.oz
    Z = 0.5 * float(np.sum(curl**2 / state.h)) * w
    M = float(np.sum(state.h)) * w
    # h * q = curl, so the vorticity needs no division
    V = float(np.sum(curl)) * w
    return ConservedQuantities(energy(state, grid, params), Z, M, V)


class FullOrderModel(SkewGradientSystem):
    """The semi-discrete system on flat state vectors ``(u_tilde, v_tilde, h)`` of length 3N.

    Gradient, Poisson matrix and the fused AVF direction run on matrix-free
    stencils from :mod:`swrom.kernels`.
    """

    def __init__(self, grid: Grid, ops: DiffOperators, params: PhysParams):
        self.grid = grid
        self.ops = ops
        self.params = params
        self.hb = np.ascontiguousarray(params.bottom(grid.N))
        self._hb2d = self.hb.reshape(grid.shape)
        self._work = np.empty((2, 3) + grid.shape)

    @property
    def dimension(self) -> int:
        return 3 * self.grid.N

    def _blocks(self, z):
        return np.asarray(z, dtype=float).reshape((3,) + self.grid.shape)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        z3 = self._blocks(z)
        check_height(z3[2].ravel())
        F = np.empty_like(z3)
        p = self.params
        kernels.gradient(
            z3[0].ravel(), z3[1].ravel(), z3[2].ravel(), self.hb, p.sx, p.sy, p.g_nd,
            F[0].ravel(), F[1].ravel(), F[2].ravel(),
        )
        return F.reshape(-1)

    def potential_vorticity(self, z: np.ndarray) -> np.ndarray:
        z3 = self._blocks(z)
        check_height(z3[2].ravel())
        q = np.empty(self.grid.shape)
        kernels.potential_vorticity(z3[0], z3[1], z3[2], self.params.oz, self.grid.dx, self.grid.dy, q)
        return q.reshape(-1)

    def apply_skew(self, z_mid: np.ndarray, g: np.ndarray) -> np.ndarray:
        q = self.potential_vorticity(z_mid).reshape(self.grid.shape)
        g3 = self._blocks(g)
        out = np.empty_like(g3)
        kernels.apply_poisson(q, g3[0], g3[1], g3[2], self.grid.dx, self.grid.dy, out[0], out[1], out[2])
        return out.reshape(-1)

    def rhs(self, z: np.ndarray) -> np.ndarray:
        return self.apply_skew(z, self.gradient(z))

    # AVF hooks: F(z_a) is computed once per step and reused by every iteration
    def prepare(self, z_a: np.ndarray):
        return self.gradient(z_a)

    def avf_direction(self, z_a: np.ndarray, ctx, z_b: np.ndarray) -> np.ndarray:
        za = self._blocks(z_a)
        zb = self._blocks(z_b)
        check_height(0.5 * (za[2] + zb[2]).ravel())
        Fa = ctx.reshape(za.shape)
        out = np.empty_like(za)
        p = self.params
        kernels.fom_direction(
            za, Fa, zb, self._hb2d, p.sx, p.sy, p.g_nd, p.oz, self.grid.dx, self.grid.dy, out, self._work
        )
        return out.reshape(-1)

    def state(self, z: np.ndarray) -> CanonicalState:
        return CanonicalState.from_vector(z)

    def conserved(self, z: np.ndarray) -> ConservedQuantities:
        return conserved_quantities(self.state(z), self.grid, self.ops, self.params)
