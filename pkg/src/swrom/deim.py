"""Discrete empirical interpolation of the reduced right-hand side.

Each block ``F_i`` of the full right-hand side ``J(z) F(z)`` is approximated
from ``m`` sampled entries,

    V_w^T F_i(z)  ~=  W_i  F_i(z)[P_i],    W_i = V_w^T U_i (U_i[P_i])^{-1},

where ``U_i`` spans snapshots of ``F_i`` and ``P_i`` are greedily chosen grid
points. Evaluating a sampled entry needs the state at the point and its four
stencil neighbours, so the online cost depends on ``m`` and ``n`` only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .integrator import Trajectory
from .model import FullOrderModel, check_height
from .pod import PodBasis, _state_rows, select_mode_count, thin_svd


@dataclass
class NonlinearitySnapshots:
    """``G_i`` (N x K): block ``i`` of the full right-hand side at each snapshot."""

    matrices: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def n_snapshots(self) -> int:
        return self.matrices[0].shape[1]


def collect_nonlinearity_snapshots(source, model: FullOrderModel, include_initial: bool = False) -> NonlinearitySnapshots:
    states = _state_rows(source)
    if isinstance(source, Trajectory) and not include_initial:
        states = states[1:]
    N = model.grid.N
    G = [np.empty((N, states.shape[0])) for _ in range(3)]
    for k, z in enumerate(states):
        r = model.rhs(z)
        for i in range(3):
            G[i][:, k] = r[i * N : (i + 1) * N]
    return NonlinearitySnapshots(tuple(G))


def deim_select_points(U: np.ndarray) -> np.ndarray:
    """Greedy DEIM indices for the columns of ``U``; ties go to the smallest index."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    N, m = U.shape
    if m > N:
        raise ValueError("more basis vectors than rows")
    P = np.empty(m, dtype=np.int64)
    r = U[:, 0]
    for j in range(m):
        if j > 0:
            try:
                c = np.linalg.solve(U[P[:j], :j], U[P[:j], j])
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(f"singular interpolation system at step {j}") from exc
            r = U[:, j] - U[:, :j] @ c
        a = np.abs(r)
        p = int(np.argmax(a))
        if a[p] == 0.0:
            raise np.linalg.LinAlgError(f"basis is rank deficient at column {j}")
        P[j] = p
    return P


def stencil_table(points: np.ndarray, Nx: int, Ny: int) -> np.ndarray:
    """Global indices ``[p, x+1, x-1, y+1, y-1]`` for each point (periodic)."""
    i, j = np.divmod(np.asarray(points, dtype=np.int64), Ny)
    return np.stack(
        [
            i * Ny + j,
            ((i + 1) % Nx) * Ny + j,
            ((i - 1) % Nx) * Ny + j,
            i * Ny + (j + 1) % Ny,
            i * Ny + (j - 1) % Ny,
        ],
        axis=1,
    )


@dataclass
class DeimOperator:
    """Offline DEIM data for the three right-hand-side blocks.

    ``gather`` lists the grid nodes whose state is needed online; ``local``
    holds each component's stencil table re-indexed into ``gather``.
    """

    bases: tuple[np.ndarray, np.ndarray, np.ndarray]
    points: tuple[np.ndarray, np.ndarray, np.ndarray]
    projectors: tuple[np.ndarray, np.ndarray, np.ndarray]
    conds: tuple[float, float, float]
    gather: np.ndarray
    local: tuple[np.ndarray, np.ndarray, np.ndarray]
    modes_g: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)
    means_g: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)
    hb_g: np.ndarray = field(repr=False)
    basis: PodBasis = field(repr=False)
    model: FullOrderModel = field(repr=False)
    sigmas: tuple | None = field(default=None, repr=False)

    @property
    def m(self) -> tuple[int, int, int]:
        return tuple(len(p) for p in self.points)

    def interpolate(self, i: int, g: np.ndarray) -> np.ndarray:
        """DEIM reconstruction ``U (U[P])^{-1} g[P]`` of a full vector for block ``i``."""
        U, P = self.bases[i], self.points[i]
        return U @ np.linalg.solve(U[P], g[P])


def make_deim_operator(basis: PodBasis, bases, model: FullOrderModel, points=None) -> DeimOperator:
    """Assemble the operator from given DEIM bases (points chosen greedily unless given)."""
    grid = model.grid
    bases = tuple(np.ascontiguousarray(U) for U in bases)
    if points is None:
        points = tuple(deim_select_points(U) for U in bases)
    points = tuple(np.asarray(P, dtype=np.int64) for P in points)
    projectors, conds = [], []
    for U, P, V in zip(bases, points, basis.modes):
        if len(np.unique(P)) != len(P):
            raise ValueError("DEIM points must be distinct")
        UP = U[P]
        conds.append(float(np.linalg.cond(UP)))
        # W = V^T U (U[P])^{-1}, via a solve with the transpose
        projectors.append(np.ascontiguousarray(np.linalg.solve(UP.T, (V.T @ U).T).T))
    tables = [stencil_table(P, grid.Nx, grid.Ny) for P in points]
    gather = np.unique(np.concatenate([t.ravel() for t in tables]))
    local = tuple(np.searchsorted(gather, t).astype(np.int64) for t in tables)
    return DeimOperator(
        bases=bases,
        points=points,
        projectors=tuple(projectors),
        conds=tuple(conds),
        gather=gather,
        local=local,
        modes_g=tuple(np.ascontiguousarray(V[gather]) for V in basis.modes),
        means_g=tuple(np.ascontiguousarray(mu[gather]) for mu in basis.means),
        hb_g=np.ascontiguousarray(model.hb[gather]),
        basis=basis,
        model=model,
    )


def build_deim_operator(
    basis: PodBasis,
    snaps: NonlinearitySnapshots,
    model: FullOrderModel,
    m: Optional[int] = None,
    kappa: Optional[float] = None,
) -> DeimOperator:
    """SVD of each ``G_i``, ``m`` leading vectors (same ``m`` for all blocks), greedy points."""
    if (m is None) == (kappa is None):
        raise ValueError("give exactly one of m and kappa")
    svds = [thin_svd(G) for G in snaps.matrices]
    if m is None:
        m = max(select_mode_count(s, kappa) for _, s in svds)
    limit = min(svds[0][0].shape)
    if not 1 <= m <= limit:
        raise ValueError(f"DEIM point count {m} outside [1, {limit}]")
    op = make_deim_operator(basis, [U[:, :m] for U, _ in svds], model)
    op.sigmas = tuple(s for _, s in svds)
    return op


class DeimRom:
    """Reduced model whose right-hand side is the DEIM approximation.

    The AVF update uses the Simpson average of the sampled right-hand side at
    ``z_k``, the midpoint and the current iterate; since the projection is
    linear, the samples are averaged first and projected once. The update is
    not exactly energy-preserving.
    """

    def __init__(self, op: DeimOperator):
        m = op.m
        if len(set(m)) != 1:
            raise ValueError(f"all blocks need the same number of DEIM points, got {m}")
        self.op = op
        self.basis = op.basis
        self.model = op.model
        self._n = op.basis.n
        self._modes = np.ascontiguousarray(np.stack(op.modes_g))
        self._means = np.ascontiguousarray(np.stack(op.means_g))
        self._proj = np.ascontiguousarray(np.stack(op.projectors))
        self._nbr = np.ascontiguousarray(np.stack(op.local))
        self._F = np.empty((3, op.gather.size))
        p = self.model.params
        g = self.model.grid
        self._coef = (p.sx, p.sy, p.g_nd, p.oz, g.dx, g.dy)

    @property
    def dimension(self) -> int:
        return 3 * self._n

    def lift_gathered(self, z_r: np.ndarray) -> np.ndarray:
        zr = np.asarray(z_r, dtype=float).reshape(3, self._n, 1)
        return self._means + np.matmul(self._modes, zr)[:, :, 0]

    def samples(self, zg: np.ndarray) -> np.ndarray:
        """Sampled entries ``F_i(z)[P_i]`` (3, m) from gathered states."""
        check_height(zg[2])
        out = np.empty(self._nbr.shape[:2])
        sx, sy, g, oz, dx, dy = self._coef
        kernels.deim_samples(zg, self.op.hb_g, self._nbr, sx, sy, g, oz, dx, dy, out, self._F)
        return out

    def project_samples(self, s: np.ndarray) -> np.ndarray:
        return np.matmul(self._proj, s[:, :, None]).reshape(-1)

    def rhs(self, z_r: np.ndarray) -> np.ndarray:
        return self.project_samples(self.samples(self.lift_gathered(z_r)))

    def prepare(self, z_a: np.ndarray):
        zg = self.lift_gathered(z_a)
        return zg, self.samples(zg)

    def avf_direction(self, z_a: np.ndarray, ctx, z_b: np.ndarray) -> np.ndarray:
        zg_a, s_a = ctx
        zg_b = self.lift_gathered(z_b)
        s_m = self.samples(0.5 * (zg_a + zg_b))
        s_b = self.samples(zg_b)
        return self.project_samples((s_a + 4.0 * s_m + s_b) / 6.0)

    def conserved(self, z_r: np.ndarray):
        return self.model.conserved(self.basis.lift_vector(z_r))


def reduced_rhs_deim(op: DeimOperator, basis: PodBasis, z_r: np.ndarray) -> np.ndarray:
    if op.basis is not basis:
        raise ValueError("DEIM operator was built for a different basis")
    return DeimRom(op).rhs(z_r)
