"""Snapshot POD and the structure-preserving Galerkin reduced model.

The reduced state ``z_r = (u_r, v_r, h_r)`` lifts to the full state
componentwise, ``w = mean_w + V_w w_r``. The reduced system keeps the
skew-gradient form

    dz_r/dt = J_r(z) V^T F(z),     J_r = V^T J(z) V,

with ``V = blockdiag(V_u, V_v, V_h)``. The constant blocks of ``J_r`` are
precomputed; the vorticity block ``V_u^T diag(q) V_v`` is recomputed from the
lifted potential vorticity at O(n^2 N) cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import kernels
from .integrator import SkewGradientSystem, Trajectory
from .model import CanonicalState, FullOrderModel, check_height

COMPONENTS = ("u", "v", "h")


@dataclass
class SnapshotSet:
    """Mean-subtracted snapshot matrices ``S_w`` (N x K) and the means, per component."""

    matrices: tuple[np.ndarray, np.ndarray, np.ndarray]
    means: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def N(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.matrices[0].shape[1]


def _state_rows(source) -> np.ndarray:
    states = source.states if isinstance(source, Trajectory) else source
    if states is None:
        raise ValueError("trajectory kept no states")
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] % 3:
        raise ValueError("states must be an array of shape (K, 3N)")
    return states


def assemble_snapshots(source, include_initial: bool = False) -> SnapshotSet:
    """Build ``S_w = (w^k - mean_w)`` from a trajectory or a ``(K, 3N)`` state array.

    By default the initial state is dropped, so a trajectory with ``Nt`` steps
    gives ``N x Nt`` matrices; the mean is taken over the same columns.
    """
    states = _state_rows(source)
    if isinstance(source, Trajectory) and not include_initial:
        states = states[1:]
    if states.shape[0] < 2:
        raise ValueError("need at least 2 snapshots")
    N = states.shape[1] // 3
    mats, means = [], []
    for c in range(3):
        block = states[:, c * N : (c + 1) * N]
        mean = block.mean(axis=0)
        mats.append(np.ascontiguousarray((block - mean).T))
        means.append(mean)
    return SnapshotSet(tuple(mats), tuple(means))


def select_mode_count(sigma: Sequence[float], kappa: float) -> int:
    """Smallest ``p`` whose leading ``p`` squared singular values exceed ``1 - kappa`` of the total."""
    sigma = np.asarray(sigma, dtype=float)
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    if np.any(sigma < 0) or np.any(np.diff(sigma) > 0):
        raise ValueError("singular values must be non-negative and non-increasing")
    energy = sigma**2
    total = energy.sum()
    if total == 0.0:
        raise ValueError("all singular values are zero")
    ratio = np.cumsum(energy) / total
    hits = np.flatnonzero(ratio > 1.0 - kappa)
    # rounding can leave the full sum a hair below 1 - kappa only if kappa ~ eps
    return int(hits[0]) + 1 if hits.size else sigma.size


def normalize_signs(U: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def thin_svd(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    U, s, _ = scipy.linalg.svd(S, full_matrices=False, lapack_driver="gesdd")
    return normalize_signs(U), s


@dataclass
class PodBasis:
    modes: tuple[np.ndarray, np.ndarray, np.ndarray]
    sigmas: tuple[np.ndarray, np.ndarray, np.ndarray]
    means: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def n(self) -> int:
        return self.modes[0].shape[1]

    @property
    def N(self) -> int:
        return self.modes[0].shape[0]

    def project(self, z: np.ndarray) -> np.ndarray:
        """Reduced coordinates ``V^T (z - mean)`` of a full state vector."""
        z = np.asarray(z, dtype=float)
        N = self.N
        return np.concatenate(
            [self.modes[c].T @ (z[c * N : (c + 1) * N] - self.means[c]) for c in range(3)]
        )

    def lift_vector(self, z_r: np.ndarray) -> np.ndarray:
        z_r = np.asarray(z_r, dtype=float)
        n = self.n
        if z_r.shape != (3 * n,):
            raise ValueError(f"reduced state must have length {3 * n}")
        return np.concatenate([self.means[c] + self.modes[c] @ z_r[c * n : (c + 1) * n] for c in range(3)])

    def lift_many(self, Z_r: np.ndarray) -> np.ndarray:
        """Lift a ``(K, 3n)`` array of reduced states to ``(K, 3N)``."""
        n = self.n
        return np.concatenate(
            [self.means[c] + Z_r[:, c * n : (c + 1) * n] @ self.modes[c].T for c in range(3)], axis=1
        )


def lift(basis: PodBasis, z_r: np.ndarray) -> CanonicalState:
    return CanonicalState.from_vector(basis.lift_vector(z_r))


def compute_pod_basis(snaps: SnapshotSet, n: Optional[int] = None, kappa: Optional[float] = None) -> PodBasis:
    """Per-component thin SVD; keeps the same number of modes for every component.

    With ``kappa`` the count is the largest of the per-component energy-criterion counts.
    """
    if (n is None) == (kappa is None):
        raise ValueError("give exactly one of n and kappa")
    svds = [thin_svd(S) for S in snaps.matrices]
    if n is None:
        n = max(select_mode_count(s, kappa) for _, s in svds)
    limit = min(snaps.N, snaps.n_snapshots)
    if not 1 <= n <= limit:
        raise ValueError(f"mode count {n} outside [1, {limit}]")
    modes = tuple(np.ascontiguousarray(U[:, :n]) for U, _ in svds)
    return PodBasis(modes, tuple(s for _, s in svds), tuple(m.copy() for m in snaps.means))


def truncate(basis: PodBasis, n: int) -> PodBasis:
    if not 1 <= n <= basis.n:
        raise ValueError(f"cannot truncate {basis.n} modes to {n}")
    return PodBasis(tuple(np.ascontiguousarray(V[:, :n]) for V in basis.modes), basis.sigmas, basis.means)


@dataclass
class ReducedOperators:
    """Constant blocks of ``J_r`` and the row-Kronecker gather matrix.

    Row ``i`` of ``K_uv`` is ``V_u[i, :] kron V_v[i, :]``, so that
    ``K_uv^T q`` reshaped to ``n x n`` is ``V_u^T diag(q) V_v``.
    """

    A_uh: np.ndarray
    A_vh: np.ndarray
    A_hu: np.ndarray
    A_hv: np.ndarray
    K_uv: np.ndarray
    basis: PodBasis = field(repr=False)
    model: FullOrderModel = field(repr=False)

    @property
    def n(self) -> int:
        return self.A_uh.shape[0]


def build_reduced_operators(basis: PodBasis, model: FullOrderModel) -> ReducedOperators:
    Vu, Vv, Vh = basis.modes
    Dx, Dy = model.ops.Dx, model.ops.Dy
    N, n = Vu.shape
    return ReducedOperators(
        A_uh=Vu.T @ (Dx @ Vh),
        A_vh=Vv.T @ (Dy @ Vh),
        A_hu=Vh.T @ (Dx @ Vu),
        A_hv=Vh.T @ (Dy @ Vv),
        K_uv=(Vu[:, :, None] * Vv[:, None, :]).reshape(N, n * n),
        basis=basis,
        model=model,
    )


def project_vorticity_blocks(ops: ReducedOperators, q: np.ndarray, method: str = "gemm") -> tuple[np.ndarray, np.ndarray]:
    """``B_uv = V_u^T diag(q) V_v`` and ``B_vu = V_v^T diag(q) V_u = B_uv^T``.

    ``method`` picks how the O(n^2 N) contraction runs: ``"gather"`` applies
    ``K_uv^T`` to ``q``; ``"gemm"`` scales the rows of ``V_u`` by ``q`` and
    multiplies; ``"loop"`` accumulates row outer products in a compiled loop.
    """
    Vu, Vv = ops.basis.modes[0], ops.basis.modes[1]
    q = np.asarray(q, dtype=float)
    if q.shape != (Vu.shape[0],):
        raise ValueError("q must have one entry per grid node")
    n = ops.n
    if method == "gather":
        B = (ops.K_uv.T @ q).reshape(n, n)
    elif method == "gemm":
        B = np.empty((n, n))
        kernels.NUMPY_KERNELS["vorticity_block"](Vu, Vv, q, B)
    elif method == "loop":
        B = np.empty((n, n))
        kernels.vorticity_block(Vu, Vv, q, B)
    else:
        raise ValueError(f"unknown method {method!r}")
    return B, B.T


def apply_reduced_skew(ops: ReducedOperators, B: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = ops.n
    gu, gv, gh = g[:n], g[n : 2 * n], g[2 * n :]
    return np.concatenate(
        [
            B @ gv - ops.A_uh @ gh,
            -(B.T @ gu) - ops.A_vh @ gh,
            -(ops.A_hu @ gu) - ops.A_hv @ gv,
        ]
    )


def reduced_skew_matrix(ops: ReducedOperators, q: np.ndarray) -> np.ndarray:
    """Dense ``3n x 3n`` matrix ``J_r`` for a given lifted potential vorticity."""
    B, Bt = project_vorticity_blocks(ops, q)
    Z = np.zeros_like(B)
    return np.block(
        [
            [Z, B, -ops.A_uh],
            [-Bt, Z, -ops.A_vh],
            [-ops.A_hu, -ops.A_hv, Z],
        ]
    )


class PodRom(SkewGradientSystem):
    """Reduced skew-gradient system on ``z_r`` of length 3n.

    ``form="galerkin"`` switches to the plain Galerkin projection
    ``V^T J(z) F(z)`` of the full right-hand side. That variant is not
    skew-gradient and its cost scales with the full dimension; it exists for
    comparison runs only.
    """

    def __init__(self, ops: ReducedOperators, form: str = "skew", block_method: str = "gemm"):
        if form not in ("skew", "galerkin"):
            raise ValueError(f"unknown form {form!r}")
        self.ops = ops
        self.basis = ops.basis
        self.model = ops.model
        self.form = form
        self.block_method = block_method

    @property
    def dimension(self) -> int:
        return 3 * self.basis.n

    def _project(self, f: np.ndarray) -> np.ndarray:
        N = self.basis.N
        return np.concatenate([self.basis.modes[c].T @ f[c * N : (c + 1) * N] for c in range(3)])

    def gradient(self, z_r: np.ndarray) -> np.ndarray:
        return self._project(self.model.gradient(self.basis.lift_vector(z_r)))

    def _apply_skew_lifted(self, z_full: np.ndarray, g: np.ndarray) -> np.ndarray:
        q = self.model.potential_vorticity(z_full)
        B, _ = project_vorticity_blocks(self.ops, q, self.block_method)
        return apply_reduced_skew(self.ops, B, g)

    def apply_skew(self, z_mid: np.ndarray, g: np.ndarray) -> np.ndarray:
        return self._apply_skew_lifted(self.basis.lift_vector(z_mid), g)

    def rhs(self, z_r: np.ndarray) -> np.ndarray:
        z = self.basis.lift_vector(z_r)
        if self.form == "galerkin":
            return self._project(self.model.rhs(z))
        return self._apply_skew_lifted(z, self._project(self.model.gradient(z)))

    def prepare(self, z_a: np.ndarray):
        za = self.basis.lift_vector(z_a)
        return za, self.model.gradient(za)

    def avf_direction(self, z_a: np.ndarray, ctx, z_b: np.ndarray) -> np.ndarray:
        za, Fa = ctx
        zb = self.basis.lift_vector(z_b)
        if self.form == "galerkin":
            return self._project(self.model.avf_direction(za, Fa, zb))
        mid = 0.5 * (za + zb)
        avg = (Fa + 4.0 * self.model.gradient(mid) + self.model.gradient(zb)) / 6.0
        return self._apply_skew_lifted(mid, self._project(avg))

    def conserved(self, z_r: np.ndarray):
        return self.model.conserved(self.basis.lift_vector(z_r))


def reduced_rhs_pod(basis: PodBasis, ops: ReducedOperators, z_r: np.ndarray) -> np.ndarray:
    if ops.basis is not basis:
        raise ValueError("operators were built for a different basis")
    return PodRom(ops).rhs(z_r)
