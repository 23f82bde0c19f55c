"""Average vector field time stepping for skew-gradient systems ``dz/dt = J(z) F(z)``.

One step solves

    z = z_k + dt * J((z + z_k) / 2) * int_0^1 F(z_k + xi (z - z_k)) dxi

by fixed-point (Picard) iteration. ``F`` is quadratic in the state for every
system in this package, so Simpson's rule evaluates the line integral exactly.
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"AVF fixed-point iteration did not converge in {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class IntegrationError(RuntimeError):
    """A step failed; ``partial`` holds the trajectory up to the last good state."""

    def __init__(self, step: int, cause: Exception, partial: "Trajectory"):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause
        self.partial = partial


class SkewGradientSystem(ABC):
    """ODE ``dz/dt = J(z) F(z)`` with ``J`` skew-symmetric.

    Subclasses supply the gradient ``F`` and the action of ``J``. The two AVF
    hooks can be overridden to cache per-step work or to replace the
    structured update altogether (as the DEIM reduced model does).
    """

    @property
    @abstractmethod
    def dimension(self) -> int: ...

    @abstractmethod
    def gradient(self, z: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def apply_skew(self, z_mid: np.ndarray, g: np.ndarray) -> np.ndarray: ...

    def rhs(self, z: np.ndarray) -> np.ndarray:
        return self.apply_skew(z, self.gradient(z))

    def prepare(self, z_a: np.ndarray):
        return self.gradient(z_a)

    def avf_direction(self, z_a: np.ndarray, ctx, z_b: np.ndarray) -> np.ndarray:
        mid = 0.5 * (z_a + z_b)
        g = (ctx + 4.0 * self.gradient(mid) + self.gradient(z_b)) / 6.0
        return self.apply_skew(mid, g)


def avf_averaged_gradient(system: SkewGradientSystem, z_a: np.ndarray, z_b: np.ndarray) -> np.ndarray:
    z_a = np.asarray(z_a, dtype=float)
    z_b = np.asarray(z_b, dtype=float)
    if z_a.shape != z_b.shape:
        raise ValueError("end points have different shapes")
    return (system.gradient(z_a) + 4.0 * system.gradient(0.5 * (z_a + z_b)) + system.gradient(z_b)) / 6.0


@dataclass(frozen=True)
class AvfConfig:
    dt: float = 0.1
    fp_tol: float = 1e-11
    max_iter: int = 200

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def avf_solve(
    system: SkewGradientSystem, z_k: np.ndarray, cfg: AvfConfig, dt: Optional[float] = None
) -> tuple[np.ndarray, int]:
    """One AVF step; returns the new state and the number of Picard iterations.

    ``dt`` overrides ``cfg.dt`` (a negative value steps backwards in time).
    """
    dt = cfg.dt if dt is None else dt
    z_k = np.asarray(z_k, dtype=float)
    ctx = system.prepare(z_k)
    z = z_k.copy()
    res = np.inf
    for it in range(1, cfg.max_iter + 1):
        z_new = z_k + dt * system.avf_direction(z_k, ctx, z)
        # for Picard the increment is also the equation residual of the previous iterate
        res = float(np.max(np.abs(z_new - z)))
        z = z_new
        if res <= cfg.fp_tol:
            return z, it
        if not np.isfinite(res):
            break
    raise NonConvergence(it, res)


def avf_step(system: SkewGradientSystem, z_k: np.ndarray, cfg: AvfConfig, dt: Optional[float] = None) -> np.ndarray:
    return avf_solve(system, z_k, cfg, dt)[0]


@dataclass
class Trajectory:
    """States at ``t_0 .. t_Nt`` on a uniform time grid.

    ``states`` has shape ``(Nt + 1, dim)``; it is ``None`` when the run kept
    no states (an observer collected what it needed). ``wall_time`` counts only
    the step solves.
    """

    dt: float
    n_steps: int
    states: Optional[np.ndarray] = None
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    wall_time: float = 0.0
    conserved: Optional[np.ndarray] = None  # (Nt + 1, 4): energy, enstrophy, mass, vorticity

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def __len__(self) -> int:
        return self.n_steps + 1


Observer = Callable[[int, np.ndarray], None]


def integrate(
    system: SkewGradientSystem,
    z0: np.ndarray,
    Nt: int,
    cfg: AvfConfig,
    observer: Optional[Observer] = None,
    keep_states: bool = True,
    conserved: Optional[Callable[[np.ndarray], tuple]] = None,
) -> Trajectory:
    """Take ``Nt`` AVF steps from ``z0``.

    ``observer(k, z)`` is called for ``k = 0 .. Nt`` and must not modify ``z``.
    ``conserved(z)`` (optional) returns the four conserved quantities of a
    state and is evaluated outside the timed region.
    """
    if Nt < 0:
        raise ValueError("Nt must be non-negative")
    z = np.array(z0, dtype=float)
    states = np.empty((Nt + 1, z.size)) if keep_states else None
    cons = np.empty((Nt + 1, 4)) if conserved is not None else None
    iters = np.zeros(Nt, dtype=int)
    traj = Trajectory(dt=cfg.dt, n_steps=Nt, states=states, iterations=iters, conserved=cons)

    def record(k, z):
        if states is not None:
            states[k] = z
        if cons is not None:
            cons[k] = tuple(conserved(z))
        if observer is not None:
            observer(k, z)

    record(0, z)
    elapsed = 0.0
    for k in range(Nt):
        t0 = time.perf_counter()
        try:
            z, iters[k] = avf_solve(system, z, cfg)
        except (NonConvergence, ValueError, FloatingPointError) as exc:
            traj.wall_time = elapsed
            traj.n_steps = k
            traj.iterations = iters[:k]
            if states is not None:
                traj.states = states[: k + 1]
            if cons is not None:
                traj.conserved = cons[: k + 1]
            raise IntegrationError(k, exc, traj) from exc
        elapsed += time.perf_counter() - t0
        record(k + 1, z)
    traj.wall_time = elapsed
    return traj
