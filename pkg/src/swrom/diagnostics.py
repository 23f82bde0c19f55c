"""Error metrics, conservation drift and timing reports."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .integrator import Trajectory

COMPONENT_NAMES = ("u_tilde", "v_tilde", "h")
QUANTITY_NAMES = ("energy", "enstrophy", "mass", "vorticity")


def _states(x) -> np.ndarray:
    if isinstance(x, Trajectory):
        x = x.states
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] % 3:
        raise ValueError("expected states of shape (K, 3N)")
    return x


def time_avg_relative_l2(full, reduced, skip_initial: bool = True) -> dict[str, float]:
    """Mean over steps of ``||w^k - w_hat^k|| / ||w^k||`` per component.

    ``full`` and ``reduced`` are trajectories or ``(Nt + 1, 3N)`` arrays of
    full-space states (reduced ones already lifted). The grid weight of the
    discrete L2 norm cancels in the ratio. The initial state is excluded
    unless ``skip_initial`` is false.
    """
    A, B = _states(full), _states(reduced)
    if A.shape != B.shape:
        raise ValueError(f"trajectory shapes differ: {A.shape} vs {B.shape}")
    if skip_initial:
        A, B = A[1:], B[1:]
    if A.shape[0] == 0:
        raise ValueError("no steps to compare")
    N = A.shape[1] // 3
    out = {}
    for c, name in enumerate(COMPONENT_NAMES):
        a = A[:, c * N : (c + 1) * N]
        b = B[:, c * N : (c + 1) * N]
        den = np.linalg.norm(a, axis=1)
        if np.any(den == 0.0):
            k = int(np.flatnonzero(den == 0.0)[0])
            raise ZeroDivisionError(f"{name} of the reference is identically zero at row {k}")
        out[name] = float(np.mean(np.linalg.norm(a - b, axis=1) / den))
    return out


@dataclass
class DriftSeries:
    """``|Q^k - Q_ref|`` for ``k = 0 .. Nt`` and its mean over ``k = 1 .. Nt``."""

    series: np.ndarray
    mean: float


def conservation_drift(values: Sequence[float], reference: Optional[float] = None) -> DriftSeries:
    """Absolute drift of a scalar series from ``reference`` (default: its own first value)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("need a nonempty 1-d series")
    ref = v[0] if reference is None else float(reference)
    d = np.abs(v - ref)
    return DriftSeries(d, float(d[1:].mean()) if v.size > 1 else 0.0)


def relative_drift(values: Sequence[float]) -> float:
    """``max_k |Q^k - Q^0| / |Q^0|``."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0])) / abs(v[0]))


@dataclass
class ErrorReport:
    """Accuracy of one reduced run against the full-order run.

    ``drift`` holds the mean ``|Q^k - Q^0|`` for energy and enstrophy, with
    ``Q^0`` taken from the full-order initial state; ``series`` holds the
    per-step drifts for ``k = 1 .. Nt``.
    """

    errors: dict[str, float]
    drift: dict[str, float]
    series: dict[str, np.ndarray] = field(repr=False)

    def rows(self, prefix: str = "") -> list[tuple[str, float]]:
        rows = [(f"{prefix}error_{k}", v) for k, v in self.errors.items()]
        rows += [(f"{prefix}drift_{k}", v) for k, v in self.drift.items()]
        return rows


def error_report(full_states, reduced_states, full_conserved, reduced_conserved) -> ErrorReport:
    """Build an :class:`ErrorReport` from lifted states and ``(Nt + 1, 4)`` conserved-quantity tables."""
    errs = time_avg_relative_l2(full_states, reduced_states)
    fc = np.asarray(full_conserved, dtype=float)
    rc = np.asarray(reduced_conserved, dtype=float)
    drift, series = {}, {}
    for j, name in enumerate(QUANTITY_NAMES[:2]):
        d = conservation_drift(rc[:, j], reference=fc[0, j])
        drift[name] = d.mean
        series[name] = d.series[1:]
    return ErrorReport(errs, drift, series)


PHASES = ("fom", "pod_basis", "pod_online", "deim_basis", "deim_online")


@dataclass
class TimingReport:
    """Wall-clock seconds per phase; ``None`` for phases that did not run."""

    fom: float
    pod_basis: Optional[float] = None
    pod_online: Optional[float] = None
    deim_basis: Optional[float] = None
    deim_online: Optional[float] = None

    def __post_init__(self):
        for name in PHASES:
            t = getattr(self, name)
            if t is not None and not t > 0:
                raise ValueError(f"{name} time must be positive, got {t}")

    @property
    def pod_speedup(self) -> Optional[float]:
        return None if self.pod_online is None else self.fom / self.pod_online

    @property
    def deim_speedup(self) -> Optional[float]:
        return None if self.deim_online is None else self.fom / self.deim_online

    def rows(self) -> list[tuple[str, float]]:
        rows = [(f"time_{p}", getattr(self, p)) for p in PHASES if getattr(self, p) is not None]
        if self.pod_speedup is not None:
            rows.append(("speedup_pod", self.pod_speedup))
        if self.deim_speedup is not None:
            rows.append(("speedup_deim", self.deim_speedup))
        return rows


def benchmark_report(records: Mapping[str, object]) -> TimingReport:
    """Collapse timing records into a report.

    Each value is a duration in seconds or a list of repeated durations, of
    which the median is used. ``fom`` is required; a reduced method needs
    both its basis and its online phase.
    """
    times = {}
    for name, val in records.items():
        if name not in PHASES:
            raise ValueError(f"unknown phase {name!r}")
        vals = [float(v) for v in (val if isinstance(val, (list, tuple, np.ndarray)) else [val])]
        if not vals:
            raise ValueError(f"phase {name!r} has no timings")
        times[name] = statistics.median(vals)
    if "fom" not in times:
        raise KeyError("missing phase 'fom'")
    for method in ("pod", "deim"):
        have = [p in times for p in (f"{method}_basis", f"{method}_online")]
        if any(have) and not all(have):
            missing = f"{method}_basis" if not have[0] else f"{method}_online"
            raise KeyError(f"missing phase {missing!r}")
    return TimingReport(**times)


def summary_table(rows: Sequence[tuple[str, float]], title: str = "") -> str:
    width = max([len(q) for q, _ in rows] + [8])
    lines = [title] if title else []
    lines.append(f"{'quantity':<{width}}  value")
    lines.append("-" * (width + 14))
    for q, v in rows:
        lines.append(f"{q:<{width}}  {v:.4e}")
    return "\n".join(lines)
