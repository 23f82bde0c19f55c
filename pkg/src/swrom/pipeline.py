"""Offline/online experiment pipeline: FOM run, POD and DEIM reduced runs, reports.

Artifact layout under the output directory::

    config.resolved.yaml
    fom/   initial.swrm  S_u.swrm S_v.swrm S_h.swrm  conserved.csv  timing.csv
    pod/   V_u.swrm V_v.swrm V_h.swrm  mean.swrm  sigma.swrm  trajectory.swrm
           conserved.csv  errors.csv  timing.csv
    deim/  U_1.swrm U_2.swrm U_3.swrm  points.swrm  sigma.swrm  trajectory.swrm
           conserved.csv  errors.csv  timing.csv
    report/ errors.csv  timing.csv  summary.txt

``S_w`` hold the raw full-order states for steps ``1 .. Nt`` (N x Nt); reduced
trajectories hold the reduced coordinates for steps ``0 .. Nt`` (3n x (Nt + 1)).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io, kernels
from .config import ExperimentConfig, save_config
from .deim import DeimRom, NonlinearitySnapshots, build_deim_operator
from .diagnostics import QUANTITY_NAMES, benchmark_report, conservation_drift, summary_table
from .grid import build_diff_ops
from .integrator import IntegrationError, integrate
from .model import FullOrderModel
from .pod import PodBasis, PodRom, SnapshotSet, build_reduced_operators, compute_pod_basis
from .scenarios import build_scenario

log = logging.getLogger(__name__)

COMP = ("u", "v", "h")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class FomData:
    """Full-order results needed downstream, loaded from disk or kept from the run."""

    z0: np.ndarray
    S: tuple[np.ndarray, np.ndarray, np.ndarray]
    conserved: np.ndarray

    @property
    def N(self) -> int:
        return self.S[0].shape[0]

    @property
    def Nt(self) -> int:
        return self.S[0].shape[1]

    def snapshot_set(self) -> SnapshotSet:
        means = tuple(S.mean(axis=1) for S in self.S)
        mats = tuple(np.ascontiguousarray(S - mu[:, None]) for S, mu in zip(self.S, means))
        return SnapshotSet(mats, means)

    def state(self, k: int) -> np.ndarray:
        if k == 0:
            return self.z0
        return np.concatenate([S[:, k - 1] for S in self.S])


@dataclass
class RunArtifacts:
    out: Path
    config: ExperimentConfig
    reports: dict[str, dict[str, float]] = field(default_factory=dict)


def build_model(cfg: ExperimentConfig) -> FullOrderModel:
    grid = cfg.grid()
    return FullOrderModel(grid, build_diff_ops(grid), cfg.params())


def initial_state(cfg: ExperimentConfig, model: FullOrderModel) -> np.ndarray:
    if cfg.scenario == "custom":
        z0 = io.read_matrix(cfg.initial)[:, 0]
        if z0.size != model.dimension:
            raise ValueError(f"initial state has {z0.size} entries, grid needs {model.dimension}")
        return z0
    return build_scenario(cfg.scenario, model.grid, model.params).as_vector()


# ---------------------------------------------------------------------------
# stages


def stage_fom(cfg: ExperimentConfig, out: Path, model: FullOrderModel) -> FomData:
    z0 = initial_state(cfg, model)
    N = model.grid.N
    d = out / "fom"
    io.write_matrix(d / "initial.swrm", z0)
    Nt = cfg.steps
    if cfg.stream_snapshots:
        writers = [io.ColumnWriter(d / f"S_{c}.swrm", N) for c in COMP]

        def observer(k, z):
            if k > 0:
                for c, w in enumerate(writers):
                    w.append(z[c * N : (c + 1) * N])

        try:
            traj = integrate(model, z0, Nt, cfg.avf(), observer=observer, keep_states=False, conserved=model.conserved)
        except BaseException:
            for w in writers:
                w.abort()
            raise
        for w in writers:
            w.close()
        S = tuple(io.read_matrix(d / f"S_{c}.swrm") for c in COMP)
    else:
        traj = integrate(model, z0, Nt, cfg.avf(), conserved=model.conserved)
        S = tuple(np.ascontiguousarray(traj.states[1:, c * N : (c + 1) * N].T) for c in range(3))
        for c, M in zip(COMP, S):
            io.write_matrix(d / f"S_{c}.swrm", M)
    io.write_conserved(d / "conserved.csv", traj.times, traj.conserved)
    io.write_report(
        d / "timing.csv",
        [("time_fom", traj.wall_time), ("mean_iterations", float(np.mean(traj.iterations)))],
    )
    log.info("fom: %d steps in %.2f s", Nt, traj.wall_time)
    return FomData(z0, S, traj.conserved)


def load_fom(out: Path) -> FomData:
    d = out / "fom"
    try:
        z0 = io.read_matrix(d / "initial.swrm")[:, 0]
        S = tuple(io.read_matrix(d / f"S_{c}.swrm") for c in COMP)
        cons = io.read_conserved(d / "conserved.csv")
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"full-order results missing under {d}; run the fom stage first") from exc
    return FomData(z0, S, cons)


def _timed_runs(system, z0, cfg: ExperimentConfig):
    """Integrate ``cfg.timing_repeats`` times; returns the last trajectory and all wall times."""
    times = []
    traj = None
    for _ in range(cfg.timing_repeats):
        traj = integrate(system, z0, cfg.steps, cfg.avf(), keep_states=True)
        times.append(traj.wall_time)
    return traj, times


def _rom_errors(fom: FomData, basis: PodBasis, Zr: np.ndarray) -> dict[str, float]:
    """Time-averaged relative L2 errors of the lifted reduced run, steps ``1 .. Nt``."""
    n = basis.n
    errs = {}
    for c, name in enumerate(("u_tilde", "v_tilde", "h")):
        ref = fom.S[c]
        approx = basis.means[c][:, None] + basis.modes[c] @ Zr[1:, c * n : (c + 1) * n].T
        den = np.linalg.norm(ref, axis=0)
        if np.any(den == 0.0):
            raise ZeroDivisionError(f"{name} of the full-order run vanishes at some step")
        errs[name] = float(np.mean(np.linalg.norm(ref - approx, axis=0) / den))
    return errs


def _finish_rom(name, out, fom, basis, traj, cons, online, offline, model, extra=()):
    d = out / name
    io.write_matrix(d / "trajectory.swrm", traj.states.T)
    io.write_conserved(d / "conserved.csv", traj.times, cons)
    errs = _rom_errors(fom, basis, traj.states)
    rows = [(f"error_{k}", v) for k, v in errs.items()]
    for j, q in enumerate(QUANTITY_NAMES[:2]):
        rows.append((f"drift_{q}", conservation_drift(cons[:, j], reference=fom.conserved[0, j]).mean))
    for j, q in enumerate(QUANTITY_NAMES):
        rows.append((f"self_drift_{q}", conservation_drift(cons[:, j]).mean))
    io.write_report(d / "errors.csv", rows)
    timing = [(f"time_{name}_basis", offline)] + [(f"time_{name}_online_{i}", t) for i, t in enumerate(online)]
    timing += [("mean_iterations", float(np.mean(traj.iterations)))] + list(extra)
    io.write_report(d / "timing.csv", timing)
    log.info("%s: online %s s, errors %s", name, ["%.3f" % t for t in online], errs)
    return dict(rows)


def _run_rom(name, system, z0, cfg, out, basis):
    try:
        return _timed_runs(system, z0, cfg)
    except IntegrationError as exc:
        if exc.partial.states is not None:
            io.write_matrix(out / name / "trajectory_partial.swrm", exc.partial.states.T)
        raise


def stage_pod(cfg: ExperimentConfig, out: Path, model: FullOrderModel, fom: FomData):
    t0 = time.perf_counter()
    snaps = fom.snapshot_set()
    if cfg.n is None:
        basis = compute_pod_basis(snaps, kappa=cfg.kappa_pod)
    else:
        basis = compute_pod_basis(snaps, n=cfg.n)
    ops = build_reduced_operators(basis, model)
    offline = time.perf_counter() - t0
    del snaps
    d = out / "pod"
    for c, V in zip(COMP, basis.modes):
        io.write_matrix(d / f"V_{c}.swrm", V)
    io.write_matrix(d / "mean.swrm", np.stack(basis.means, axis=1))
    io.write_matrix(d / "sigma.swrm", np.stack(basis.sigmas, axis=1))
    rom = PodRom(ops, block_method=cfg.block_method)
    z0r = basis.project(fom.z0)
    traj, online = _run_rom("pod", rom, z0r, cfg, out, basis)
    cons = np.array([rom.conserved(z).as_tuple() for z in traj.states])
    report = _finish_rom("pod", out, fom, basis, traj, cons, online, offline, model, [("n", basis.n)])
    return basis, report


def load_basis(out: Path) -> PodBasis:
    d = out / "pod"
    try:
        modes = tuple(np.ascontiguousarray(io.read_matrix(d / f"V_{c}.swrm")) for c in COMP)
        means = io.read_matrix(d / "mean.swrm")
        sig = io.read_matrix(d / "sigma.swrm")
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"POD basis missing under {d}; run the pod stage first") from exc
    return PodBasis(modes, tuple(sig.T.copy()), tuple(np.ascontiguousarray(means.T)))


def stage_deim(cfg: ExperimentConfig, out: Path, model: FullOrderModel, fom: FomData, basis: PodBasis):
    t0 = time.perf_counter()
    N = fom.N
    G = [np.empty((N, fom.Nt)) for _ in range(3)]
    for k in range(fom.Nt):
        r = model.rhs(fom.state(k + 1))
        for i in range(3):
            G[i][:, k] = r[i * N : (i + 1) * N]
    snaps = NonlinearitySnapshots(tuple(G))
    if cfg.m is None:
        op = build_deim_operator(basis, snaps, model, kappa=cfg.kappa_deim)
    else:
        op = build_deim_operator(basis, snaps, model, m=cfg.m)
    rom = DeimRom(op)
    offline = time.perf_counter() - t0
    del snaps, G
    d = out / "deim"
    for i, U in enumerate(op.bases, start=1):
        io.write_matrix(d / f"U_{i}.swrm", U)
    io.write_matrix(d / "points.swrm", np.stack(op.points, axis=1).astype(float))
    io.write_matrix(d / "sigma.swrm", np.stack(op.sigmas, axis=1))
    z0r = basis.project(fom.z0)
    traj, online = _run_rom("deim", rom, z0r, cfg, out, basis)
    cons = np.array([rom.conserved(z).as_tuple() for z in traj.states])
    extra = [("m", op.m[0]), ("gather_size", op.gather.size)] + [(f"cond_{i}", c) for i, c in enumerate(op.conds, 1)]
    return _finish_rom("deim", out, fom, basis, traj, cons, online, offline, model, extra)


def stage_report(out: Path) -> tuple[dict, str]:
    records: dict[str, object] = {}
    fom_t = io.read_report(out / "fom" / "timing.csv")
    records["fom"] = fom_t["time_fom"]
    err_rows: list[tuple[str, float]] = []
    for name in ("pod", "deim"):
        tpath = out / name / "timing.csv"
        epath = out / name / "errors.csv"
        if not (tpath.exists() and epath.exists()):
            continue
        t = io.read_report(tpath)
        records[f"{name}_basis"] = t[f"time_{name}_basis"]
        records[f"{name}_online"] = [v for k, v in t.items() if k.startswith(f"time_{name}_online_")]
        err_rows += [(f"{name}_{k}", v) for k, v in io.read_report(epath).items()]
    timing = benchmark_report(records)
    io.write_report(out / "report" / "errors.csv", err_rows)
    io.write_report(out / "report" / "timing.csv", timing.rows())
    text = summary_table(err_rows, "errors and drifts") + "\n\n" + summary_table(timing.rows(), "timings (s)")
    with io.atomic_path(out / "report" / "summary.txt") as tmp:
        tmp.write_text(text + "\n", encoding="utf-8")
    return dict(err_rows) | dict(timing.rows()), text


def run_pipeline(cfg: ExperimentConfig, stages: Optional[tuple[str, ...]] = None, echo=None) -> RunArtifacts:
    """Run the requested stages in order; missing inputs are loaded from earlier runs in ``cfg.out``.

    Any failure is re-raised as :class:`StageError` naming the stage. Files
    written by earlier stages are left in place.
    """
    cfg = cfg.resolved()
    stages = tuple(cfg.stages if stages is None else stages)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.resolved.yaml")
    result = RunArtifacts(out, cfg)
    kernels.warmup()
    current = "setup"
    try:
        model = build_model(cfg)
        fom = basis = None
        if "fom" in stages:
            current = "fom"
            fom = stage_fom(cfg, out, model)
        if "pod" in stages:
            current = "pod"
            fom = fom or load_fom(out)
            basis, result.reports["pod"] = stage_pod(cfg, out, model, fom)
        if "deim" in stages:
            current = "deim"
            fom = fom or load_fom(out)
            basis = basis or load_basis(out)
            result.reports["deim"] = stage_deim(cfg, out, model, fom, basis)
        if "report" in stages:
            current = "report"
            result.reports["report"], text = stage_report(out)
            if echo is not None:
                echo(text)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(current, exc) from exc
    return result
