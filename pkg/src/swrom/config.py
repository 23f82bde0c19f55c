"""Experiment configuration, read from and echoed to YAML."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .grid import Grid, make_grid
from .integrator import AvfConfig
from .model import NondimScales, PhysParams
from .scenarios import SCENARIOS, resolve_name

STAGES = ("fom", "pod", "deim", "report")

# mode counts used for the two named flows unless overridden
DEFAULT_MODES = {
    "geostrophic_adjustment": (30, 200),
    "shear_instability": (18, 170),
}

_UNSET = object()


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str = "geostrophic_adjustment"
    bounds: Optional[tuple[float, float, float, float]] = None
    Nx: Optional[int] = None
    Ny: Optional[int] = None
    dx: Optional[float] = 0.1
    dt: float = 0.1
    T: Optional[float] = None
    steps: Optional[int] = None
    initial: Optional[str] = None
    phi_lat: float = math.pi / 4
    delta: Optional[float] = None
    g_nd: float = 1.0
    H_scale: float = 1000.0
    Omega_rot: float = 7.3e-5
    g_dim: float = 1e-3
    n: Any = _UNSET
    m: Any = _UNSET
    kappa_pod: float = 1e-3
    kappa_deim: float = 1e-5
    block_method: str = "gemm"
    fp_tol: float = 1e-11
    max_iter: int = 200
    out: str = "out"
    stages: tuple[str, ...] = STAGES
    stream_snapshots: bool = True
    timing_repeats: int = 3

    def resolved(self) -> "ExperimentConfig":
        """Fill every default that depends on the scenario and check consistency."""
        c = replace(self)
        if c.scenario == "custom":
            if c.bounds is None or c.initial is None or (c.T is None and c.steps is None):
                raise ConfigError("custom scenario needs bounds, initial and T or steps")
        else:
            try:
                c.scenario = resolve_name(c.scenario)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            spec = SCENARIOS[c.scenario]
            if c.bounds is not None and tuple(c.bounds) != spec.bounds:
                raise ConfigError(f"scenario {c.scenario} fixes the domain to {spec.bounds}")
            c.bounds = spec.bounds
            if c.T is None and c.steps is None:
                c.T = spec.T
        c.bounds = tuple(float(b) for b in c.bounds)
        a, b, lo, hi = c.bounds
        if c.Nx is not None and c.Ny is not None:
            c.dx = None  # grid given directly
        if c.Nx is None:
            c.Nx = _count((b - a) / c.dx, "x")
        if c.Ny is None:
            c.Ny = _count((hi - lo) / c.dx, "y")
        if not c.dt > 0:
            raise ConfigError("dt must be positive")
        if c.steps is not None:
            c.steps = int(c.steps)
            if c.steps < 1:
                raise ConfigError("steps must be positive")
            c.T = c.steps * c.dt
        else:
            ratio = c.T / c.dt
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ConfigError(f"T/dt = {ratio} is not a positive integer")
            c.steps = int(round(ratio))
        if c.delta is None:
            c.delta = NondimScales(c.H_scale, c.Omega_rot, c.g_dim).delta
        defaults = DEFAULT_MODES.get(c.scenario, (None, None))
        if c.n is _UNSET:
            c.n = defaults[0]
        if c.m is _UNSET:
            c.m = defaults[1]
        for name in ("kappa_pod", "kappa_deim"):
            if not 0 < getattr(c, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        c.stages = tuple(c.stages)
        unknown = set(c.stages) - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown stages {sorted(unknown)}")
        if c.block_method not in ("gemm", "gather", "loop"):
            raise ConfigError(f"unknown block_method {c.block_method!r}")
        if c.timing_repeats < 1:
            raise ConfigError("timing_repeats must be at least 1")
        return c

    def grid(self) -> Grid:
        a, b, lo, hi = self.bounds
        return make_grid(a, b, lo, hi, self.Nx, self.Ny)

    def params(self) -> PhysParams:
        return PhysParams.from_latitude(self.phi_lat, delta=self.delta, g_nd=self.g_nd)

    def avf(self) -> AvfConfig:
        return AvfConfig(dt=self.dt, fp_tol=self.fp_tol, max_iter=self.max_iter)

    # YAML layout

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("n", "m"):
            if getattr(self, k) is _UNSET:
                d[k] = "auto"
        return {
            "scenario": d["scenario"],
            "initial": d["initial"],
            "grid": {"bounds": list(d["bounds"]) if d["bounds"] else None, "Nx": d["Nx"], "Ny": d["Ny"], "dx": d["dx"]},
            "time": {"dt": d["dt"], "T": d["T"], "steps": d["steps"]},
            "physics": {
                "phi_lat": d["phi_lat"],
                "delta": d["delta"],
                "g_nd": d["g_nd"],
                "scales": {"H": d["H_scale"], "Omega": d["Omega_rot"], "g": d["g_dim"]},
            },
            "reduction": {
                "n": d["n"],
                "m": d["m"],
                "kappa_pod": d["kappa_pod"],
                "kappa_deim": d["kappa_deim"],
                "block_method": d["block_method"],
            },
            "solver": {"fp_tol": d["fp_tol"], "max_iter": d["max_iter"]},
            "output": {
                "dir": d["out"],
                "stages": list(d["stages"]),
                "stream_snapshots": d["stream_snapshots"],
                "timing_repeats": d["timing_repeats"],
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d or {})
        kw: dict[str, Any] = {}
        simple = {"scenario": "scenario", "initial": "initial"}
        sections = {
            "grid": {"bounds": "bounds", "Nx": "Nx", "Ny": "Ny", "dx": "dx"},
            "time": {"dt": "dt", "T": "T", "steps": "steps"},
            "physics": {"phi_lat": "phi_lat", "delta": "delta", "g_nd": "g_nd"},
            "reduction": {
                "n": "n",
                "m": "m",
                "kappa_pod": "kappa_pod",
                "kappa_deim": "kappa_deim",
                "block_method": "block_method",
            },
            "solver": {"fp_tol": "fp_tol", "max_iter": "max_iter"},
            "output": {
                "dir": "out",
                "stages": "stages",
                "stream_snapshots": "stream_snapshots",
                "timing_repeats": "timing_repeats",
            },
        }
        for key, attr in simple.items():
            if key in d:
                kw[attr] = d.pop(key)
        for sec, keys in sections.items():
            body = dict(d.pop(sec, None) or {})
            if sec == "physics":
                scales = dict(body.pop("scales", None) or {})
                for key, attr in (("H", "H_scale"), ("Omega", "Omega_rot"), ("g", "g_dim")):
                    if key in scales:
                        kw[attr] = scales.pop(key)
                if scales:
                    raise ConfigError(f"unknown keys in physics.scales: {sorted(scales)}")
            for key, attr in keys.items():
                if key in body:
                    kw[attr] = body.pop(key)
            if body:
                raise ConfigError(f"unknown keys in {sec}: {sorted(body)}")
        if d:
            raise ConfigError(f"unknown top-level keys: {sorted(d)}")
        for k in ("n", "m"):
            if kw.get(k) == "auto":
                kw[k] = _UNSET
        if kw.get("bounds") is not None:
            kw["bounds"] = tuple(kw["bounds"])
        if "stages" in kw:
            kw["stages"] = tuple(kw["stages"])
        return cls(**kw)


def _count(x: float, axis: str) -> int:
    k = round(x)
    if abs(x - k) > 1e-9:
        raise ConfigError(f"domain length in {axis} is not a multiple of dx")
    return int(k)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return ExperimentConfig.from_dict(data or {})


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def save_config(cfg: ExperimentConfig, path) -> None:
    from .io import atomic_path

    with atomic_path(Path(path)) as tmp:
        tmp.write_text(dump_config(cfg), encoding="utf-8")
