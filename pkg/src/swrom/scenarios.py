"""Initial conditions for the two benchmark flows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .model import CanonicalState, ParticleVelocities, PhysParams, canonical_from_particle


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    bounds: tuple[float, float, float, float]
    T: float


SCENARIOS = {
    "geostrophic_adjustment": ScenarioSpec("geostrophic_adjustment", (-5.0, 5.0, -5.0, 5.0), 100.0),
    "shear_instability": ScenarioSpec("shear_instability", (0.0, 10.0, 0.0, 10.0), 50.0),
}

# shear layer parameters
SHEAR_DH = 0.2
SHEAR_DY = 0.5
SHEAR_L = 10.0


def geostrophic_adjustment(grid: Grid, params: PhysParams) -> CanonicalState:
    """Motionless layer with a Gaussian bulge of height 1/2 at the origin."""
    x, y = grid.flat_coords()
    h = 1.0 + 0.5 * np.exp(-((4.0 * x / 5.0) ** 2) - (4.0 * y / 5.0) ** 2)
    zero = np.zeros_like(h)
    return canonical_from_particle(ParticleVelocities(zero, zero.copy()), h, params)


def shear_instability(grid: Grid, params: PhysParams) -> CanonicalState:
    """Sinuous shear layer in geostrophic balance with the height field."""
    x, y = grid.flat_coords()
    dh, dyy, L, oz = SHEAR_DH, SHEAR_DY, SHEAR_L, params.oz
    k = 2.0 * math.pi / L
    phase = k * (y - dyy * np.sin(k * x))
    h = 1.0 + dh * np.sin(phase)
    u = -(2.0 * math.pi * dh) / (oz * L) * np.cos(phase)
    v = -(4.0 * math.pi**2 * dh * dyy) / (oz * L**2) * np.cos(phase) * np.cos(k * x)
    return canonical_from_particle(ParticleVelocities(u, v), h, params)


_BUILDERS = {
    "geostrophic_adjustment": geostrophic_adjustment,
    "shear_instability": shear_instability,
}

ALIASES = {"ex1": "geostrophic_adjustment", "ex2": "shear_instability"}


def resolve_name(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in _BUILDERS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(_BUILDERS)}")
    return name


def build_scenario(name: str, grid: Grid, params: PhysParams) -> CanonicalState:
    return _BUILDERS[resolve_name(name)](grid, params)
