"""Energy-preserving full- and reduced-order models of the non-traditional shallow water equations."""

from .grid import DiffOperators, Grid, build_diff_ops, make_grid
from .integrator import AvfConfig, IntegrationError, NonConvergence, Trajectory, avf_step, integrate
from .kernels import BACKEND
from .model import (
    CanonicalState,
    ConservedQuantities,
    DomainError,
    FullOrderModel,
    PhysParams,
    conserved_quantities,
)
from .pod import PodBasis, PodRom, ReducedOperators, assemble_snapshots, build_reduced_operators, compute_pod_basis
from .deim import DeimOperator, DeimRom, build_deim_operator, collect_nonlinearity_snapshots

__version__ = "0.1.0"

__all__ = [
    "AvfConfig",
    "BACKEND",
    "CanonicalState",
    "ConservedQuantities",
    "DeimOperator",
    "DeimRom",
    "DiffOperators",
    "DomainError",
    "FullOrderModel",
    "Grid",
    "IntegrationError",
    "NonConvergence",
    "PhysParams",
    "PodBasis",
    "PodRom",
    "ReducedOperators",
    "Trajectory",
    "assemble_snapshots",
    "avf_step",
    "build_deim_operator",
    "build_diff_ops",
    "build_reduced_operators",
    "collect_nonlinearity_snapshots",
    "compute_pod_basis",
    "conserved_quantities",
    "integrate",
    "make_grid",
]
