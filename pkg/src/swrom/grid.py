"""Uniform periodic grid and central-difference operators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[a, b) x [c, d)``.

    The right-most and top-most nodes are identified with the left/bottom ones,
    so there are ``Nx * Ny`` unknowns per field. Flat vectors are ordered with
    the x index outermost: entry ``i * Ny + j`` holds node ``(x_i, y_j)``, which
    is the row-major layout of an ``(Nx, Ny)`` array.
    """

    a: float
    b: float
    c: float
    d: float
    Nx: int
    Ny: int

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.Nx

    @property
    def dy(self) -> float:
        return (self.d - self.c) / self.Ny

    @property
    def N(self) -> int:
        return self.Nx * self.Ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return (self.b - self.a) * (self.d - self.c)

    @property
    def x(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.Nx)

    @property
    def y(self) -> np.ndarray:
        return self.c + self.dy * np.arange(self.Ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two ``(Nx, Ny)`` arrays."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def flat_coords(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = self.mesh()
        return X.ravel(), Y.ravel()


def make_grid(a: float, b: float, c: float, d: float, Nx: int, Ny: int) -> Grid:
    if not (b > a and d > c):
        raise ValueError(f"domain extents must be positive, got [{a}, {b}] x [{c}, {d}]")
    if int(Nx) != Nx or int(Ny) != Ny:
        raise ValueError("node counts must be integers")
    if Nx < 3 or Ny < 3:
        raise ValueError(f"central differences need at least 3 nodes per axis, got Nx={Nx}, Ny={Ny}")
    return Grid(float(a), float(b), float(c), float(d), int(Nx), int(Ny))


def periodic_difference_matrix(s: int) -> sp.csr_matrix:
    """Skew-symmetric circulant with +1 above and -1 below the diagonal.

    The wrap entries are ``D[0, s-1] = -1`` and ``D[s-1, 0] = +1``.
    """
    if s < 3:
        raise ValueError("stencil needs s >= 3")
    i = np.arange(s)
    rows = np.concatenate([i, i])
    cols = np.concatenate([(i + 1) % s, (i - 1) % s])
    vals = np.concatenate([np.ones(s), -np.ones(s)])
    D = sp.csr_matrix((vals, (rows, cols)), shape=(s, s))
    D.sort_indices()
    return D


@dataclass(frozen=True)
class DiffOperators:
    """Sparse ``N x N`` central-difference matrices for d/dx and d/dy."""

    Dx: sp.csr_matrix
    Dy: sp.csr_matrix
    grid: Grid = field(repr=False)


def build_diff_ops(grid: Grid) -> DiffOperators:
    Dx = sp.kron(periodic_difference_matrix(grid.Nx), sp.identity(grid.Ny), format="csr")
    Dy = sp.kron(sp.identity(grid.Nx), periodic_difference_matrix(grid.Ny), format="csr")
    Dx = (Dx / (2.0 * grid.dx)).tocsr()
    Dy = (Dy / (2.0 * grid.dy)).tocsr()
    Dx.sort_indices()
    Dy.sort_indices()
    return DiffOperators(Dx=Dx, Dy=Dy, grid=grid)
