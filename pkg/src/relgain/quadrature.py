"""Momentum-space cubes and product rules on the unit sphere."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class MomentumGrid:
    """Cell-centred uniform grid on the cube [-R, R]^3.

    Node i along each axis sits at -R + (i + 1/2) h with h = 2R/N.
    """

    R: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise ValueError("half width R must be positive")
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError("points per axis N must be an even integer >= 8")
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self):
        return 2.0 * self.R / self.N

    @property
    def cell_volume(self):
        return self.h**3

    @property
    def size(self):
        return self.N**3

    @cached_property
    def axis(self):
        return -self.R + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def points(self):
        """Nodes as an (N^3, 3) array in lexicographic (i, j, k) order."""
        x = self.axis
        mesh = np.meshgrid(x, x, x, indexing="ij")
        return np.ascontiguousarray(np.stack(mesh, axis=-1).reshape(-1, 3))

    @cached_property
    def index_points(self):
        """Integer node indices, shape (N^3, 3), same order as ``points``."""
        i = np.arange(self.N)
        mesh = np.meshgrid(i, i, i, indexing="ij")
        return np.ascontiguousarray(np.stack(mesh, axis=-1).reshape(-1, 3))

    def refined(self, factor=2):
        return MomentumGrid(self.R, self.N * factor)


@dataclass(frozen=True)
class GridFunction:
    grid: MomentumGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = self.grid.N
        if v.size != n**3:
            raise ValueError(f"expected {n**3} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v = v.reshape(n, n, n).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def flat(self):
        return self.values.reshape(-1)


@dataclass(frozen=True)
class SphereQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def size(self):
        return len(self.weights)


def build_sphere_quadrature(n_polar: int, n_azimuth: int) -> SphereQuadrature:
    """Gauss-Legendre in cos(psi) times the uniform rule in azimuth.

    Exact for spherical polynomials of degree < min(2 n_polar, n_azimuth).
    """
    if int(n_polar) != n_polar or n_polar < 2:
        raise ValueError("n_polar must be an integer >= 2")
    if int(n_azimuth) != n_azimuth or n_azimuth < 4:
        raise ValueError("n_azimuth must be an integer >= 4")
    mu, wmu = np.polynomial.legendre.leggauss(int(n_polar))
    phi = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    sin_psi = np.sqrt(1.0 - mu**2)
    nodes = np.stack(
        [
            np.outer(sin_psi, np.cos(phi)),
            np.outer(sin_psi, np.sin(phi)),
            np.repeat(mu[:, None], n_azimuth, axis=1),
        ],
        axis=-1,
    ).reshape(-1, 3)
    # renormalise against rounding in sqrt(1 - mu^2)
    nodes /= np.linalg.norm(nodes, axis=1)[:, None]
    weights = np.repeat(wmu * (2.0 * np.pi / n_azimuth), n_azimuth)
    # leggauss weights sum to 2 up to a few ulps; pin the total to 4 pi
    weights *= 4.0 * np.pi / weights.sum()
    return SphereQuadrature(
        np.ascontiguousarray(nodes), weights, min(2 * int(n_polar), int(n_azimuth)) - 1
    )


def integrate_sphere(rule: SphereQuadrature, integrand):
    """Weighted sum of ``integrand(nodes)``; the callable must be vectorised over nodes."""
    vals = np.asarray(integrand(rule.nodes))
    return np.tensordot(rule.weights, vals, axes=(0, 0))


def integrate_grid(f) -> float:
    """Midpoint rule h^3 * sum(values)."""
    return float(f.grid.cell_volume * np.sum(f.values, dtype=float))


def sample_on_grid(dist, grid: MomentumGrid) -> GridFunction:
    return GridFunction(grid, dist(grid.points))
