"""Nonnegative test functions f(p) evaluable anywhere in momentum space."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

from . import _kernels as K
from .quadrature import GridFunction, MomentumGrid

# symmetry labels: invariance group of the function under signed axis permutations
RADIAL = "radial"
NONE = "none"


def _axial(i):
    return f"axial{i}"


def meet_symmetry(a, b):
    if a == RADIAL:
        return b
    if b == RADIAL:
        return a
    return a if a == b else NONE


def _center_symmetry(center):
    c = np.asarray(center, dtype=float)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return RADIAL
    if nz.size == 1:
        return _axial(int(nz[0]))
    return NONE


def _empty_grid():
    return np.zeros((1, 1, 1))


class Distribution:
    """Base class; subclasses provide ``components()`` rows for the compiled evaluator."""

    symmetry = NONE

    def components(self):
        raise NotImplementedError

    def grid_values(self):
        return _empty_grid()

    @cached_property
    def table(self):
        rows = self.components()
        if not rows:
            return np.zeros((0, K.TABLE_WIDTH))
        return np.ascontiguousarray(np.array(rows, dtype=float).reshape(-1, K.TABLE_WIDTH))

    @cached_property
    def padded_grid(self):
        return np.ascontiguousarray(self.grid_values(), dtype=float)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        flat = np.ascontiguousarray(p.reshape(-1, 3))
        out = K.eval_many(self.table, self.padded_grid, flat)
        return out.reshape(p.shape[:-1]) if p.ndim > 1 else float(out[0])

    @property
    def is_zero(self):
        return self.table.shape[0] == 0 or not np.any(self.table[:, 1])

    def __mul__(self, c):
        return Mixture(((float(c), self),))

    __rmul__ = __mul__

    def __add__(self, other):
        return Mixture(((1.0, self), (1.0, other)))

    def total_mass(self):
        """Integral over all of R^3."""
        raise NotImplementedError

    def radial_profile(self, r):
        """f along |p| = r for radially symmetric distributions."""
        r = np.asarray(r, dtype=float)
        pts = np.zeros(r.shape + (3,))
        pts[..., 0] = r
        return self(pts)

    def tail_mass(self, R):
        """Mass outside the cube [-R, R]^3 (an upper bound where noted)."""
        raise NotImplementedError


def juttner_normalizer(T):
    """Z(T) = int exp(-(p0 - 1)/T) dp by adaptive radial quadrature."""
    val, _ = integrate.quad(
        lambda r: r * r * np.exp(-(np.sqrt(1.0 + r * r) - 1.0) / T), 0.0, np.inf,
        epsabs=0.0, epsrel=1e-13, limit=400,
    )
    return 4.0 * np.pi * val


@dataclass(frozen=True)
class Juttner(Distribution):
    """n exp(-p0/T)/Z, normalised to number density n."""

    n: float = 1.0
    T: float = 1.0
    symmetry = RADIAL

    def __post_init__(self):
        if not (self.n > 0 and self.T > 0):
            raise ValueError("Juttner needs n > 0 and T > 0")

    @cached_property
    def normalizer(self):
        return juttner_normalizer(self.T)

    def components(self):
        return [[K.KIND_JUTTNER, self.n / self.normalizer, 0, 0, 0, 1.0 / self.T, 0, 0]]

    def total_mass(self):
        return self.n

    def tail_mass(self, R):
        # mass outside the inscribed ball; bounds the cube tail from above
        val, _ = integrate.quad(
            lambda r: r * r * np.exp(-(np.sqrt(1.0 + r * r) - 1.0) / self.T), R, np.inf,
            epsabs=0.0, epsrel=1e-10,
        )
        return 4.0 * np.pi * val * self.n / self.normalizer


@dataclass(frozen=True)
class Gaussian(Distribution):
    center: tuple = (0.0, 0.0, 0.0)
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise ValueError("center must be a 3-vector")
        if not (self.width > 0 and self.amplitude >= 0):
            raise ValueError("Gaussian needs width > 0 and amplitude >= 0")

    @property
    def symmetry(self):
        return _center_symmetry(self.center)

    def components(self):
        return [[K.KIND_GAUSSIAN, self.amplitude, *self.center, 0.5 / self.width**2, 0, 0]]

    def total_mass(self):
        return self.amplitude * (2.0 * np.pi) ** 1.5 * self.width**3

    def tail_mass(self, R):
        c = np.asarray(self.center)
        s = self.width * np.sqrt(2.0)
        inside = np.prod(0.5 * (special.erf((R - c) / s) - special.erf((-R - c) / s)))
        return self.total_mass() * (1.0 - inside)


def _bump_shape(t2, steepness):
    t2 = np.asarray(t2, dtype=float)
    out = np.zeros_like(t2)
    m = t2 < 1.0
    out[m] = np.exp(-(t2[m] ** steepness) / (1.0 - t2[m]))
    return out


@dataclass(frozen=True)
class Bump(Distribution):
    """Compactly supported, flat-topped bump A exp(-t^(2l)/(1 - t^2)), t = |p - c|/radius."""

    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0
    amplitude: float = 1.0
    steepness: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not (self.radius > 0 and self.amplitude >= 0 and self.steepness >= 1):
            raise ValueError("Bump needs radius > 0, amplitude >= 0, steepness >= 1")

    @property
    def symmetry(self):
        return _center_symmetry(self.center)

    def components(self):
        return [[K.KIND_BUMP, self.amplitude, *self.center, 1.0 / self.radius**2,
                 self.steepness, 0]]

    def radial_integral(self, power=1.0, weight=None):
        """4 pi int_0^radius r^2 (A psi(r))^power w(r) dr about the bump centre."""
        w = weight or (lambda r: 1.0)
        val, _ = integrate.quad(
            lambda r: r * r * (self.amplitude * _bump_shape((r / self.radius) ** 2,
                                                            self.steepness)) ** power * w(r),
            0.0, self.radius, epsabs=0.0, epsrel=1e-12, limit=200,
        )
        return 4.0 * np.pi * val

    def total_mass(self):
        return self.radial_integral()

    def tail_mass(self, R):
        if np.max(np.abs(self.center)) + self.radius <= R:
            return 0.0
        fine = MomentumGrid(R, 64)
        inside = fine.cell_volume * np.sum(self(fine.points))
        return max(self.total_mass() - inside, 0.0)


@dataclass(frozen=True)
class PowerLaw(Distribution):
    """Mollified cusp A (|p - c|^2 + delta^2)^(-alpha/2) exp(-|p - c|^2/(2 w^2)).

    With alpha = 5/2 and delta -> 0 this is in L^1 but not in L^2.
    """

    center: tuple = (0.0, 0.0, 0.0)
    alpha: float = 2.5
    mollifier: float = 0.1
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not (0 <= self.alpha < 3 and self.mollifier > 0 and self.width > 0):
            raise ValueError("PowerLaw needs 0 <= alpha < 3, mollifier > 0, width > 0")

    @property
    def symmetry(self):
        return _center_symmetry(self.center)

    def components(self):
        return [[K.KIND_POWERLAW, self.amplitude, *self.center, self.alpha,
                 self.mollifier**2, 0.5 / self.width**2]]

    def total_mass(self):
        val, _ = integrate.quad(
            lambda r: r * r * (r * r + self.mollifier**2) ** (-0.5 * self.alpha)
            * np.exp(-0.5 * r * r / self.width**2), 0.0, np.inf, epsrel=1e-12,
        )
        return 4.0 * np.pi * self.amplitude * val

    def tail_mass(self, R):
        val, _ = integrate.quad(
            lambda r: r * r * (r * r + self.mollifier**2) ** (-0.5 * self.alpha)
            * np.exp(-0.5 * r * r / self.width**2), max(R - np.max(np.abs(self.center)), 0.0),
            np.inf, epsrel=1e-10,
        )
        return 4.0 * np.pi * self.amplitude * val


@dataclass(frozen=True, eq=False)
class GridDistribution(Distribution):
    """Trilinear interpolant of grid samples, zero outside the cube."""

    function: GridFunction

    def components(self):
        g = self.function.grid
        return [[K.KIND_GRID, 1.0, 0, 0, 0, g.R, g.N, 0]]

    def grid_values(self):
        return np.pad(self.function.values, 1)

    def total_mass(self):
        return float(self.function.grid.cell_volume * self.function.values.sum())

    def tail_mass(self, R):
        return 0.0 if R >= self.function.grid.R else float("nan")


@dataclass(frozen=True)
class Mixture(Distribution):
    """Nonnegative combination sum_i w_i f_i; at most one gridded member."""

    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        flat = []
        for w, d in self.parts:
            if w < 0:
                raise ValueError("mixture weights must be nonnegative")
            if isinstance(d, Mixture):
                flat.extend((w * w2, d2) for w2, d2 in d.parts)
            else:
                flat.append((float(w), d))
        if sum(isinstance(d, GridDistribution) for _, d in flat) > 1:
            raise ValueError("a mixture holds at most one gridded member")
        object.__setattr__(self, "parts", tuple(flat))

    @property
    def symmetry(self):
        sym = RADIAL
        for _, d in self.parts:
            sym = meet_symmetry(sym, d.symmetry)
        return sym

    def components(self):
        rows = []
        for w, d in self.parts:
            for row in d.components():
                row = list(row)
                row[1] *= w
                rows.append(row)
        return rows

    def grid_values(self):
        for _, d in self.parts:
            if isinstance(d, GridDistribution):
                return d.grid_values()
        return _empty_grid()

    def total_mass(self):
        return sum(w * d.total_mass() for w, d in self.parts)

    def tail_mass(self, R):
        return sum(w * d.tail_mass(R) for w, d in self.parts)


ZERO = Mixture(())


def same_shape(f, h):
    """True when h is f itself (pairwise symmetric sums can then be halved)."""
    return f is h or (type(f) is type(h) and f == h)
