"""Weighted Lebesgue norms, the theorem exponent bookkeeping and the (x, y) weights.

The norm is ||f||_{L^m_nu} = (int |f|^m (p0)^nu dp)^(1/m).  A theorem case
fixes which pair of norms bounds ||grad Q+(f, h)||_L2:

* ``T11``: a >= 0, 1/m + 1/n = 3/2, weights nu_f = m(a-1)/2, nu_h = n(a-1)/2.
* ``T12_hard``: a >= 0, m = n = 2, both weights a + 2 + eps.
* ``T12_soft``: -3 < a < 0, 1/m + 1/n = 1 + a/3, weights (|a|/2 + 1 + eps) m and
  (|a|/2 + 1 + eps) n.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import Distribution
from .kinematics import energy
from .quadrature import GridFunction, MomentumGrid

THEOREMS = ("T11", "T12_hard", "T12_soft")
EXPONENT_RTOL = 1e-12


class InvalidCase(ValueError):
    pass


@dataclass(frozen=True)
class WeightedNormSpec:
    m: float
    nu: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m >= 1):
            raise ValueError(f"Lebesgue exponent must be >= 1, got {self.m}")
        if not np.isfinite(self.nu):
            raise ValueError("weight exponent must be finite")


def _values(dist, grid):
    if isinstance(dist, GridFunction):
        return dist.flat
    return dist(grid.points)


def weighted_norm(dist, spec: WeightedNormSpec, grid: MomentumGrid) -> float:
    """Midpoint-rule value of ||dist||_{L^m_nu} over the grid cube."""
    v = np.abs(_values(dist, grid))
    if not np.any(v):
        return 0.0
    w = energy(grid.points) ** spec.nu
    # factor out the peak so |f|^m cannot underflow for large m
    peak = v.max()
    total = grid.cell_volume * np.sum((v / peak) ** spec.m * w)
    return float(peak * total ** (1.0 / spec.m))


def _close(x, y):
    return abs(x - y) <= EXPONENT_RTOL * max(1.0, abs(y))


@dataclass(frozen=True)
class TheoremCase:
    theorem: str
    a: float
    m: float = 2.0
    n: float = 2.0
    epsilon: float = 0.5

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise InvalidCase("; ".join(errors))

    def violations(self):
        """All constraint failures as 'key: message' strings."""
        out = []
        t, a, m, n = self.theorem, self.a, self.m, self.n
        if t not in THEOREMS:
            return [f"case.theorem: unknown theorem {t!r}, expected one of {THEOREMS}"]
        if m < 1 or n < 1:
            out.append("case.m,case.n: Lebesgue exponents must be >= 1")
        if t == "T11":
            if a < 0:
                out.append("case.a: T11 needs a >= 0")
            if not _close(1 / m + 1 / n, 1.5):
                out.append(f"case.m,case.n: T11 needs 1/m + 1/n = 3/2, got {1 / m + 1 / n:.6g}")
        elif t == "T12_hard":
            if a < 0:
                out.append("case.a: T12_hard needs a >= 0")
            if m != 2 or n != 2:
                out.append("case.m,case.n: T12_hard needs m = n = 2")
        else:
            if not (-3 < a < 0):
                out.append("case.a: T12_soft needs -3 < a < 0")
            if not _close(1 / m + 1 / n, 1 + a / 3):
                out.append(f"case.m,case.n: T12_soft needs 1/m + 1/n = 1 + a/3 = {1 + a / 3:.6g}, "
                           f"got {1 / m + 1 / n:.6g}")
        if t != "T11" and not self.epsilon > 0:
            out.append("case.epsilon: must be > 0")
        return out

    @property
    def delta(self):
        """The soft-case Cauchy-Schwarz exponent, delta = 2 eps."""
        return 2.0 * self.epsilon

    @property
    def label(self):
        return f"{self.theorem}_a{self.a:g}"

    def norm_specs(self):
        """(spec for f, spec for h)."""
        a, m, n, eps = self.a, self.m, self.n, self.epsilon
        if self.theorem == "T11":
            return WeightedNormSpec(m, 0.5 * m * (a - 1)), WeightedNormSpec(n, 0.5 * n * (a - 1))
        if self.theorem == "T12_hard":
            return WeightedNormSpec(2, a + 2 + eps), WeightedNormSpec(2, a + 2 + eps)
        c = abs(a) / 2 + 1 + eps
        return WeightedNormSpec(m, c * m), WeightedNormSpec(n, c * n)


def _rhs(f, h, case, grid):
    sf, sh = case.norm_specs()
    return weighted_norm(f, sf, grid), weighted_norm(h, sh, grid)


def rhs_theorem11(f, h, case: TheoremCase, grid: MomentumGrid):
    if case.theorem != "T11":
        raise InvalidCase(f"expected a T11 case, got {case.theorem}")
    return _rhs(f, h, case, grid)


def rhs_theorem12_hard(f, h, case: TheoremCase, grid: MomentumGrid):
    if case.theorem != "T12_hard":
        raise InvalidCase(f"expected a T12_hard case, got {case.theorem}")
    return _rhs(f, h, case, grid)


def rhs_theorem12_soft(f, h, case: TheoremCase, grid: MomentumGrid):
    if case.theorem != "T12_soft":
        raise InvalidCase(f"expected a T12_soft case, got {case.theorem}")
    return _rhs(f, h, case, grid)


RHS = {"T11": rhs_theorem11, "T12_hard": rhs_theorem12_hard, "T12_soft": rhs_theorem12_soft}


def _split(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x + 0.5 * y, x - 0.5 * y


def hy_weight(f: Distribution, h: Distribution, a, x, y):
    """f(x + y/2) h(x - y/2) ((1 + |x + y/2|^2)(1 + |x - y/2|^2))^((a - 1)/4)."""
    if a < 0:
        raise ValueError("the hard-case weight needs a >= 0")
    p, q = _split(x, y)
    e = (1 + np.sum(p * p, axis=-1)) * (1 + np.sum(q * q, axis=-1))
    return f(p) * h(q) * e ** ((a - 1) / 4)


def sy_weight(f: Distribution, h: Distribution, a, x, y):
    """|y|^a f(x + y/2) h(x - y/2) ((1 + |x + y/2|^2)(1 + |x - y/2|^2))^(-(a + 1)/4)."""
    if not -3 < a < 0:
        raise ValueError("the soft-case weight needs -3 < a < 0")
    y = np.asarray(y, dtype=float)
    ny = np.linalg.norm(y, axis=-1)
    if np.any(ny == 0):
        raise ValueError("the soft-case weight is singular at y = 0")
    p, q = _split(x, y)
    e = (1 + np.sum(p * p, axis=-1)) * (1 + np.sum(q * q, axis=-1))
    return ny**a * f(p) * h(q) * e ** (-(a + 1) / 4)


def hy_identity(f: Distribution, h: Distribution, a, x_grid: MomentumGrid,
                y_grid: MomentumGrid, pq_grid: MomentumGrid, chunk=256):
    """Both sides of int int |H_y(x)|^2 dx dy = int int (p0 q0)^(a-1) f(p)^2 h(q)^2 dp dq.

    The left side is a midpoint sum over the (x, y) product grid, the right
    side a separable sum over (p, q).  Returns ``(xy_side, pq_side)``.
    """
    xs = x_grid.points
    total = 0.0
    for start in range(0, y_grid.size, chunk):
        ys = y_grid.points[start:start + chunk]
        vals = hy_weight(f, h, a, xs[None, :, :], ys[:, None, :])
        total += float(np.sum(vals * vals))
    xy = x_grid.cell_volume * y_grid.cell_volume * total
    w = energy(pq_grid.points) ** (a - 1)
    fp = f(pq_grid.points)
    hq = h(pq_grid.points)
    pq = pq_grid.cell_volume**2 * float(np.sum(fp * fp * w)) * float(np.sum(hq * hq * w))
    return xy, pq
