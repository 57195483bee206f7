"""Direct quadrature of the gain, loss and full collision terms at probe points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _kernels as K
from .distributions import NONE, Distribution
from .quadrature import MomentumGrid, SphereQuadrature
from .scattering import ScatteringKernel
from .symmetry import grid_doubled_indices, orbit_reduce

LOG_FLOOR = 1e-300
MOMENT_NAMES = ("mass", "momentum_x", "momentum_y", "momentum_z", "energy")


def equal_volume_radius(h):
    """Radius of the ball with the volume of one grid cell."""
    return h * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)


def singular_cell_average(p, b, h):
    """Mean of g^b over the equal-volume ball around q = p.

    Near the diagonal g^2 = |d|^2 - (p.d)^2/p0^2 for q = p + d, so the ball
    mean factors into the radial mean 3 rho^b/(b + 3) times the angular mean
    of (1 - e mu^2)^(b/2), e = |p|^2/p0^2.  Finite for b > -3.
    """
    p = np.asarray(p, dtype=float)
    if b <= -3:
        raise ValueError("cell average of g^b diverges for b <= -3")
    p2 = np.einsum("...i,...i->...", p, p)
    e = p2 / (1.0 + p2)
    rho = equal_volume_radius(h)
    return 3.0 * rho**b / (b + 3.0) * special.hyp2f1(-0.5 * b, 0.5, 1.5, e)


def _singular_cells(probes, grid, kernel):
    n = len(probes)
    idx = np.full(n, -1, dtype=np.int64)
    avg = np.zeros(n)
    if kernel.a >= 0:
        return idx, avg
    cell = np.floor((probes + grid.R) / grid.h).astype(np.int64)
    inside = np.all((cell >= 0) & (cell < grid.N), axis=1)
    N = grid.N
    idx[inside] = cell[inside, 0] * N * N + cell[inside, 1] * N + cell[inside, 2]
    avg[inside] = singular_cell_average(probes[inside], 1.0 + kernel.a, grid.h)
    return idx, avg


def _probes(p):
    arr = np.asarray(getattr(p, "p", p), dtype=float)
    return np.ascontiguousarray(arr.reshape(-1, 3)), arr.ndim == 1


def gain_at(f: Distribution, h: Distribution, kernel: ScatteringKernel, p,
            grid: MomentumGrid, sphere: SphereQuadrature):
    """Q+(f, h) at one probe (3-vector) or a stack of probes (n, 3)."""
    probes, single = _probes(p)
    if f.is_zero or h.is_zero:
        out = np.zeros(len(probes))
    else:
        idx, avg = _singular_cells(probes, grid, kernel)
        raw = K.gain_probes(probes, grid.points, f.table, f.padded_grid, h.table,
                            h.padded_grid, float(kernel.a), kernel.sigma0_code,
                            sphere.nodes, sphere.weights, idx, avg)
        out = kernel.amplitude * grid.cell_volume * raw
    return float(out[0]) if single else out


def loss_at(f: Distribution, h: Distribution, kernel: ScatteringKernel, p,
            grid: MomentumGrid, sphere: SphereQuadrature):
    """Q-(f, h) = f(p) * int v sigma h(q) dq domega; the omega integral is 4 pi for isotropic kernels."""
    probes, single = _probes(p)
    fp = f(probes)
    if h.is_zero or not np.any(fp):
        out = np.zeros(len(probes))
    else:
        idx, avg = _singular_cells(probes, grid, kernel)
        raw = K.loss_probes(probes, grid.points, h(grid.points), float(kernel.a),
                            kernel.sigma0_code, sphere.nodes, sphere.weights, idx, avg)
        out = kernel.amplitude * grid.cell_volume * fp * raw
    return float(out[0]) if single else out


def collision_at(f: Distribution, kernel: ScatteringKernel, p, grid, sphere):
    return np.subtract(gain_at(f, f, kernel, p, grid, sphere),
                       loss_at(f, f, kernel, p, grid, sphere))


@dataclass
class CollisionField:
    """Q+ and Q- of (f, f) over a whole grid, stored per symmetry orbit."""

    grid: MomentumGrid
    reps: np.ndarray
    members: list
    gain: np.ndarray
    loss: np.ndarray

    def orbit_sum(self, values):
        values = np.asarray(values)
        return np.array([values[m].sum(axis=0) for m in self.members])

    def integrate(self, field_rep, weight):
        """h^3 sum over all nodes of field * weight, field given per orbit."""
        w = self.orbit_sum(weight)
        return self.grid.cell_volume * np.tensordot(field_rep, w, axes=(0, 0))

    def expand(self, field_rep):
        out = np.empty(self.grid.size)
        for r, m in enumerate(self.members):
            out[m] = field_rep[r]
        return out


def collision_field(f: Distribution, kernel: ScatteringKernel, grid: MomentumGrid,
                    sphere: SphereQuadrature, use_symmetry=True) -> CollisionField:
    """Evaluate Q+(f,f), Q-(f,f) on every node of ``grid`` (which is also the q grid).

    With ``use_symmetry`` only one node per orbit of the invariance group of f
    is evaluated.  The q sums are exactly invariant; the sphere rule is not,
    so the shortcut is exact up to the sphere quadrature error.
    """
    label = f.symmetry if use_symmetry else NONE
    reps, members = orbit_reduce(grid_doubled_indices(grid), label)
    probes = grid.points[reps]
    gain = np.atleast_1d(gain_at(f, f, kernel, probes, grid, sphere))
    loss = np.atleast_1d(loss_at(f, f, kernel, probes, grid, sphere))
    return CollisionField(grid, reps, members, gain, loss)


@dataclass
class MomentReport:
    names: tuple
    residual: np.ndarray
    normalizer: np.ndarray

    @property
    def relative(self):
        n = self.normalizer
        return np.divide(self.residual, n, out=np.zeros_like(self.residual), where=n > 0)


def _moment_weights(points):
    p0 = np.sqrt(1.0 + np.einsum("ij,ij->i", points, points))
    return np.column_stack([np.ones(len(points)), points, p0])


def conservation_moments(f: Distribution, kernel: ScatteringKernel, grid: MomentumGrid,
                         sphere: SphereQuadrature, use_symmetry=True, field=None) -> MomentReport:
    """int Q(f,f) (1, p, p0) dp with each residual normalised by int Q+(f,f) |weight| dp."""
    field = field or collision_field(f, kernel, grid, sphere, use_symmetry)
    psi = _moment_weights(grid.points)
    res = field.integrate(field.gain - field.loss, psi)
    norm = field.integrate(field.gain, np.abs(psi))
    return MomentReport(MOMENT_NAMES, np.asarray(res), np.asarray(norm))


@dataclass
class EntropyReport:
    value: float
    normalizer: float
    floored_nodes: int

    @property
    def relative(self):
        return self.value / self.normalizer if self.normalizer > 0 else 0.0


def entropy_production(f: Distribution, kernel: ScatteringKernel, grid: MomentumGrid,
                       sphere: SphereQuadrature, use_symmetry=True, field=None) -> EntropyReport:
    """int Q(f,f) ln f dp; normaliser int Q+(f,f) |ln f| dp.  ln f is floored at 1e-300."""
    fv = f(grid.points)
    floored = int(np.count_nonzero(fv < LOG_FLOOR))
    logf = np.log(np.maximum(fv, LOG_FLOOR))
    field = field or collision_field(f, kernel, grid, sphere, use_symmetry)
    val = field.integrate(field.gain - field.loss, logf)
    norm = field.integrate(field.gain, np.abs(logf))
    return EntropyReport(float(val), float(norm), floored)
