"""Fourier-side representation of the gain term and L2 norms of gradients.

Transform convention: u_hat(k) = int u(p) exp(-i k.p) dp, discretised on a
cell-centred grid as h^3 sum u(p_j) exp(-i k.p_j).  The dual lattice is
k = (pi/R) m; Parseval then reads

    h^3 sum |u|^2 = (1/(2R)^3) sum_m |u_hat(k_m)|^2,

and every mode sum in this module carries the measure from
:func:`mode_measure`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .collision import singular_cell_average
from .distributions import Distribution, meet_symmetry, same_shape
from .kinematics import CollisionPair, _pair_arrays, invariants
from .quadrature import GridFunction, MomentumGrid
from .scattering import ScatteringKernel
from .symmetry import orbit_reduce

SINC_SERIES_BELOW = 1e-4
NCHUNKS = 64


class UnsupportedConfiguration(ValueError):
    pass


def mode_measure(grid: MomentumGrid, stride=1):
    """Volume element (dk)^3/(2 pi)^3 of the dual lattice with the given stride."""
    dk = stride * np.pi / grid.R
    return (dk / (2.0 * np.pi)) ** 3


def phase_vector(p, q, k):
    """A = (g/2) (k + (gamma - 1) ((p+q).k) (p+q)/|p+q|^2), broadcasting over leading axes."""
    if isinstance(p, CollisionPair):
        k = q
        p, q = p.p.p, p.q.p
    p, q = _pair_arrays(p, q)
    k = np.asarray(k, dtype=float)
    p0, q0, g, s, _, _ = invariants(p, q)
    P = p + q
    rs = np.sqrt(s)
    # (gamma - 1)/|P|^2 without cancellation; the term vanishes as P -> 0
    c = 1.0 / (rs * (p0 + q0 + rs))
    Pk = np.einsum("...i,...i->...", P, k)
    return 0.5 * g[..., None] * (k + (c * Pk)[..., None] * P)


def _sinc(x):
    x = np.asarray(x, dtype=float)
    small = x < SINC_SERIES_BELOW
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(xs) / xs)


def phase_sphere_integral(p, q, k=None):
    """int_{S^2} exp(-i A.omega) d omega = 4 pi sin|A|/|A| (returned as complex)."""
    if isinstance(p, CollisionPair):
        p, q, k = p.p.p, p.q.p, q
    A = phase_vector(p, q, k)
    a = np.sqrt(np.einsum("...i,...i->...", A, A))
    val = (4.0 * np.pi * _sinc(a)).astype(complex)
    return complex(val) if val.ndim == 0 else val


def matrix_lower_bound_check(p, q, k=None, rtol=1e-12):
    """|k + (gamma-1)((p+q).k)(p+q)/|p+q|^2| >= |k| (1 - rtol)."""
    if isinstance(p, CollisionPair):
        p, q, k = p.p.p, p.q.p, q
    p, q = _pair_arrays(p, q)
    k = np.asarray(k, dtype=float)
    p0, q0, g, s, _, _ = invariants(p, q)
    P = p + q
    rs = np.sqrt(s)
    c = 1.0 / (rs * (p0 + q0 + rs))
    v = k + (c * np.einsum("...i,...i->...", P, k))[..., None] * P
    lhs = np.sqrt(np.einsum("...i,...i->...", v, v))
    ok = lhs >= np.sqrt(np.einsum("...i,...i->...", k, k)) * (1.0 - rtol)
    return bool(ok) if np.ndim(ok) == 0 else ok


def _require_isotropic(kernel):
    if not kernel.isotropic:
        raise UnsupportedConfiguration(
            "the Fourier representation pulls sigma out of the omega integral and needs an "
            "isotropic kernel; use collision.gain_at for anisotropic sigma0"
        )


def _diag(grid, exponents, shift):
    """Cell-averaged g^(a + shift) on the p = q diagonal; zero where a + shift > 0."""
    out = np.zeros((len(exponents), grid.size))
    for e, a in enumerate(exponents):
        if a < 0:
            out[e] = singular_cell_average(grid.points, a + shift, grid.h)
        elif a + shift == 0:
            out[e] = 1.0
    return out


def _weights(f, h, grid):
    vol = grid.cell_volume
    fw = np.ascontiguousarray(f(grid.points) * vol)
    hw = fw if same_shape(f, h) else np.ascontiguousarray(h(grid.points) * vol)
    return fw, hw


def fourier_gain(f: Distribution, h: Distribution, kernel: ScatteringKernel, k,
                 grid: MomentumGrid):
    """Q+(f,h)^(k) = int int v sigma f(p) h(q) exp(-i k.(p+q)/2) II(p,q,k) dp dq.

    ``k`` is one 3-vector or an (M, 3) stack; returns complex values.
    """
    _require_isotropic(kernel)
    kv = np.asarray(k, dtype=float)
    kvecs = np.ascontiguousarray(kv.reshape(-1, 3))
    if f.is_zero or h.is_zero:
        out = np.zeros(len(kvecs), dtype=complex)
    else:
        fw, hw = _weights(f, h, grid)
        exps = np.array([float(kernel.a)])
        re, im = K.fourier_pairs(grid.points, fw, hw, same_shape(f, h), exps,
                                 _diag(grid, exps, 1.0), kvecs, NCHUNKS)
        out = 4.0 * np.pi * kernel.amplitude * (re[0] + 1j * im[0])
    return complex(out[0]) if kv.ndim == 1 else out


def ineq1_sides(f: Distribution, h: Distribution, kernel: ScatteringKernel, k,
                grid: MomentumGrid):
    """Both sides of |k| |Q+^(k)| <= 8 pi |int int v sigma g^-1 e^{-i k.(p+q)/2} f h|.

    Returns ``(lhs, rhs_outside, rhs_inside)``; ``rhs_inside`` moves the modulus
    under the integral, the form that follows from the triangle inequality.
    """
    _require_isotropic(kernel)
    kvecs = np.ascontiguousarray(np.asarray(k, dtype=float).reshape(-1, 3))
    fw, hw = _weights(f, h, grid)
    exps = np.array([float(kernel.a)])
    diag = _diag(grid, exps, 0.0)
    q_hat = fourier_gain(f, h, kernel, kvecs, grid)
    lhs = np.linalg.norm(kvecs, axis=1) * np.abs(q_hat)
    re, im = K.weighted_pair_sum(grid.points, fw, hw, exps, diag, kvecs, NCHUNKS)
    outside = 8.0 * np.pi * kernel.amplitude * np.hypot(re[0], im[0])
    zero = np.zeros((1, 3))
    re0, _ = K.weighted_pair_sum(grid.points, np.abs(fw), np.abs(hw), exps, diag, zero, NCHUNKS)
    inside = 8.0 * np.pi * kernel.amplitude * re0[0, 0] * np.ones(len(kvecs))
    return lhs, outside, inside


@dataclass(frozen=True)
class DualModes:
    """Integer modes m with k = (pi/R) m, every ``stride``-th per axis, |k| <= kmax.

    The default cutoff pi/h is the largest ball inside the lattice cube.
    """

    grid: MomentumGrid
    stride: int
    kmax: float
    modes: np.ndarray

    @property
    def kvecs(self):
        return self.modes * (np.pi / self.grid.R)

    @property
    def measure(self):
        return mode_measure(self.grid, self.stride)


def dual_modes(grid: MomentumGrid, stride=1, kmax=None) -> DualModes:
    if stride < 1 or int(stride) != stride:
        raise ValueError("mode stride must be a positive integer")
    kmax = np.pi / grid.h if kmax is None else float(kmax)
    m = np.arange(-grid.N // 2, grid.N // 2)
    m = m[m % stride == 0]
    mesh = np.stack(np.meshgrid(m, m, m, indexing="ij"), axis=-1).reshape(-1, 3)
    knorm = np.linalg.norm(mesh, axis=1) * np.pi / grid.R
    keep = knorm <= kmax * (1.0 + 1e-12)
    return DualModes(grid, int(stride), kmax, np.ascontiguousarray(mesh[keep]))


@dataclass
class GradientNorms:
    """||grad Q+(f,h)||_L2 for several kernel exponents sharing one mode set."""

    exponents: tuple
    values: np.ndarray
    n_modes: int
    n_evaluated: int
    kmax: float
    stride: int


def gradient_gain_norms(f: Distribution, h: Distribution, exponents, grid: MomentumGrid,
                        stride=1, kmax=None, amplitude=1.0, use_symmetry=True) -> GradientNorms:
    """Evaluate ||k Q+^||_L2 for kernels C g^a (isotropic) for every a in ``exponents``.

    Only one mode per orbit of the common invariance group of (f, h) is
    evaluated (closed under k -> -k, which conjugates Q+^ for real data).
    """
    exps = np.asarray(exponents, dtype=float)
    if np.any(exps <= -3):
        raise ValueError("kernel exponents must exceed -3")
    dm = dual_modes(grid, stride, kmax)
    modes = dm.modes
    nonzero = np.any(modes != 0, axis=1)
    modes = modes[nonzero]
    if f.is_zero or h.is_zero or len(modes) == 0:
        return GradientNorms(tuple(exps), np.zeros(len(exps)), len(modes), 0, dm.kmax, dm.stride)
    label = meet_symmetry(f.symmetry, h.symmetry) if use_symmetry else "none"
    reps, members = orbit_reduce(modes, label, add_inversion=True)
    mult = np.array([len(m) for m in members], dtype=float)
    rep_modes = np.ascontiguousarray(modes[reps])
    fw, hw = _weights(f, h, grid)
    re, im = K.fourier_lattice(grid.index_points, grid.points, fw, hw, same_shape(f, h), exps,
                               _diag(grid, exps, 1.0), rep_modes, grid.N, np.pi / grid.R,
                               NCHUNKS)
    k2 = np.sum((rep_modes * (np.pi / grid.R)) ** 2, axis=1)
    scale = np.float64(4.0 * np.pi * amplitude)
    # overflow surfaces as inf and is caught by the finiteness check downstream
    with np.errstate(over="ignore"):
        power = scale**2 * (re**2 + im**2)
        vals = np.sqrt(dm.measure * np.sum(mult * k2 * power, axis=1))
    return GradientNorms(tuple(exps), vals, len(modes), len(reps), dm.kmax, dm.stride)


def grad_gain_l2(f: Distribution, h: Distribution, kernel: ScatteringKernel,
                 grid: MomentumGrid, stride=1, kmax=None) -> float:
    """||grad_p Q+(f,h)||_L2 through Plancherel on the dual lattice."""
    _require_isotropic(kernel)
    res = gradient_gain_norms(f, h, [kernel.a], grid, stride, kmax, kernel.amplitude)
    return float(res.values[0])


def dft(u: GridFunction, modes=None):
    """u_hat on the dual lattice; all N^3 modes (FFT) or the given integer modes."""
    g = u.grid
    if modes is None:
        raw = np.fft.fftshift(np.fft.fftn(u.values))
        m = np.arange(-g.N // 2, g.N // 2)
        # node offset -R + h/2 contributes a pure phase per axis
        ph = np.exp(-1j * (np.pi / g.R) * m * (-g.R + 0.5 * g.h))
        return g.cell_volume * raw * ph[:, None, None] * ph[None, :, None] * ph[None, None, :]
    k = np.asarray(modes, dtype=float) * (np.pi / g.R)
    return g.cell_volume * np.exp(-1j * k @ g.points.T) @ u.flat


def boundary_ratio(u: GridFunction):
    v = np.abs(u.values)
    peak = v.max()
    if peak == 0:
        return 0.0
    faces = [v[0], v[-1], v[:, 0], v[:, -1], v[:, :, 0], v[:, :, -1]]
    return float(max(fc.max() for fc in faces) / peak)


def gradient_l2_spectral(u: GridFunction) -> float:
    """||grad u||_L2 = ||k u_hat||_L2 over the full dual lattice."""
    g = u.grid
    uh = dft(u)
    m = np.arange(-g.N // 2, g.N // 2) * (np.pi / g.R)
    k2 = m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2
    return float(np.sqrt(mode_measure(g) * np.sum(k2 * np.abs(uh) ** 2)))


def gradient_l2_fd(u: GridFunction) -> float:
    """Second-order central differences with zero extension outside the cube."""
    v = np.pad(u.values, 1)
    h = u.grid.h
    tot = 0.0
    for ax in range(3):
        d = (np.roll(v, -1, axis=ax) - np.roll(v, 1, axis=ax)) / (2.0 * h)
        tot += np.sum(d[1:-1, 1:-1, 1:-1] ** 2)
    return float(np.sqrt(u.grid.cell_volume * tot))
