"""Special-relativistic two-body collision kinematics.

Units are c = m = 1 throughout.  Every function accepts either a single
3-vector or a stack of them with shape ``(..., 3)`` and broadcasts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Below this |p+q| the boost correction in the post-collisional map is dropped:
# its prefactor (gamma-1)/|p+q|^2 stays finite, so the term is O(|p+q|).
BOOST_EPS = 1e-10
RTOL = 1e-12


def _as_vec(x, name="p"):
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have trailing dimension 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def energy(p):
    """Return p0 = sqrt(1 + |p|^2)."""
    p = _as_vec(p)
    return np.sqrt(1.0 + np.einsum("...i,...i->...", p, p))


@dataclass(frozen=True)
class Momentum:
    p: np.ndarray
    p0: float = field(init=False)

    def __post_init__(self):
        p = _as_vec(self.p)
        if p.shape != (3,):
            raise ValueError("Momentum holds a single 3-vector")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p0", float(energy(p)))


def invariants(p, q):
    """Vectorised (p0, q0, g, s, gamma, v_moller) for momenta of shape (..., 3)."""
    p = _as_vec(p)
    q = _as_vec(q, "q")
    p0 = energy(p)
    q0 = energy(q)
    pq = np.einsum("...i,...i->...", p, q)
    d = p - q
    # g^2 = |p-q|^2 - (p0-q0)^2, with p0-q0 written without cancellation
    de = np.einsum("...i,...i->...", d, p + q) / (p0 + q0)
    g = np.sqrt(np.maximum(0.0, np.einsum("...i,...i->...", d, d) - de * de))
    s = 2.0 * (p0 * q0 - pq + 1.0)
    rs = np.sqrt(s)
    gamma = (p0 + q0) / rs
    v = g * rs / (p0 * q0)
    return p0, q0, g, s, gamma, v


@dataclass(frozen=True)
class CollisionPair:
    p: Momentum
    q: Momentum
    g: float
    s: float
    gamma: float
    v_moller: float

    @property
    def total(self):
        return self.p.p + self.q.p

    def swapped(self):
        return CollisionPair(self.q, self.p, self.g, self.s, self.gamma, self.v_moller)


def make_pair(p, q) -> CollisionPair:
    pm = p if isinstance(p, Momentum) else Momentum(p)
    qm = q if isinstance(q, Momentum) else Momentum(q)
    _, _, g, s, gamma, v = invariants(pm.p, qm.p)
    return CollisionPair(pm, qm, float(g), float(s), float(gamma), float(v))


def _pair_arrays(pair_or_p, q=None):
    if isinstance(pair_or_p, CollisionPair):
        return pair_or_p.p.p, pair_or_p.q.p
    return _as_vec(pair_or_p), _as_vec(q, "q")


def post_collision(p, q, omega=None):
    """Post-collisional momenta (p', q') for pre-collisional (p, q) and direction omega.

    ``p`` may instead be a :class:`CollisionPair`, in which case ``q`` is omitted
    and omega is the second argument.  Arrays broadcast over leading axes.
    """
    if isinstance(p, CollisionPair):
        omega = q
        p, q = p.p.p, p.q.p
    p = _as_vec(p)
    q = _as_vec(q, "q")
    omega = _as_vec(omega, "omega")
    norm = np.sqrt(np.einsum("...i,...i->...", omega, omega))
    if np.any(np.abs(norm - 1.0) > RTOL):
        raise ValueError("omega must be a unit vector")

    p0, q0, g, s, _, _ = invariants(p, q)
    P = p + q
    P2 = np.einsum("...i,...i->...", P, P)
    Pw = np.einsum("...i,...i->...", P, omega)
    rs = np.sqrt(s)
    # (gamma - 1)/|P|^2 = 1/(sqrt(s)(p0 + q0 + sqrt(s))), free of cancellation
    coef = np.where(P2 >= BOOST_EPS**2, Pw / (rs * (p0 + q0 + rs)), 0.0)
    d = 0.5 * g[..., None] * (omega + coef[..., None] * P)
    p_new = 0.5 * P + d
    q_new = P - p_new
    return p_new, q_new


def scattering_angle(p, q, omega=None):
    """Minkowski scattering angle theta in [0, pi]; theta = 0 when g = 0."""
    if isinstance(p, CollisionPair):
        omega = q
        p, q = p.p.p, p.q.p
    pp, qq = post_collision(p, q, omega)
    p = _as_vec(p)
    q = _as_vec(q, "q")
    g2 = invariants(p, q)[2] ** 2
    num = (np.einsum("...i,...i->...", p - q, pp - qq)
           - (energy(p) - energy(q)) * (energy(pp) - energy(qq)))
    degenerate = g2 <= 0.0
    c = np.where(degenerate, 1.0, num / np.where(degenerate, 1.0, g2))
    theta = np.arccos(np.clip(c, -1.0, 1.0))
    return float(theta) if theta.ndim == 0 else theta


def pointwise_bounds_check(p, q=None):
    """True where every pointwise bound on g, s and |p-q| used by the smoothing proofs holds.

    Checks |p-q|/sqrt(p0 q0) <= g <= |p-q|, g <= 2 sqrt(p0 q0), s <= 4 p0 q0 and
    1 + |p-q|^2 <= 5 (p0 q0)^2.
    """
    p, q = _pair_arrays(p, q)
    p0, q0, g, s, _, _ = invariants(p, q)
    d = np.sqrt(np.einsum("...i,...i->...", p - q, p - q))
    e = p0 * q0
    ok = d / np.sqrt(e) <= g * (1.0 + RTOL) + 1e-300
    ok &= g <= d * (1.0 + RTOL) + 1e-300
    ok &= g <= 2.0 * np.sqrt(e)
    ok &= s <= 4.0 * e * (1.0 + RTOL)
    ok &= 1.0 + d * d <= 5.0 * e * e
    return bool(ok) if np.ndim(ok) == 0 else ok


def random_momenta(rng, n, pmax):
    """n momenta uniform in the ball |p| <= pmax."""
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    r = pmax * rng.random(n) ** (1.0 / 3.0)
    return v * r[:, None]


def random_directions(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]
