"""Cut-off scattering kernels sigma(g, theta) = C * g**a * sigma0(theta)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import CollisionPair, _pair_arrays, invariants

# integer codes shared with the compiled kernels
SIGMA0_CODES = {"const": 0, "halfcut": 1, "cos2": 2}

# slack absorbing sqrt(s) <= 2 sqrt(p0 q0) in the bound checks
BOUND_SLACK = 4.0

NAMED = {
    "hard_ball": 1.0,
    "neutrino": 2.0,
    "israel": -1.0,
}


def sigma0_const(theta):
    return np.ones_like(np.asarray(theta, dtype=float))


def sigma0_halfcut(theta):
    return (np.asarray(theta, dtype=float) <= 0.5 * np.pi).astype(float)


def sigma0_cos2(theta):
    return np.cos(theta) ** 2


_SIGMA0 = {"const": sigma0_const, "halfcut": sigma0_halfcut, "cos2": sigma0_cos2}


@dataclass(frozen=True)
class ScatteringKernel:
    """Power-law kernel with a bounded angular factor.

    ``sigma0`` names one of the built-in angular factors: ``const``,
    ``halfcut`` (indicator of theta <= pi/2) or ``cos2``.
    """

    a: float
    sigma0: str = "const"
    amplitude: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= -3.0:
            raise ValueError(f"kernel exponent must satisfy a > -3, got {self.a}")
        if self.sigma0 not in _SIGMA0:
            raise ValueError(f"unknown sigma0 {self.sigma0!r}; choose from {sorted(_SIGMA0)}")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @classmethod
    def named(cls, name, sigma0="const", amplitude=1.0):
        if name not in NAMED:
            raise ValueError(f"unknown kernel name {name!r}")
        return cls(NAMED[name], sigma0, amplitude, name)

    @property
    def isotropic(self):
        return self.sigma0 == "const"

    @property
    def sigma0_sup(self):
        return 1.0

    @property
    def sigma0_code(self):
        return SIGMA0_CODES[self.sigma0]

    @property
    def is_soft(self):
        return self.a < 0

    def angular(self, theta):
        return _SIGMA0[self.sigma0](theta)


def evaluate_sigma(kernel: ScatteringKernel, g, theta):
    g = np.asarray(g, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(g < 0):
        raise ValueError("g must be nonnegative")
    with np.errstate(divide="ignore"):
        val = kernel.amplitude * np.power(g, kernel.a) * kernel.angular(theta)
    return float(val) if val.ndim == 0 else val


def rate_weight(pair, kernel: ScatteringKernel, theta=0.0):
    """v_moller * sigma(g, theta) for a pair (CollisionPair or stacked p, q arrays)."""
    if isinstance(pair, CollisionPair):
        return pair.v_moller * evaluate_sigma(kernel, pair.g, theta)
    p, q = pair
    _, _, g, _, _, v = invariants(p, q)
    return v * evaluate_sigma(kernel, g, theta)


def _weight_over_g(p, q, kernel):
    p0, q0, g, s, _, _ = invariants(p, q)
    # v * sigma / g written without dividing by g
    lhs = kernel.amplitude * kernel.sigma0_sup * np.power(g, kernel.a) * np.sqrt(s) / (p0 * q0)
    return p0, q0, g, lhs


def hard_bound_check(pair, kernel: ScatteringKernel, q=None):
    """v sigma / g <= 2^a C sup(sigma0) K (p0 q0)^((a-1)/2), a >= 0."""
    if kernel.a < 0:
        raise ValueError("hard_bound_check needs a >= 0")
    p, q = _pair_arrays(pair, q)
    p0, q0, _, lhs = _weight_over_g(p, q, kernel)
    c = 2.0**kernel.a * kernel.amplitude * kernel.sigma0_sup * BOUND_SLACK
    ok = lhs <= c * (p0 * q0) ** ((kernel.a - 1.0) / 2.0)
    return bool(ok) if np.ndim(ok) == 0 else ok


def soft_bound_check(pair, kernel: ScatteringKernel, q=None):
    """v sigma / g <= C sup(sigma0) K (|p-q|/sqrt(p0 q0))^a (p0 q0)^(-1/2), -3 < a < 0."""
    if not kernel.a < 0:
        raise ValueError("soft_bound_check needs -3 < a < 0")
    p, q = _pair_arrays(pair, q)
    d = np.sqrt(np.einsum("...i,...i->...", p - q, p - q))
    if np.any(d == 0):
        raise ValueError("soft bound is singular at p = q")
    p0, q0, _, lhs = _weight_over_g(p, q, kernel)
    e = p0 * q0
    c = kernel.amplitude * kernel.sigma0_sup * BOUND_SLACK
    ok = lhs <= c * (d / np.sqrt(e)) ** kernel.a / np.sqrt(e)
    return bool(ok) if np.ndim(ok) == 0 else ok
