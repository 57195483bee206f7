"""Seeded random-sampling audits of the pointwise kinematic and spectral identities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import energy, invariants, pointwise_bounds_check, post_collision, random_directions, \
    random_momenta
from .quadrature import build_sphere_quadrature
from .spectral import matrix_lower_bound_check, phase_sphere_integral, phase_vector

BLOCK = 200_000


@dataclass
class CheckResult:
    name: str
    samples: int
    violations: int
    max_error: float
    tolerance: float

    @property
    def passed(self):
        return self.violations == 0

    def as_row(self):
        return {"check": self.name, "samples": self.samples, "violations": self.violations,
                "max_error": self.max_error, "tolerance": self.tolerance}


def _blocks(n):
    for start in range(0, n, BLOCK):
        yield min(BLOCK, n - start)


def check_invariants(rng, n=1_000_000, pmax=50.0):
    """s = g^2 + 4 (relative) and the pointwise bounds on random pairs."""
    worst, bad_s, bad_b = 0.0, 0, 0
    tol = 1e-9
    for m in _blocks(n):
        p, q = random_momenta(rng, m, pmax), random_momenta(rng, m, pmax)
        _, _, g, s, _, _ = invariants(p, q)
        err = np.abs(s - (g * g + 4.0)) / s
        worst = max(worst, float(err.max()))
        bad_s += int(np.count_nonzero(err > tol))
        bad_b += int(np.count_nonzero(~pointwise_bounds_check(p, q)))
    return [CheckResult("s_equals_g2_plus_4", n, bad_s, worst, tol),
            CheckResult("pointwise_bounds", n, bad_b, 0.0, 0.0)]


def check_conservation(rng, n=100_000, pmax=50.0):
    """Momentum (absolute), energy and g (relative) across the collision map."""
    mom, ene, gin = 0.0, 0.0, 0.0
    bad_m = bad_e = bad_g = 0
    for m in _blocks(n):
        p, q = random_momenta(rng, m, pmax), random_momenta(rng, m, pmax)
        w = random_directions(rng, m)
        p1, q1 = post_collision(p, q, w)
        dm = np.abs((p1 + q1) - (p + q)).max(axis=1)
        e0 = energy(p) + energy(q)
        de = np.abs(energy(p1) + energy(q1) - e0) / e0
        g0 = invariants(p, q)[2]
        g1 = invariants(p1, q1)[2]
        dg = np.abs(g1 - g0) / np.maximum(g0, 1e-300)
        mom, ene, gin = max(mom, dm.max()), max(ene, de.max()), max(gin, dg.max())
        bad_m += int(np.count_nonzero(dm > 1e-12))
        bad_e += int(np.count_nonzero(de > 1e-10))
        bad_g += int(np.count_nonzero(dg > 1e-10))
    return [CheckResult("momentum_conservation", n, bad_m, float(mom), 1e-12),
            CheckResult("energy_conservation", n, bad_e, float(ene), 1e-10),
            CheckResult("g_invariance", n, bad_g, float(gin), 1e-10)]


def check_matrix_bound(rng, n=1_000_000, pmax=50.0, kmax=10.0):
    """|k + (gamma - 1)(P.k)P/|P|^2| >= |k|, plus the k perpendicular to P equality case."""
    bad, bad_eq, worst_eq = 0, 0, 0.0
    for m in _blocks(n):
        p, q = random_momenta(rng, m, pmax), random_momenta(rng, m, pmax)
        k = random_momenta(rng, m, kmax)
        bad += int(np.count_nonzero(~matrix_lower_bound_check(p, q, k)))
        # project k onto the plane orthogonal to p + q
        P = p + q
        kp = k - (np.einsum("ij,ij->i", k, P) / np.einsum("ij,ij->i", P, P))[:, None] * P
        A = phase_vector(p, q, kp)
        g = invariants(p, q)[2]
        lhs = 2.0 * np.linalg.norm(A, axis=1) / np.maximum(g, 1e-300)
        kn = np.linalg.norm(kp, axis=1)
        err = np.abs(lhs - kn) / np.maximum(kn, 1e-300)
        worst_eq = max(worst_eq, float(err.max()))
        bad_eq += int(np.count_nonzero(err > 1e-12))
    return [CheckResult("matrix_lower_bound", n, bad, 0.0, 1e-12),
            CheckResult("matrix_bound_equality_perpendicular", n, bad_eq, worst_eq, 1e-12)]


def check_sphere_integral(rng, n=10_000, pmax=2.0, kmax=2.0, n_polar=32, n_azimuth=64):
    """Closed form 4 pi sin|A|/|A| against the product rule, and |II| <= 8 pi/(g|k|)."""
    rule = build_sphere_quadrature(n_polar, n_azimuth)
    worst, bad, bad_bound, bad_imag = 0.0, 0, 0, 0
    for m in _blocks(n):
        p, q = random_momenta(rng, m, pmax), random_momenta(rng, m, pmax)
        k = random_momenta(rng, m, kmax)
        A = phase_vector(p, q, k)
        closed = phase_sphere_integral(p, q, k).real
        quad = np.exp(-1j * (A @ rule.nodes.T)) @ rule.weights
        err = np.abs(quad - closed) / np.maximum(1.0, np.abs(closed))
        worst = max(worst, float(err.max()))
        bad += int(np.count_nonzero(err > 1e-10))
        bad_imag += int(np.count_nonzero(np.abs(quad.imag) > 1e-12 * np.maximum(1.0, np.abs(quad))))
        gk = invariants(p, q)[2] * np.linalg.norm(k, axis=1)
        pos = gk > 0
        bad_bound += int(np.count_nonzero(np.abs(closed[pos]) > 8 * np.pi / gk[pos] * (1 + 1e-12)))
    return [CheckResult("sphere_integral_closed_form", n, bad, worst, 1e-10),
            CheckResult("sphere_integral_bound", n, bad_bound, 0.0, 0.0),
            CheckResult("sphere_integral_real", n, bad_imag, 0.0, 1e-12)]


def run_all(seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    out = []
    out += check_invariants(rng, int(1_000_000 * scale))
    out += check_conservation(rng, int(100_000 * scale))
    out += check_matrix_bound(rng, int(1_000_000 * scale))
    out += check_sphere_integral(rng, int(10_000 * scale))
    return out
