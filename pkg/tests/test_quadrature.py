import itertools

import numpy as np
import pytest
from scipy.special import gamma as Gamma

from oracles import GAUSSIAN_MASS
from relgain.distributions import Bump, Gaussian, Juttner, ZERO
from relgain.quadrature import (
    GridFunction, MomentumGrid, build_sphere_quadrature, integrate_grid, integrate_sphere,
    sample_on_grid,
)


def test_grid_layout():
    g = MomentumGrid(2.0, 8)
    assert g.h * g.N == pytest.approx(2 * g.R)
    assert g.points.shape == (512, 3)
    np.testing.assert_allclose(g.axis[0], -2.0 + 0.25)
    assert not np.any(g.points == 0.0)
    np.testing.assert_array_equal(g.points[1], [g.axis[0], g.axis[0], g.axis[1]])


@pytest.mark.parametrize("N", [7, 6, 9])
def test_grid_rejects_bad_sizes(N):
    with pytest.raises(ValueError):
        MomentumGrid(1.0, N)


def test_grid_function_validation():
    g = MomentumGrid(1.0, 8)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(10))
    with pytest.raises(ValueError):
        GridFunction(g, np.full(512, np.nan))
    u = GridFunction(g, np.arange(512.0))
    assert u.values.shape == (8, 8, 8) and not u.values.flags.writeable


def _monomial_exact(a, b, c):
    if a % 2 or b % 2 or c % 2:
        return 0.0
    be = [(x + 1) / 2 for x in (a, b, c)]
    return 2 * Gamma(be[0]) * Gamma(be[1]) * Gamma(be[2]) / Gamma(sum(be))


@pytest.mark.parametrize("npol, naz", [(2, 4), (4, 8), (6, 10), (8, 16)])
def test_sphere_rule_exact_to_declared_order(npol, naz):
    rule = build_sphere_quadrature(npol, naz)
    assert rule.size == npol * naz
    assert rule.weights.sum() == pytest.approx(4 * np.pi, rel=1e-12)
    assert np.all(rule.weights > 0)
    np.testing.assert_allclose(rule.weights @ rule.nodes, 0.0, atol=1e-12)
    for a, b, c in itertools.product(range(rule.order + 1), repeat=3):
        if a + b + c > rule.order:
            continue
        val = integrate_sphere(rule, lambda w: w[:, 0] ** a * w[:, 1] ** b * w[:, 2] ** c)
        assert val == pytest.approx(_monomial_exact(a, b, c), abs=1e-13)


def test_sphere_second_moment_minimal_rule(rng):
    rule = build_sphere_quadrature(2, 4)
    for e in rng.normal(size=(5, 3)):
        e /= np.linalg.norm(e)
        assert integrate_sphere(rule, lambda w: (w @ e) ** 2) == pytest.approx(4 * np.pi / 3,
                                                                              rel=1e-13)


def test_sphere_plane_wave_closed_form(rng):
    rule = build_sphere_quadrature(32, 32)
    for _ in range(10):
        A = rng.normal(size=3)
        A *= 3.0 / np.linalg.norm(A)
        val = integrate_sphere(rule, lambda w: np.exp(-1j * (w @ A)))
        assert abs(val - 4 * np.pi * np.sin(3.0) / 3.0) < 1e-10


def test_sphere_rejects_small_rules():
    with pytest.raises(ValueError):
        build_sphere_quadrature(1, 8)
    with pytest.raises(ValueError):
        build_sphere_quadrature(4, 3)


def test_integrate_constant():
    for N in (8, 12):
        g = MomentumGrid(2.0, N)
        assert integrate_grid(GridFunction(g, np.ones(g.size))) == pytest.approx(64.0, rel=1e-14)


def test_integrate_gaussian():
    g = MomentumGrid(8.0, 64)
    assert integrate_grid(sample_on_grid(Gaussian(), g)) == pytest.approx(GAUSSIAN_MASS, abs=1e-6)


def test_odd_integrand_vanishes():
    g = MomentumGrid(5.0, 24)
    p = g.points
    u = GridFunction(g, p[:, 0] * np.exp(-np.sum(p * p, 1)))
    assert abs(integrate_grid(u)) < 1e-14


def test_midpoint_convergence_order():
    # the midpoint rule is spectrally accurate on a Gaussian, so the observed
    # order exceeds the second-order guarantee by a wide margin
    errs = [abs(integrate_grid(sample_on_grid(Gaussian(), MomentumGrid(8.0, N))) - GAUSSIAN_MASS)
            for N in (8, 16)]
    assert np.log2(errs[0] / errs[1]) >= 1.9


def test_linearity(rng):
    g = MomentumGrid(4.0, 12)
    u = GridFunction(g, rng.random(g.size))
    v = GridFunction(g, rng.random(g.size))
    al, be = 1.7, -0.3
    lhs = integrate_grid(GridFunction(g, al * u.flat + be * v.flat))
    assert lhs == pytest.approx(al * integrate_grid(u) + be * integrate_grid(v), rel=1e-13)
    rule = build_sphere_quadrature(6, 12)
    f1 = lambda w: np.cos(w[:, 0])
    f2 = lambda w: w[:, 2] ** 3 + 1
    assert integrate_sphere(rule, lambda w: al * f1(w) + be * f2(w)) == pytest.approx(
        al * integrate_sphere(rule, f1) + be * integrate_sphere(rule, f2), rel=1e-13)


def test_sample_on_grid_spots():
    g = MomentumGrid(3.0, 8)
    j = sample_on_grid(Juttner(1.0, 1.0), g)
    p = g.points[77]
    expected = np.exp(-(np.sqrt(1 + p @ p) - 1)) / Juttner(1.0, 1.0).normalizer
    assert j.flat[77] == pytest.approx(expected, rel=1e-14)
    assert not np.any(sample_on_grid(ZERO, g).flat)
    assert not np.any(sample_on_grid(Bump((10.0, 0, 0), 1.0), g).flat)
