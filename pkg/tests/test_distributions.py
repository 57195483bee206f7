import numpy as np
import pytest
from scipy import integrate

from oracles import juttner_norm_bessel
from relgain.distributions import (
    Bump, Gaussian, GridDistribution, Juttner, Mixture, PowerLaw, ZERO, juttner_normalizer,
    meet_symmetry, same_shape,
)
from relgain.quadrature import MomentumGrid, integrate_grid, sample_on_grid


@pytest.mark.parametrize("T", [0.3, 0.5, 1.0, 2.0, 5.0])
def test_juttner_normalizer_matches_bessel(T):
    assert juttner_normalizer(T) == pytest.approx(juttner_norm_bessel(T), rel=1e-10)


@pytest.mark.parametrize("n, T", [(1.0, 1.0), (2.5, 0.5)])
def test_juttner_integrates_to_density(n, T):
    j = Juttner(n, T)
    val, _ = integrate.quad(lambda r: 4 * np.pi * r * r * j.radial_profile(np.array([r]))[0],
                            0, 60 * T, epsrel=1e-12, limit=300)
    assert val == pytest.approx(n, rel=1e-8)


def test_juttner_validation():
    with pytest.raises(ValueError):
        Juttner(0.0, 1.0)
    with pytest.raises(ValueError):
        Juttner(1.0, -1.0)


def test_gaussian_mass_and_tail():
    g = Gaussian((0.5, 0, 0), 0.7, 2.0)
    grid = MomentumGrid(6.0, 48)
    assert integrate_grid(sample_on_grid(g, grid)) == pytest.approx(g.total_mass(), rel=1e-9)
    assert g.tail_mass(6.0) < 1e-12
    assert g.tail_mass(1.0) > 0.1 * g.total_mass()
    assert g(np.array([0.5, 0, 0])) == pytest.approx(2.0)


def test_bump_support_and_volume():
    b = Bump(radius=1.0)
    assert b(np.array([0.999, 0, 0])) < 1e-10
    assert b(np.array([1.0, 0, 0])) == 0.0
    assert b(np.zeros(3)) == 1.0
    vol = b.total_mass()
    ref, _ = integrate.quad(lambda r: 4 * np.pi * r * r * np.exp(-r**8 / (1 - r * r)), 0, 1,
                            epsrel=1e-12)
    assert vol == pytest.approx(ref, rel=1e-10)
    assert vol < 4 * np.pi / 3
    grid = MomentumGrid(1.5, 96)
    assert integrate_grid(sample_on_grid(b, grid)) == pytest.approx(vol, rel=2e-3)


def test_powerlaw_mass():
    pl = PowerLaw(alpha=2.5, mollifier=0.2)
    grid = MomentumGrid(8.0, 80)
    assert integrate_grid(sample_on_grid(pl, grid)) == pytest.approx(pl.total_mass(), rel=2e-2)


def test_grid_distribution_trilinear():
    grid = MomentumGrid(2.0, 8)
    vals = 1.0 + grid.points @ np.array([0.3, -0.2, 0.5])
    gd = GridDistribution(sample_on_grid(lambda p: 1.0 + p @ np.array([0.3, -0.2, 0.5]), grid))
    # linear data is reproduced exactly between interior nodes
    inner = np.array([[0.1, -0.3, 0.7], [1.2, 0.4, -1.1]])
    np.testing.assert_allclose(gd(inner), 1.0 + inner @ np.array([0.3, -0.2, 0.5]), rtol=1e-13)
    np.testing.assert_allclose(gd(grid.points), vals, rtol=1e-13)
    assert gd(np.array([2.5, 0.0, 0.0])) == 0.0


def test_mixture_and_scaling():
    a, b = Juttner(1.0, 0.8), Juttner(1.0, 1.25)
    m = a + b
    p = np.array([[0.3, 0.1, -0.2], [2.0, 0, 0]])
    np.testing.assert_allclose(m(p), a(p) + b(p), rtol=1e-14)
    np.testing.assert_allclose((3.0 * a)(p), 3.0 * a(p), rtol=1e-14)
    assert m.total_mass() == pytest.approx(2.0)
    assert m.symmetry == "radial"
    assert (a + Gaussian((1.0, 0, 0))).symmetry == "axial0"
    assert (Gaussian((1.0, 0, 0)) + Gaussian((0, 1.0, 0))).symmetry == "none"
    assert ZERO.is_zero and (0.0 * a).is_zero
    with pytest.raises(ValueError):
        Mixture(((-1.0, a),))


def test_symmetry_helpers():
    assert meet_symmetry("radial", "axial2") == "axial2"
    assert meet_symmetry("axial1", "axial2") == "none"
    assert same_shape(Juttner(1, 1), Juttner(1, 1))
    assert not same_shape(Juttner(1, 1), Juttner(1, 2))
