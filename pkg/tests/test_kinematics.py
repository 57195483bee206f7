import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relgain.kinematics import (
    Momentum, energy, invariants, make_pair, pointwise_bounds_check, post_collision,
    random_directions, random_momenta, scattering_angle,
)

vec = st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=3).map(np.array)
unit = st.lists(st.floats(-1, 1), min_size=3, max_size=3).map(np.array).filter(
    lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: v / np.linalg.norm(v))


@pytest.mark.parametrize("p, expected", [
    ((0, 0, 0), 1.0),
    ((1, 0, 0), np.sqrt(2.0)),
    ((3, 4, 0), np.sqrt(26.0)),
])
def test_energy_values(p, expected):
    assert energy(p) == pytest.approx(expected, rel=1e-15)


def test_energy_rejects_nonfinite():
    with pytest.raises(ValueError):
        energy([np.nan, 0, 0])
    with pytest.raises(ValueError):
        energy([1.0, 2.0])


def test_momentum_mass_shell():
    m = Momentum(np.array([3.0, -2.0, 0.5]))
    assert m.p0**2 - m.p @ m.p == pytest.approx(1.0, abs=1e-13)
    assert Momentum(np.zeros(3)).p0 == 1.0


def test_pair_identical_momenta():
    pr = make_pair([0, 0, 0], [0, 0, 0])
    assert (pr.g, pr.s, pr.gamma, pr.v_moller) == (0.0, 4.0, 1.0, 0.0)


def test_pair_unit_and_rest():
    pr = make_pair([1, 0, 0], [0, 0, 0])
    assert pr.s == pytest.approx(2 * (np.sqrt(2) + 1), rel=1e-14)
    assert pr.g == pytest.approx(np.sqrt(2 * np.sqrt(2) - 2), rel=1e-14)
    assert pr.v_moller == pytest.approx(np.sqrt(2), rel=1e-14)
    assert pr.g == pytest.approx(0.9101797211244547, rel=1e-12)


def test_pair_center_of_momentum():
    r = 2.0
    pr = make_pair([r, 0, 0], [-r, 0, 0])
    assert pr.g == pytest.approx(2 * r, rel=1e-14)
    assert pr.s == pytest.approx(20.0, rel=1e-14)
    # p + q = 0 puts the pair in its own centre-of-momentum frame
    assert pr.gamma == pytest.approx(1.0, rel=1e-14)


def test_moller_velocity_identity(rng):
    p, q = random_momenta(rng, 1000, 20), random_momenta(rng, 1000, 20)
    p0, q0, g, s, gamma, v = invariants(p, q)
    u, w = p / p0[:, None], q / q0[:, None]
    rhs = np.sum((u - w) ** 2, axis=1) - np.sum(np.cross(u, w) ** 2, axis=1)
    # v = g sqrt(s)/(p0 q0) is twice the textbook Moller speed
    np.testing.assert_allclose(v**2, 4 * rhs, rtol=1e-9, atol=1e-14)
    np.testing.assert_allclose(v, g * np.sqrt(s) / (p0 * q0))
    P = p + q
    np.testing.assert_allclose(gamma - 1, np.sum(P * P, 1) / (np.sqrt(s) * (p0 + q0 + np.sqrt(s))),
                               rtol=1e-9, atol=1e-15)


def test_post_collision_center_of_momentum(rng):
    r = 1.7
    for w in random_directions(rng, 20):
        p1, q1 = post_collision([r, 0, 0], [-r, 0, 0], w)
        np.testing.assert_allclose(p1, r * w, atol=1e-14)
        np.testing.assert_allclose(q1, -r * w, atol=1e-14)


def test_post_collision_orthogonal_omega():
    p1, q1 = post_collision([1, 0, 0], [0, 1, 0], [0, 0, 1])
    g = np.sqrt(2.0)
    np.testing.assert_allclose(p1, [0.5, 0.5, g / 2], atol=1e-15)
    np.testing.assert_allclose(q1, [0.5, 0.5, -g / 2], atol=1e-15)


def test_post_collision_accepts_pair():
    pr = make_pair([1.0, 2.0, 0.0], [0.0, -1.0, 3.0])
    w = np.array([0.0, 0.6, 0.8])
    a = post_collision(pr, w)
    b = post_collision(pr.p.p, pr.q.p, w)
    np.testing.assert_array_equal(a[0], b[0])


def test_post_collision_rejects_nonunit_omega():
    with pytest.raises(ValueError):
        post_collision([1, 0, 0], [0, 0, 0], [1, 1, 0])


def test_post_collision_small_total_momentum():
    # the boost correction must vanish continuously as p + q -> 0
    w = np.array([0.0, 0.6, 0.8])
    for eps in (1e-6, 1e-9, 1e-12):
        p1, _ = post_collision([2.0, 0, 0], [-2.0 + eps, 0, 0], w)
        np.testing.assert_allclose(p1, 2.0 * w, atol=1e-5)


@settings(max_examples=300, deadline=None)
@given(vec, vec, unit)
def test_collision_conserves(p, q, w):
    p1, q1 = post_collision(p, q, w)
    assert np.all(np.abs((p1 + q1) - (p + q)) <= 1e-12)
    e0 = energy(p) + energy(q)
    assert abs(energy(p1) + energy(q1) - e0) <= 1e-10 * e0
    g0 = invariants(p, q)[2]
    assert abs(invariants(p1, q1)[2] - g0) <= 1e-10 * max(g0, 1e-300) + 1e-12


@settings(max_examples=200, deadline=None)
@given(vec, unit)
def test_reversed_omega_swaps_in_cm_frame(p, w):
    p1, q1 = post_collision(p, -p, w)
    p2, q2 = post_collision(p, -p, -w)
    np.testing.assert_allclose(p1 + q1, p2 + q2, atol=1e-12)
    np.testing.assert_allclose(p2, q1, atol=1e-12 * (1 + np.linalg.norm(p)))


def test_gamma_one_iff_opposite(rng):
    p = random_momenta(rng, 100, 10)
    gamma = invariants(p, -p)[4]
    np.testing.assert_allclose(gamma, 1.0, atol=1e-12)
    q = random_momenta(rng, 100, 10)
    assert np.all(invariants(p, q)[4] >= 1.0)


def test_scattering_angle_forward_backward():
    p = np.array([1.5, -0.5, 0.3])
    w = p / np.linalg.norm(p)
    assert scattering_angle(p, -p, w) == pytest.approx(0.0, abs=1e-7)
    assert scattering_angle(p, -p, -w) == pytest.approx(np.pi, abs=1e-7)
    assert scattering_angle([1, 2, 3], [1, 2, 3], [0, 0, 1]) == 0.0


def test_scattering_angle_range(rng):
    p, q = random_momenta(rng, 500, 10), random_momenta(rng, 500, 10)
    th = scattering_angle(p, q, random_directions(rng, 500))
    assert np.all((th >= 0) & (th <= np.pi))


@pytest.mark.parametrize("p, q", [((0.3, 0.2, 0.1), (0.3, 0.2, 0.1)), ((10, 0, 0), (-10, 0, 0))])
def test_pointwise_bounds_examples(p, q):
    assert pointwise_bounds_check(p, q)
    assert pointwise_bounds_check(make_pair(p, q))


def test_pointwise_bounds_sampled(rng):
    p, q = random_momenta(rng, 200_000, 50), random_momenta(rng, 200_000, 50)
    assert pointwise_bounds_check(p, q).all()
    _, _, g, s, _, _ = invariants(p, q)
    np.testing.assert_allclose(s, g * g + 4, rtol=1e-9)
