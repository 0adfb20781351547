import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilute_fermi.scattering import (
    GridConfig,
    ScaledPotential,
    SmoothBump,
    SoftSphere,
    born_integral,
    born_residual,
    make_potential,
    reference_potential,
    solve_zero_energy,
    tail_deviation,
)

# fixed-step RK4 on 2 w'' = V w, 4000 steps (see rk4_a below); frozen
A_REFERENCE = 0.27121706285359715


def rk4_a(V, R0, n=4000):
    """Independent scattering length: classical RK4 from 0 to R0, a = R0 - w/w'."""
    h = R0 / n
    y = np.array([0.0, 1.0])

    def f(r, y):
        return np.array([y[1], 0.5 * V(np.array([r]))[0] * y[0]])

    for i in range(n):
        r = i * h
        k1 = f(r, y)
        k2 = f(r + h / 2, y + h / 2 * k1)
        k3 = f(r + h / 2, y + h / 2 * k2)
        k4 = f(r + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return R0 - y[0] / y[1]


def test_reference_scattering_length_matches_rk4():
    sol = solve_zero_energy(reference_potential())
    assert sol.a == pytest.approx(A_REFERENCE, rel=1e-10)
    assert rk4_a(reference_potential(), 1.0, 1000) == pytest.approx(A_REFERENCE, rel=1e-10)


def test_born_identity_reference():
    sol = solve_zero_energy(reference_potential())
    assert abs(born_integral(sol) - sol.a) / sol.a < 1e-6
    assert born_residual(sol) < 1e-6


def test_tail_is_a_over_r():
    sol = solve_zero_energy(reference_potential())
    assert tail_deviation(sol) < 1e-10
    r = np.linspace(1.5, 9.0, 7)
    assert np.allclose(sol.phi0(r), sol.a / r, rtol=1e-10)


def test_hard_sphere_limit_monotone():
    a = [solve_zero_energy(SmoothBump(V0=v, R0=1.0)).a for v in (10.0, 100.0, 1000.0)]
    assert a[0] < a[1] < a[2] < 1.0
    gaps = [1.0 - x for x in a]
    assert gaps[0] > gaps[1] > gaps[2]


def test_zero_potential():
    sol = solve_zero_energy(make_potential("zero"))
    assert sol.a == 0.0
    assert born_integral(sol) == 0.0


def test_soft_sphere_agrees_with_rk4():
    V = SoftSphere(V0=5.0, R0=1.5, width=0.3)
    assert solve_zero_energy(V).a == pytest.approx(rk4_a(V, 1.5), rel=1e-8)


def test_grid_refinement_stable():
    V = reference_potential()
    coarse = solve_zero_energy(V, GridConfig(n_points=501, coarse=True)).a
    fine = solve_zero_energy(V, GridConfig(n_points=1001, coarse=True)).a
    assert abs(coarse - fine) < 1e-9


def test_unknown_family():
    with pytest.raises(ValueError):
        make_potential("lennard-jones")


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 200.0), st.floats(0.5, 3.0))
def test_potential_invariants(V0, R0):
    V = SmoothBump(V0=V0, R0=R0)
    r = np.linspace(0, 3 * R0, 301)
    v = V(r)
    assert np.all(v >= 0)
    assert np.all(v[r >= R0] == 0)
    # radial: the evaluator sees only |x|
    x = np.random.default_rng(0).normal(size=(20, 3))
    assert np.allclose(V(np.linalg.norm(x, axis=1)), V(np.linalg.norm(x[:, ::-1], axis=1)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 200.0), st.floats(0.5, 2.0))
def test_solution_invariants(V0, R0):
    sol = solve_zero_energy(SmoothBump(V0=V0, R0=R0))
    assert 0 <= sol.a <= R0
    phi = sol.phi0_grid
    assert np.all(phi >= -1e-12)
    C = np.max(phi * (1 + sol.r))
    assert np.isfinite(C)
    assert born_residual(sol) < 1e-6
    d = sol.derivatives(sol.r[1:], 1)[1]
    assert np.isfinite(np.max(np.abs(d) * (1 + sol.r[1:] ** 2)))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3.0))
def test_scaling_covariance(lam):
    """lambda^2 V(lambda r) has scattering length a / lambda."""
    V = reference_potential()
    a = solve_zero_energy(V).a
    W = ScaledPotential(V, lam)
    assert solve_zero_energy(W).a == pytest.approx(a / lam, rel=1e-8)
