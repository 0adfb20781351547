import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilute_fermi.cli.fit import fit_exponent
from dilute_fermi.kernel import (
    KernelError,
    build_kernel,
    cancellation_residual,
    decay_profile,
    make_chi,
    periodize,
    scattering_identity,
    sums_of_three_squares,
)
from dilute_fermi.scattering import make_potential, reference_potential


@pytest.fixture(scope="module")
def kern():
    return build_kernel(reference_potential(), 1e-3)


@pytest.fixture(scope="module")
def sweep():
    rhos = np.logspace(-4, -2, 5)
    return rhos, [build_kernel(reference_potential(), r) for r in rhos]


def riemann_fourier(f, rmax, p, n=400_000):
    """4 pi int r^2 f(r) sinc(p r) dr by the midpoint rule (independent of the library quadrature)."""
    r = (np.arange(n) + 0.5) * rmax / n
    fr = f(r) * r**2
    out = []
    for q in np.atleast_1d(p):
        s = np.sinc(q * r / np.pi)
        out.append(4 * np.pi * np.sum(fr * s) * rmax / n)
    return np.array(out)


def test_fourier_against_riemann(kern):
    p = np.array([0.0, 0.05, 0.2, 0.7, 1.5])
    rmax = 2.0 * kern.rho ** (-1 / 3)
    want = riemann_fourier(kern.phi, rmax, p)
    got = kern.fourier(p)
    assert np.max(np.abs(got - want)) < 1e-6 * abs(want[0])
    wantE = riemann_fourier(kern.E, rmax, p)
    assert np.max(np.abs(kern.E_fourier(p) - wantE)) < 1e-6 * np.max(np.abs(wantE))


@pytest.mark.parametrize("rho", [1e-2, 1e-3, 1e-4])
def test_cancellation_and_identity(rho):
    k = build_kernel(reference_potential(), rho)
    assert cancellation_residual(k) < 1e-6
    lhs, rhs = scattering_identity(k)
    assert abs(lhs - rhs) / rhs < 1e-5


def test_kernel_norm_exponents(sweep):
    rhos, kernels = sweep
    norms = [k.norms() for k in kernels]
    for name, ref in (("phi_1", -2 / 3), ("grad_phi_1", -1 / 3), ("phi_2", -1 / 6), ("lap_phi_1", 0.0),
                      ("grad_phi_2", 0.0)):
        f = fit_exponent(list(zip(rhos, [n[name] for n in norms])), name, ref)
        assert f.within(0.05), (name, f.exponent)
    assert max(n["phi_inf"] for n in norms) == pytest.approx(min(n["phi_inf"] for n in norms), rel=1e-6)


def test_support_properties(kern):
    r_in = kern.rho ** (-1 / 3)
    r = np.linspace(0, 3 * r_in, 3001)
    phi, E = kern.phi(r), kern.E(r)
    assert np.all(phi[r >= 2 * r_in] == 0)
    assert np.all(E[(r < r_in) | (r > 2 * r_in)] == 0)
    # phi_inf = phi0 where V lives
    small = r[r <= 1.0]
    assert np.allclose(kern.phi(small), kern.sol.phi0(small), rtol=0, atol=1e-14)


def test_periodize_single_image():
    k = build_kernel(reference_potential(), 1e-2)
    with pytest.raises(KernelError):
        periodize(k, 3.0 * 1e-2 ** (-1 / 3))
    L = 4.5 * 1e-2 ** (-1 / 3)
    pk = periodize(k, L)
    assert pk.single_image
    # real-space periodization equals phi_inf inside the box
    x = np.random.default_rng(2).uniform(-L / 2, L / 2, (40, 3))
    assert np.allclose(pk.real_space(x, images=1), k.phi(np.linalg.norm(x, axis=1)), atol=1e-14)
    # Fourier coefficients are the radial transform at lattice momenta
    n = np.array([[1, 0, 0], [0, -1, 0], [1, 1, 1], [2, 0, 1]])
    assert np.allclose(pk.coeff(n), k.fourier(2 * np.pi / L * np.linalg.norm(n, axis=1)), rtol=1e-12)
    assert np.allclose(pk.coeff(n), pk.coeff(-n))


def test_decay_profile_stable_across_rho(sweep):
    rhos, kernels = sweep
    pks = [periodize(k, 4.5 * r ** (-1 / 3)) for r, k in zip(rhos, kernels)]
    for n in (2, 3, 4):
        C = [decay_profile(pk, n) for pk in pks]
        assert max(C) / min(C) < 2.0


def test_sums_of_three_squares_brute():
    got = sums_of_three_squares(30)
    r = np.arange(-6, 7)
    n2 = (r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2).ravel()
    want = np.unique(n2[n2 <= 30])
    assert np.array_equal(got, want)


def test_zero_potential_kernel():
    k = build_kernel(make_potential("zero"), 1e-3)
    assert k.a == 0.0
    assert np.all(k.fourier(np.array([0.0, 0.3])) == 0)


def test_chi_rejects_low_order():
    with pytest.raises(KernelError):
        make_chi(1e-3, 2)
    with pytest.raises(KernelError):
        make_chi(-1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-5, 1e-1), st.sampled_from(["exp", 4, 6]))
def test_chi_invariants(rho, profile):
    chi = make_chi(rho, profile)
    R = rho ** (-1 / 3)
    r = np.linspace(0, 3 * R, 2001)
    c = chi(r)
    assert np.all((c >= 0) & (c <= 1 + 1e-15))
    assert np.all(c[r <= R] == 1.0)
    assert np.all(c[r >= 2 * R] == 0.0)
    d = chi.derivatives(r, 2)
    for n in (1, 2):
        assert np.max(np.abs(d[n])) <= 50.0 * rho ** (n / 3)


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-4, 1e-2), st.floats(0.0, 3.0))
def test_fourier_real_even(rho, p):
    k = build_kernel(reference_potential(), rho)
    v = k.fourier(np.array([p, -p]))
    assert np.isrealobj(v) and v[0] == pytest.approx(v[1], rel=1e-12)
