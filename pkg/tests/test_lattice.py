import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dilute_fermi.lattice import (
    KF_CONST,
    DegenerateBand,
    LatticeError,
    MomentumLattice,
    ball_config,
    build_profiles,
    fermi_ball,
    hf_energy,
    integer_ball,
    pair_difference_counts,
    spin_config,
)
from dilute_fermi.scattering import reference_potential

# lattice points with |n|^2 <= m, m = 0..6 (brute enumeration, frozen)
BALL_COUNTS = [1, 7, 19, 27, 33, 57, 81]


def brute_ball(m):
    r = range(-3, 4)
    return sorted(n for n in itertools.product(r, r, r) if sum(x * x for x in n) <= m)


def test_ball_counts():
    for m, c in enumerate(BALL_COUNTS):
        b = integer_ball(m)
        assert len(b) == c
        assert sorted(map(tuple, b)) == brute_ball(m)


def test_shell_multiplicities():
    lat = MomentumLattice(5.0, 6)
    vals, counts = lat.shells()
    assert list(vals) == [0, 1, 2, 3, 4, 5, 6]
    assert list(np.cumsum(counts)) == BALL_COUNTS
    # closed under negation
    s = set(map(tuple, lat.n))
    assert all(tuple(-np.array(n)) in s for n in s)


def test_fermi_ball_rounds_down():
    L = 10.0
    lat = MomentumLattice(L, 10)
    b = fermi_ball(lat, 25 / L**3)
    assert b.N == 19 and b.n2F == 2
    with pytest.raises(LatticeError):
        fermi_ball(lat, 0.5 / L**3)


def test_kf_trend():
    rho = 1e-3
    ratios = []
    for L in (40.0, 80.0, 160.0):
        c = spin_config(L, rho, rho)
        ratios.append(c.up.kF / (KF_CONST * c.up.rho ** (1 / 3)))
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1) + 1e-12
    assert abs(ratios[-1] - 1) < 0.05


def brute_hf(cfg, V):
    """Direct double sums over both balls."""
    L = cfg.L
    c = 2 * np.pi / L
    kin, direct, exch = 0.0, 0.0, 0.0
    balls = [cfg.up.vectors(), cfg.down.vectors()]
    N = sum(len(b) for b in balls)
    V0 = float(V.fourier(np.array([0.0]))[0])
    for b in balls:
        kin += c**2 * np.sum(b * b)
        d = b[:, None, :] - b[None, :, :]
        exch -= 0.5 / L**3 * np.sum(V.fourier(c * np.linalg.norm(d, axis=2).ravel()))
    direct = 0.5 / L**3 * V0 * N**2
    return kin, direct, exch


@pytest.mark.parametrize("n2F", [(1, 1), (2, 0), (3, 1)])
def test_hf_against_brute(n2F):
    V = reference_potential()
    cfg = ball_config(7.0, *n2F)
    hf = hf_energy(cfg, V)
    kin, direct, exch = brute_hf(cfg, V)
    assert hf.kinetic == pytest.approx(kin, rel=1e-12)
    assert hf.direct == pytest.approx(direct, rel=1e-12)
    assert hf.exchange == pytest.approx(exch, rel=1e-10)
    assert hf.exchange <= 0 <= hf.direct


def test_pair_difference_counts_total():
    for m in range(5):
        vals, counts = pair_difference_counts(m)
        assert counts.sum() == len(integer_ball(m)) ** 2
        assert counts[vals == 0][0] == len(integer_ball(m))


def test_gap_for_large_momenta():
    # exact integer arithmetic: |n|^2 >= 4 n2F implies | |n|^2 - n2F | >= 3 n2F
    for n2F in range(1, 8):
        n = integer_ball(16 * n2F)
        n2 = np.sum(n * n, axis=1)
        sel = n2 >= 4 * n2F
        assert np.all(np.abs(n2[sel] - n2F) >= 3 * n2F)


def test_degenerate_band_detected():
    with pytest.raises(DegenerateBand):
        build_profiles(ball_config(5.0, 0))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0.2, 1.0), st.floats(0.05, 0.3), st.floats(8.0, 40.0))
def test_profile_invariants(n2F, eps, beta, L):
    cfg = ball_config(L, n2F)
    try:
        prof = build_profiles(cfg, eps, beta)
    except DegenerateBand:
        assume(False)
    sp = prof.spin(0)
    n = integer_ball(int((2 * sp.high * L / (2 * np.pi)) ** 2) + 4 * n2F + 2)
    n2 = np.sum(n * n, axis=1)
    for name in ("u", "v", "ur", "vr", "nu", "delta", "alpha", "delta_gt", "u_lt", "u_gt"):
        v = sp.get(name, n2)
        assert np.all((v >= 0) & (v <= 1)), name
    assert np.all(sp.ur(n2) * sp.vr(n2) == 0)
    assert np.all(sp.vr(n2)[n2 > n2F] == 0)
    assert np.all(sp.ur(n2)[n2 <= 4 * n2F] == 0)
    # u = alpha + u^r + delta^> on the lattice
    assert np.allclose(sp.alpha(n2) + sp.ur(n2) + sp.delta_gt(n2), sp.u(n2), atol=1e-14)
