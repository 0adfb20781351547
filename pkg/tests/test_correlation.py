import numpy as np
import pytest

from dilute_fermi.cli import verify as vf
from dilute_fermi.correlation import (
    HERMITIAN,
    BlockKind,
    BlockSpec,
    ModeProfiles,
    PositionOracle,
    RadialKernels,
    TableKernels,
    assemble_block,
    block_terms,
    bogoliubov_apply,
    dense_expm,
    krylov_expm,
    operator_norm,
    oracle_block,
    pair_norm,
    pair_space_norm,
    sector_trial_energy,
    trial_energy,
    trial_generator,
)
from dilute_fermi.correlation.norms import bipartite_norm, gram_norm
from dilute_fermi.fock import ModeSet, build_basis, build_quasiparticle
from dilute_fermi.scattering import make_potential, reference_potential

L = vf.L_TEST


@pytest.fixture(scope="module")
def small():
    return vf.small_system()


def _dense(op):
    return op.matrix.toarray()


def _oracle_config(vec, inside, mu, seed):
    rng = np.random.default_rng(seed)
    vec = np.array(vec)
    modes = ModeSet.from_vectors(L, [vec, vec], [inside, inside])
    M = modes.M
    u = (~modes.inside).astype(float)
    ult = u * rng.uniform(0, 1, M)
    tab = {"ur": rng.uniform(0.2, 1, M), "vr": rng.uniform(0.2, 1, M), "u_lt": ult, "u_gt": u - ult,
           "gt": (rng.uniform(0, 1, M) > 0.5) * 1.0, "tilde": (rng.uniform(0, 1, M) > 0.5) * 1.0}
    Vt, phit = vf._sym_table(rng), vf._sym_table(rng)
    mp = ModeProfiles(modes, table=tab, mu=mu)
    return modes, tab, Vt, phit, mp, TableKernels(L, Vt, phit)


@pytest.mark.parametrize("name,vec,inside,mu,kinds", [
    # two holes per spin
    ("two_holes", [[0, 0, 0], [1, 0, 0], [0, 0, 1], [1, 1, 0]], [1, 1, 0, 0], 1.0,
     ["H0", "X", "Q1", "Q2", "Q3", "Q4", "tQ1", "T1", "B"]),
    # tQ3 second part with momenta on both sides of the ball
    ("split", [[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0]], [1, 1, 0, 0], 1.0,
     ["tQ3_1_lt", "tQ3_1_gt", "tQ3_2", "tQ3"]),
])
def test_oracle_extra_configurations(name, vec, inside, mu, kinds):
    modes, tab, Vt, phit, mp, K = _oracle_config(vec, inside, (mu * (2 * np.pi / L) ** 2,) * 2, 5)
    basis = build_basis(modes, "quasiparticle")
    o = PositionOracle(modes, tab, Vt, phit, mp.mu, grid=6)
    for k in kinds:
        s = BlockSpec(BlockKind(k))
        A = assemble_block(s, basis, mp, K).toarray()
        B = oracle_block(o, s).toarray()
        assert np.abs(A - B).max() < 1e-8, k


def test_hermitian_blocks(small):
    basis, mp, K = small
    for k in HERMITIAN:
        op = assemble_block(k, basis, mp, K)
        D = op.matrix - op.matrix.conj().T
        assert (abs(D).max() if D.nnz else 0.0) < 1e-10 * max(1.0, abs(op.matrix).max()), k


def test_tq3_split_exact(small):
    basis, mp, K = small
    parts = sum(_dense(assemble_block(k, basis, mp, K)) for k in ("tQ3_1_lt", "tQ3_1_gt", "tQ3_2"))
    assert np.abs(parts - _dense(assemble_block("tQ3", basis, mp, K))).max() < 1e-12


def test_vanishing_contraction_is_zero(small):
    basis, mp, K = small
    assert len(block_terms(BlockSpec(BlockKind.IIB), mp, K).mono) == 0
    assert assemble_block("IIB", basis, mp, K).matrix.nnz == 0


def test_opposite_spin_interaction_bounded_by_full():
    """Q1 - tQ1 is the same-spin part, nonnegative for a pointwise nonnegative potential."""
    rng = np.random.default_rng(11)
    vec = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [1, 1, 0], [0, 0, 1]])
    inside = [1, 1, 0, 0, 0, 0]
    modes = ModeSet.from_vectors(L, [vec, vec], [inside, inside])
    u = (~modes.inside).astype(float)
    tab = {"ur": u, "vr": 1 - u, "u_lt": u, "u_gt": 0 * u, "gt": u, "tilde": u}
    mp = ModeProfiles(modes, table=tab, mu=((2 * np.pi / L) ** 2,) * 2)
    K = RadialKernels(L, reference_potential())
    basis = build_quasiparticle(modes, None, balanced=False)
    Q1 = assemble_block("Q1", basis, mp, K).matrix
    tQ1 = assemble_block("tQ1", basis, mp, K).matrix
    D = Q1 - tQ1
    assert abs(D).max() > 1e-6  # same-spin pairs do contribute here
    for _ in range(50):
        x = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        q, tq = np.vdot(x, Q1 @ x).real, np.vdot(x, tQ1 @ x).real
        assert tq <= q + 1e-12 * abs(q)


def test_krylov_against_dense_and_unitary(small):
    basis, mp, K = small
    G = trial_generator(basis, mp, K)
    rng = np.random.default_rng(4)
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    v /= np.linalg.norm(v)
    for t in (0.1, 1.0, 2.5):
        a, b = krylov_expm(G, v, t)[0], dense_expm(G, v, t)
        assert np.abs(a - b).max() < 1e-8
        assert abs(np.linalg.norm(b) - 1) < 1e-10
    # exp(G) then exp(-G) returns the start vector
    back = krylov_expm(G, krylov_expm(G, v, 1.3)[0], -1.3)[0]
    assert np.abs(back - v).max() < 1e-10


def test_bogoliubov_zero_lambda_is_identity(small):
    basis, mp, K = small
    G = trial_generator(basis, mp, K)
    r = bogoliubov_apply(G, basis.vacuum(), 0.0)
    assert np.array_equal(r.state, basis.vacuum())


def test_pair_norm_against_power_iteration(small):
    basis, mp, K = small
    for sigma in (0, 1):
        spec = BlockSpec(BlockKind.BPhi, sigma=sigma, z=(0.2, -0.5, 0.9))
        exact = pair_norm(block_terms(spec, mp, K).mono)
        op = assemble_block(spec, basis, mp, K)
        full = build_quasiparticle(basis.modes, None)
        est = operator_norm(assemble_block(spec, full, mp, K), tol=1e-10)
        assert est == pytest.approx(exact, rel=1e-6)
        assert operator_norm(op, tol=1e-10) <= exact * (1 + 1e-8)


def test_pair_space_norm_limits():
    assert pair_space_norm([0.7]) == pytest.approx(0.7)
    assert pair_space_norm([]) == 0.0
    # commuting hard-core lowering operators: ||sum s_k sigma_k|| <= sum s_k, >= max s_k
    s = np.array([0.3, 0.5, 0.9, 0.1])
    n = pair_space_norm(s)
    assert s.max() <= n <= s.sum()
    # equal weights give the collective lowering operator of spin r/2: norm^2 = max_k k (r - k + 1)
    for r in (2, 3, 4, 5):
        want = np.sqrt(max(k * (r - k + 1) for k in range(r + 1)))
        assert pair_space_norm(np.ones(r)) == pytest.approx(want, rel=1e-10)
    C = np.random.default_rng(0).normal(size=(5, 3))
    assert bipartite_norm(C) == pytest.approx(gram_norm(C.T @ C), rel=1e-10)


def test_sector_matches_fock_at_unit_lambda():
    c = vf.check_sector(lam=1.0)
    assert c.passed, c


def test_trial_report_bookkeeping():
    rho = 1e-2
    Lb = (7 / (rho / 2)) ** (1 / 3)
    r = trial_energy(rho / 2, rho / 2, Lb, cap=4, shell_max_n2=5, check_band=False)
    assert r.total == pytest.approx(sum(r.pieces.values()), rel=1e-13)
    assert r.correlation == pytest.approx(sum(v for k, v in r.pieces.items() if k != "E_HF"), rel=1e-13)
    assert r.correlation < 0
    assert abs(r.checks["norm"] - 1) < 1e-10
    assert abs(r.checks["Q3"]) < 1e-10


def test_zero_potential_has_no_correlation():
    rho = 1e-2
    Lb = (7 / (rho / 2)) ** (1 / 3)
    V = make_potential("zero")
    r = trial_energy(rho / 2, rho / 2, Lb, cap=4, potential=V, shell_max_n2=5, check_band=False)
    assert r.correlation == 0.0
    s = sector_trial_energy(rho / 2, rho / 2, Lb, potential=V)
    assert s.correlation == 0.0


def test_hcorr_identity():
    c = vf.check_hcorr()
    assert c.passed, c


def test_sea_energy_is_hartree_fock():
    c = vf.check_sea_energy()
    assert c.passed, c
