import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dilute_fermi.cli.verify import check_car, check_relabel
from dilute_fermi.fock import (
    BACKEND,
    BasisError,
    ModeSet,
    Monomials,
    annihilation,
    assemble,
    build_basis,
    build_quasiparticle,
    creation,
    number_operator,
    particle_hole,
    physical_dimension,
    quasiparticle_dimension,
)

L = 5.0


def modes6(inside=(1, 0, 0), vec=((0, 0, 0), (1, 0, 0), (-1, 0, 0))):
    v = np.array(vec)
    return ModeSet.from_vectors(L, [v, v], [list(inside), list(inside)])


def dense_ops(M):
    """a_m on all 2^M masks, indexed by the mask itself, sign (-1)^(occupied modes below m)."""
    dim = 1 << M
    ops = []
    for m in range(M):
        A = np.zeros((dim, dim))
        for s in range(dim):
            if s >> m & 1:
                A[s ^ (1 << m), s] = (-1) ** bin(s & ((1 << m) - 1)).count("1")
        ops.append(A)
    return ops


def dense_monomial(mono, ops):
    dim = ops[0].shape[0]
    out = np.zeros((dim, dim), complex)
    for cre, ann, c in zip(mono.cre, mono.ann, mono.coef):
        P = np.eye(dim)
        for m in cre[cre >= 0]:
            P = P @ ops[m].T
        for m in ann[ann >= 0]:
            P = P @ ops[m]
        out += c * P
    return out


def restrict(D, basis):
    s = basis.states.astype(np.int64)
    return D[np.ix_(s, s)]


def test_dimensions_match_formula_and_enumeration():
    modes = modes6()
    M = modes.M
    masks = np.arange(1 << M)
    for nu, nd in itertools.product(range(4), range(4)):
        b = build_basis(modes, "physical", N=(nu, nd))
        assert b.dim == physical_dimension(modes, nu, nd) == comb(3, nu) * comb(3, nd)
        up = np.array([bin(m & 0b111).count("1") for m in masks])
        dn = np.array([bin(m >> 3).count("1") for m in masks])
        assert np.array_equal(b.states, masks[(up == nu) & (dn == nd)].astype(np.uint64))
    for cap in (0, 2, 4, None):
        b = build_quasiparticle(modes, cap)
        pop = np.array([bin(m).count("1") for m in masks])
        want = masks[pop <= (M if cap is None else cap)]
        assert b.dim == quasiparticle_dimension(modes, cap) == len(want)
        assert np.array_equal(b.states, want.astype(np.uint64))
        bb = build_quasiparticle(modes, cap, balanced=True)
        assert bb.dim == quasiparticle_dimension(modes, cap, True)
        assert np.all(np.diff(bb.states.astype(np.int64)) > 0)


def test_basis_errors():
    modes = modes6()
    with pytest.raises(BasisError):
        build_quasiparticle(modes, 3)
    with pytest.raises(BasisError):
        build_basis(modes, "physical")
    with pytest.raises(ValueError):
        ModeSet.from_vectors(L, [np.array([[0, 0, 0], [0, 0, 0]]), np.zeros((0, 3))], [[1, 1], []])
    big = ModeSet.from_vectors(L, [np.arange(66 * 3).reshape(66, 3), np.zeros((0, 3))], [np.zeros(66), []])
    with pytest.raises(BasisError):
        build_quasiparticle(big, 2, max_modes=64)


def test_car_twelve_modes():
    c = check_car(12)
    assert c.passed and c.value < 1e-12


def test_particle_hole_relabel_exact():
    c = check_relabel()
    assert c.passed and c.value == 0.0


def test_particle_hole_vacuum_is_sea():
    modes = modes6()
    phys = build_basis(modes, "physical", N=(1, 1))
    quasi = build_basis(modes, "quasiparticle", balanced=True)
    R = particle_hole(phys, quasi)
    psi = R.to_physical(quasi.vacuum())
    sea = np.uint64(modes.fermi_sea_mask())
    assert abs(abs(psi[int(np.searchsorted(phys.states, sea))]) - 1) < 1e-15
    # R is unitary between the two frames
    X = np.random.default_rng(0).normal(size=quasi.dim)
    assert np.linalg.norm(R.to_physical(X)) == pytest.approx(np.linalg.norm(X))
    assert np.allclose(R.to_quasi(R.to_physical(X)), X)


def _mono_strategy(M):
    idx = st.lists(st.integers(0, M - 1), min_size=0, max_size=2)
    term = st.tuples(idx, idx, st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
    return st.lists(term, min_size=1, max_size=6)


DENSE = dense_ops(6)


@settings(max_examples=60, deadline=None)
@given(_mono_strategy(6), st.sampled_from([None, 2, 4]))
def test_assembly_matches_dense_jordan_wigner(terms, cap):
    modes = modes6()
    basis = build_quasiparticle(modes, cap)
    mono = Monomials.from_terms(terms)
    want = restrict(dense_monomial(mono, DENSE), basis)
    for backend in {"numpy", BACKEND}:
        got = assemble(mono, basis, backend=backend).toarray()
        assert np.allclose(got, want, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(_mono_strategy(6))
def test_canonical_and_adjoint(terms):
    modes = modes6()
    basis = build_quasiparticle(modes, None)
    mono = Monomials.from_terms(terms)
    A = assemble(mono, basis).toarray()
    assert np.allclose(assemble(mono.canonical(), basis).toarray(), A, atol=1e-13)
    assert np.allclose(assemble(mono.adjoint(), basis).toarray(), A.conj().T, atol=1e-13)
    H = assemble(mono.hermitian_part(), basis)
    assert H.hermiticity_defect() < 1e-12


def test_number_operator_commutes_with_conserving_terms():
    modes = modes6()
    basis = build_quasiparticle(modes, None)
    rng = np.random.default_rng(3)
    terms = [((int(a), int(b)), (int(c), int(d)), rng.normal()) for a, b, c, d in rng.integers(0, 6, (20, 4))]
    terms += [((int(a),), (int(b),), rng.normal()) for a, b in rng.integers(0, 6, (10, 2))]
    op = assemble(Monomials.from_terms(terms), basis)
    N = number_operator(basis)
    C = N.commutator(op).matrix
    assert (abs(C).max() if C.nnz else 0.0) < 1e-12


def test_qp_change_metadata():
    modes = modes6()
    basis = build_quasiparticle(modes, None)
    op = assemble(Monomials.from_terms([((0, 1), (), 1.0)]), basis)
    assert op.qp_change == frozenset({2}) == op.qp_change_observed()
    assert creation(basis, 2).qp_change_observed() == frozenset({1})
    assert annihilation(basis, 2).H.qp_change == frozenset({1})


def test_truncation_counted():
    modes = modes6()
    small = build_quasiparticle(modes, 2)
    op = assemble(Monomials.from_terms([((0, 1), (), 1.0)]), small)
    # sources with one or two quasiparticles outside modes {0, 1} land above the cap
    assert op.dropped == comb(4, 1) + comb(4, 2)


def test_repeated_index_vanishes():
    basis = build_quasiparticle(modes6(), None)
    for terms in ([((), (0, 0), 1.0)], [((3, 3), (), 1.0)], [((1,), (2, 2), 1.0)]):
        for backend in {"numpy", BACKEND}:
            assert assemble(Monomials.from_terms(terms), basis, backend=backend).matrix.nnz == 0


def test_pure_env_selects_numpy_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, DILUTE_FERMI_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from dilute_fermi.fock import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
