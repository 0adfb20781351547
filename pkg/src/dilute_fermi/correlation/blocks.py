"""Second-quantized blocks of the correlation Hamiltonian and the trial transformation.

Every block is a sum of normal-ordered terms int V(x-y) prod a^#(f), assembled
in momentum space by :func:`engine.quartic`.  Signs and weights fixed by the
exact identity R^* H R - E_HF = H_corr are collected in :data:`CONVENTIONS`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..fock.basis import FockBasis
from ..fock.monomials import Monomials
from ..fock.ops import SparseOp, assemble
from .engine import Slot, pair_annihilator, quadratic, quartic
from .inputs import Kernels, ModeProfiles

UP, DOWN = 0, 1

# Coefficients fixed by matching R^* H R - E_HF on small systems.
CONVENTIONS = {
    "X_sign": -1.0,   # X = -sum W_sigma(k) (u^2 - v^2) a^* a
    "Q2_cross": 1.0,  # weight of a^*(u_x) a^*(vbar_x) a(vbar_y) a(u_y), same spin at each point
}


class ClosureError(RuntimeError):
    pass


class BlockKind(str, Enum):
    H0 = "H0"
    X = "X"
    Q1 = "Q1"
    Q2 = "Q2"
    Q3 = "Q3"
    Q4 = "Q4"
    tQ1 = "tQ1"
    tQ2 = "tQ2"
    tQ3 = "tQ3"
    tQ4 = "tQ4"
    tQ3_1_lt = "tQ3_1_lt"
    tQ3_1_gt = "tQ3_1_gt"
    tQ3_2 = "tQ3_2"
    T1 = "T1"
    T2 = "T2"
    T2r = "T2r"
    tQ4r = "tQ4r"
    N = "N"
    Nsigma = "Nsigma"
    Ngt = "Ngt"
    Ntilde = "Ntilde"
    B = "B"
    PairOp = "PairOp"
    # auxiliary operators used by the verification suite
    Egen = "Egen"
    BPhi = "BPhi"
    IIB = "IIB"
    ScatteringSum = "ScatteringSum"


HERMITIAN = {
    BlockKind.H0, BlockKind.X, BlockKind.Q1, BlockKind.Q2, BlockKind.Q3, BlockKind.Q4,
    BlockKind.tQ1, BlockKind.tQ2, BlockKind.tQ3, BlockKind.tQ4, BlockKind.tQ3_1_lt,
    BlockKind.tQ3_1_gt, BlockKind.tQ3_2, BlockKind.T1, BlockKind.T2, BlockKind.T2r,
    BlockKind.tQ4r, BlockKind.N, BlockKind.Nsigma, BlockKind.Ngt, BlockKind.Ntilde,
    BlockKind.Egen, BlockKind.ScatteringSum,
}


@dataclass(frozen=True)
class BlockSpec:
    """A kind together with its parameter payload."""

    kind: BlockKind
    sigma: int | None = None
    p: tuple | None = None
    z: tuple | None = None
    kernel: str = "phi"
    half: bool = False  # pair-annihilating half only (no h.c.)

    @classmethod
    def of(cls, kind, **kw) -> "BlockSpec":
        return cls(BlockKind(kind), **kw)


@dataclass
class BlockTerms:
    mono: Monomials
    dropped: int = 0
    kept: int = 0
    meta: dict = field(default_factory=dict)

    def add(self, mono, dropped=0):
        self.mono = self.mono + mono
        self.dropped += dropped
        self.kept += len(mono)


def _spin_pairs(tilde: bool):
    return [(s, t) for s in (UP, DOWN) for t in (UP, DOWN) if not (tilde and s == t)]


def _S(dag, prof, var, spin):
    return Slot(bool(dag), prof, var, int(spin))


# ---------------------------------------------------------------- quartic blocks
def _q1(mp, K, tilde, acc):
    for s, t in _spin_pairs(tilde):
        sl = (_S(1, "u", "x", s), _S(1, "u", "y", t), _S(0, "u", "y", t), _S(0, "u", "x", s))
        acc.add(*quartic(mp, sl, K.V, 0.5))


def _q2(mp, K, tilde, acc):
    c = CONVENTIONS["Q2_cross"]
    for s, t in _spin_pairs(tilde):
        sl = (_S(1, "u", "x", s), _S(1, "v", "x", s), _S(0, "v", "y", t), _S(0, "u", "y", t))
        acc.add(*quartic(mp, sl, K.V, c))
        sl = (_S(1, "v", "x", s), _S(1, "v", "y", t), _S(0, "v", "y", t), _S(0, "v", "x", s))
        acc.add(*quartic(mp, sl, K.V, 0.5))
        sl = (_S(1, "u", "x", s), _S(1, "v", "y", t), _S(0, "v", "y", t), _S(0, "u", "x", s))
        acc.add(*quartic(mp, sl, K.V, -1.0))


def _q3_first(mp, K, tilde, ann_profile="u"):
    acc = BlockTerms(Monomials.empty())
    for s, t in _spin_pairs(tilde):
        sl = (_S(1, "u", "x", s), _S(1, "u", "y", t), _S(1, "v", "x", s), _S(0, ann_profile, "y", t))
        acc.add(*quartic(mp, sl, K.V, -1.0))
    return acc


def _q3_second(mp, K, tilde):
    acc = BlockTerms(Monomials.empty())
    for s, t in _spin_pairs(tilde):
        sl = (_S(1, "u", "x", s), _S(1, "v", "y", t), _S(1, "v", "x", s), _S(0, "v", "y", t))
        acc.add(*quartic(mp, sl, K.V, 1.0))
    return acc


def _with_hc(part: BlockTerms, acc: BlockTerms):
    acc.add(part.mono + part.mono.adjoint(), part.dropped)


def _q4(mp, K, tilde, acc):
    part = BlockTerms(Monomials.empty())
    for s, t in _spin_pairs(tilde):
        sl = (_S(1, "u", "x", s), _S(1, "u", "y", t), _S(1, "v", "y", t), _S(1, "v", "x", s))
        part.add(*quartic(mp, sl, K.V, 0.5))
    _with_hc(part, acc)


def _pair_block(mp, kernel_fn, first, pref, weight=None):
    """pref * int K(x-y) a_up(first_x) a_up(vbar^r_x) a_down(first_y) a_down(vbar^r_y)."""
    first_y = first if isinstance(first, str) else first[1]
    first_x = first if isinstance(first, str) else first[0]
    sl = (_S(0, first_x, "x", UP), _S(0, "vr", "x", UP), _S(0, first_y, "y", DOWN), _S(0, "vr", "y", DOWN))
    return quartic(mp, sl, kernel_fn, pref, weight)


def egen_weight(L):
    """-2 (k1-k2).(k2-k4) for slots k1=s+p, k2=s, k3=s'-p, k4=s'."""
    c = (2 * np.pi / L) ** 2

    def w(n1, n2, n3, n4):
        return -2.0 * c * np.sum((n1 - n2) * (n2 - n4), axis=-1)

    return w


# ---------------------------------------------------------------- quadratic blocks
def exchange_weights(mp: ModeProfiles, K: Kernels) -> np.ndarray:
    """W_sigma(k) = L^{-3} sum_{s in B_sigma} V^(k - s) per mode."""
    m = mp.modes
    W = np.zeros(m.M)
    for sigma in (UP, DOWN):
        idx = m.of_spin(sigma)
        ball = mp.ball(sigma)
        if len(idx) == 0 or len(ball) == 0:
            continue
        diff = m.n[idx][:, None, :] - ball[None, :, :]
        W[idx] = K.V(diff).sum(axis=1) / m.L**3
    return W


def _number_weights(mp: ModeProfiles, kind: BlockKind, sigma):
    m = mp.modes
    if kind == BlockKind.N:
        return np.ones(m.M)
    if kind == BlockKind.Nsigma:
        return (m.spin == sigma).astype(float)
    if kind == BlockKind.Ngt:
        return mp.values("gt")
    if kind == BlockKind.Ntilde:
        return mp.values("tilde")
    raise KeyError(kind)


# ---------------------------------------------------------------- dispatcher
def block_terms(spec: BlockSpec, mp: ModeProfiles, K: Kernels) -> BlockTerms:
    """Normal-ordered monomials of a block (before matrix assembly)."""
    kind = spec.kind
    acc = BlockTerms(Monomials.empty())
    tilde = kind.value.startswith("t")
    L = mp.modes.L
    if kind == BlockKind.H0:
        acc.add(quadratic(mp, mp.energies()))
    elif kind == BlockKind.X:
        u, v = mp.values("u"), mp.values("v")
        acc.add(quadratic(mp, CONVENTIONS["X_sign"] * exchange_weights(mp, K) * (u * u - v * v)))
    elif kind in (BlockKind.Q1, BlockKind.tQ1):
        _q1(mp, K, tilde, acc)
    elif kind in (BlockKind.Q2, BlockKind.tQ2):
        _q2(mp, K, tilde, acc)
    elif kind in (BlockKind.Q3, BlockKind.tQ3):
        _with_hc(_q3_first(mp, K, tilde), acc)
        _with_hc(_q3_second(mp, K, tilde), acc)
    elif kind == BlockKind.tQ3_1_lt:
        _with_hc(_q3_first(mp, K, True, "u_lt"), acc)
    elif kind == BlockKind.tQ3_1_gt:
        _with_hc(_q3_first(mp, K, True, "u_gt"), acc)
    elif kind == BlockKind.tQ3_2:
        _with_hc(_q3_second(mp, K, True), acc)
    elif kind in (BlockKind.Q4, BlockKind.tQ4):
        _q4(mp, K, tilde, acc)
    elif kind in (BlockKind.T1, BlockKind.T2, BlockKind.T2r, BlockKind.tQ4r, BlockKind.ScatteringSum,
                  BlockKind.Egen):
        part = BlockTerms(Monomials.empty())
        if kind in (BlockKind.T1, BlockKind.ScatteringSum):
            part.add(*_pair_block(mp, K.lap_phi, "ur", 2.0))
        if kind == BlockKind.T2:
            part.add(*_pair_block(mp, K.Vphi, "u", -1.0))
        if kind in (BlockKind.T2r, BlockKind.ScatteringSum):
            part.add(*_pair_block(mp, K.Vphi, "ur", -1.0))
        if kind in (BlockKind.tQ4r, BlockKind.ScatteringSum):
            part.add(*_pair_block(mp, K.V, "ur", 1.0))
        if kind == BlockKind.Egen:
            part.add(*_pair_block(mp, K.get(spec.kernel), "ur", 1.0, egen_weight(L)))
        if spec.half:
            acc.add(part.mono, part.dropped)
        else:
            _with_hc(part, acc)
    elif kind == BlockKind.B:
        # pair-creating form; the configuration-space B of the trial state is its adjoint
        part = BlockTerms(Monomials.empty())
        part.add(*_pair_block(mp, K.get(spec.kernel), "ur", 1.0))
        acc.add(part.mono.adjoint(), part.dropped)
    elif kind in (BlockKind.N, BlockKind.Nsigma, BlockKind.Ngt, BlockKind.Ntilde):
        acc.add(quadratic(mp, _number_weights(mp, kind, spec.sigma)))
    elif kind == BlockKind.PairOp:
        p = np.asarray(spec.p, dtype=np.int64)
        acc.add(pair_annihilator(mp, spec.sigma, lambda q: np.all(q == p, axis=-1).astype(float)))
    elif kind == BlockKind.BPhi:
        z = np.zeros(3) if spec.z is None else np.asarray(spec.z, dtype=float)
        kern = K.get(spec.kernel)

        def coef(q):
            return kern(q) * np.exp(1j * 2 * np.pi / L * (q @ z)) / L**3

        acc.add(pair_annihilator(mp, spec.sigma, coef))
    elif kind == BlockKind.IIB:
        acc.add(vanishing_contraction(mp, K))
    else:  # pragma: no cover - enum is exhaustive
        raise KeyError(f"unknown block kind {kind}")
    acc.mono = acc.mono.canonical()
    return acc


def vanishing_contraction(mp: ModeProfiles, K: Kernels) -> Monomials:
    """Two-operator remainder sum C(k4,k5) a_{k4,down} a_{k5,down} from the Q3 commutator.

    The four position integrals impose k4 = k2 + p and k5 = k2 + p; each
    Kronecker delta is kept as an explicit integer comparison, and the
    surviving coefficient carries v^r(k4) u^<(k5), so every entry vanishes.
    """
    m = mp.modes
    L = m.L
    vr, ult, u = mp.values("vr"), mp.values("u_lt"), mp.values("u")
    urv = mp.values("ur")
    wt = mp.values("vr") * mp.values("v")  # tilde omega^r
    up = m.of_spin(UP)
    dn = m.of_spin(DOWN)
    # A(p) = sum_{k1 - k3 = p} u^r(k1) tilde-omega^r(k3), spin up
    diffs = m.n[up][:, None, :] - m.n[up][None, :, :]
    amp = urv[up][:, None] * wt[up][None, :]
    pkeys = {}
    for d, a in zip(diffs.reshape(-1, 3).tolist(), amp.ravel().tolist()):
        if a != 0:
            pkeys[tuple(d)] = pkeys.get(tuple(d), 0.0) + a
    terms = []
    for i4 in dn:
        for i5 in dn:
            c = 0.0
            for p, a in pkeys.items():
                pv = np.array(p)
                for i2 in dn:
                    k = m.n[i2] + pv
                    if np.array_equal(k, m.n[i4]) and np.array_equal(k, m.n[i5]):
                        c += K.V(pv[None])[0] * K.phi(-pv[None])[0] * a * u[i2]
            c *= vr[i4] * ult[i5] / L**6
            if c != 0 and i4 != i5:
                terms.append(((), (int(i4), int(i5)), c))
    return Monomials.from_terms(terms)


def assemble_block(kind, basis: FockBasis, mp: ModeProfiles, K: Kernels, *,
                   max_closure_fraction: float = 1.0, backend=None, **params) -> SparseOp:
    """Sparse matrix of one block on ``basis``.

    ``params`` fill the BlockSpec payload (sigma, p, z, kernel, half).  A
    ClosureError is raised when the fraction of momentum terms dropped
    because a mode lies outside the set exceeds ``max_closure_fraction``.
    """
    spec = kind if isinstance(kind, BlockSpec) else BlockSpec.of(kind, **params)
    terms = block_terms(spec, mp, K)
    total = terms.kept + terms.dropped
    if total and terms.dropped / total > max_closure_fraction:
        raise ClosureError(f"{spec.kind.value}: {terms.dropped} of {total} terms leave the mode set")
    herm = spec.kind in HERMITIAN and not spec.half
    op = assemble(terms.mono, basis, name=spec.kind.value, hermitian=herm,
                  closure_dropped=terms.dropped, backend=backend)
    op.meta["spec"] = spec
    return op


HCORR_KINDS = (BlockKind.H0, BlockKind.X, BlockKind.Q1, BlockKind.Q2, BlockKind.Q3, BlockKind.Q4)


def correlation_hamiltonian(basis: FockBasis, mp: ModeProfiles, K: Kernels, *, backend=None,
                            pieces: bool = False):
    """H_corr = H0 + X + Q1 + Q2 + Q3 + Q4 (optionally also the separate blocks)."""
    parts = {k.value: block_terms(BlockSpec(k), mp, K) for k in HCORR_KINDS}
    mono = Monomials.empty()
    dropped = 0
    for t in parts.values():
        mono = mono + t.mono
        dropped += t.dropped
    op = assemble(mono.canonical(), basis, name="Hcorr", hermitian=True, closure_dropped=dropped,
                  backend=backend)
    if not pieces:
        return op
    ops = {k: assemble(t.mono, basis, name=k, hermitian=True, closure_dropped=t.dropped, backend=backend)
           for k, t in parts.items()}
    return op, ops
