"""Momentum-space assembly of quartic and quadratic operators.

A slot is a smeared field a^#_sigma(f_x) with f = u-type or v-bar-type.
Expanding in plane waves L^{-3/2} e^{ikx}, slot i contributes
e^{i c_i k_i . x} with c_i = (+1 for u-type, -1 for v-type), flipped by a
dagger.  Integrating V(x-y) against the x and y phases fixes total
momentum and evaluates the kernel at q = -sum_{x slots} c_i k_i, with an
overall factor L^{-3}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fock.monomials import Monomials
from .inputs import V_TYPE, ModeProfiles


@dataclass(frozen=True)
class Slot:
    dag: bool
    profile: str
    var: str  # "x" or "y"
    spin: int

    @property
    def phase(self) -> int:
        c = -1 if self.profile in V_TYPE else 1
        return -c if self.dag else c


def slots(spec: str, spins, profiles, dags=None) -> tuple[Slot, ...]:
    """Compact constructor: ``spec`` like 'xyyx' gives the variable per slot."""
    dags = dags if dags is not None else (True, True, False, False)
    return tuple(Slot(bool(d), p, v, int(s)) for d, p, v, s in zip(dags, profiles, spec, spins))


def quartic(mp: ModeProfiles, sl: tuple[Slot, ...], kernel, pref: float = 1.0, weight=None):
    """Monomials of pref * int V(x-y) prod_i a^#(f_i) over the mode set.

    ``kernel`` maps integer momentum vectors to Fourier coefficients;
    ``weight`` (optional) multiplies each term by a function of the four
    integer momenta.  Returns (Monomials, closure_dropped) where the second
    number counts non-zero terms whose last momentum is outside the mode set.
    """
    modes = mp.modes
    L = modes.L
    n = modes.n
    c = np.array([s.phase for s in sl])
    prof = [mp.values(s.profile) for s in sl]
    cand = [np.nonzero((prof[i] != 0) & (modes.spin == sl[i].spin))[0] for i in range(3)]
    if any(len(x) == 0 for x in cand):
        return Monomials.empty(), 0
    I = np.stack(np.meshgrid(*cand, indexing="ij"), axis=-1).reshape(-1, 3)
    tot = c[0] * n[I[:, 0]] + c[1] * n[I[:, 1]] + c[2] * n[I[:, 2]]
    n4 = -c[3] * tot
    i4 = modes.lookup(n4, np.full(len(n4), sl[3].spin))
    qx = np.zeros_like(tot)
    for i, s in enumerate(sl[:3]):
        if s.var == "x":
            qx -= c[i] * n[I[:, i]]
    if sl[3].var == "x":
        qx -= c[3] * n4
    base = pref / L**3 * kernel(qx) * prof[0][I[:, 0]] * prof[1][I[:, 1]] * prof[2][I[:, 2]]
    if weight is not None:
        ns = [n[I[:, 0]], n[I[:, 1]], n[I[:, 2]], n4]
        base = base * weight(*ns)
    miss = i4 < 0
    dropped = 0
    if np.any(miss & (base != 0)):
        sel = miss & (base != 0)
        off = mp.off_set(sl[3].profile, n4[sel], sl[3].spin)
        dropped = int(np.count_nonzero(off != 0)) if off is not None else int(np.count_nonzero(sel))
    ok = ~miss
    coef = base[ok] * prof[3][i4[ok]]
    idx = np.column_stack([I[ok], i4[ok]])
    nz = coef != 0
    mono = Monomials.from_slots(idx[nz], tuple(s.dag for s in sl), coef[nz])
    return mono, dropped


def quadratic(mp: ModeProfiles, weights: np.ndarray) -> Monomials:
    """sum_m w_m a*_m a_m."""
    idx = np.nonzero(np.asarray(weights) != 0)[0]
    return Monomials.from_terms([((int(m),), (int(m),), float(weights[m])) for m in idx])


def pair_annihilator(mp: ModeProfiles, sigma: int, coef_fn, first: str = "ur", second: str = "vr"):
    """sum_{k, p} coef_fn(p) first(k+p) second(k) a_{k+p} a_k on spin sigma.

    ``coef_fn`` receives integer vectors p and returns weights; used for the
    pair operators b_p and their position-resolved versions.
    """
    modes = mp.modes
    idx = modes.of_spin(sigma)
    f1 = mp.values(first)
    f2 = mp.values(second)
    a = idx[f1[idx] != 0]
    b = idx[f2[idx] != 0]
    if len(a) == 0 or len(b) == 0:
        return Monomials.empty()
    A, B = np.meshgrid(a, b, indexing="ij")
    A, B = A.ravel(), B.ravel()
    keep = A != B
    A, B = A[keep], B[keep]
    p = modes.n[A] - modes.n[B]
    coef = coef_fn(p) * f1[A] * f2[B]
    nz = coef != 0
    return Monomials.from_slots(np.column_stack([A[nz], B[nz]]), (False, False), coef[nz])
