"""The physical N-body Hamiltonian restricted to a mode set (Galerkin truncation)."""

from __future__ import annotations

import numpy as np

from .basis import FockBasis
from .modes import ModeSet
from .monomials import Monomials
from .ops import SparseOp, assemble


def physical_monomials(modes: ModeSet, vhat) -> Monomials:
    """sum |k|^2 c*c + (1/2L^3) sum V^(q) c*_{k+q,s} c*_{k'-q,s'} c_{k',s'} c_{k,s}.

    ``vhat`` maps integer vectors (..., 3) to V^ at 2 pi n / L.  Terms whose
    modes are not all in the set are dropped.
    """
    M, L = modes.M, modes.L
    kin = (2 * np.pi / L) ** 2 * modes.n2
    terms = Monomials(np.c_[np.arange(M), -np.ones((M, 3))], np.c_[np.arange(M), -np.ones((M, 3))], kin)
    i, j, l = np.meshgrid(np.arange(M), np.arange(M), np.arange(M), indexing="ij")
    i, j, l = i.ravel(), j.ravel(), l.ravel()
    same = modes.spin[l] == modes.spin[i]
    i, j, l = i[same], j[same], l[same]
    q = modes.n[l] - modes.n[i]
    m = modes.lookup(modes.n[j] - q, modes.spin[j])
    ok = m >= 0
    i, j, l, m, q = i[ok], j[ok], l[ok], m[ok], q[ok]
    coef = 0.5 / L**3 * vhat(q)
    idx = np.stack([l, m, j, i], axis=1)
    return terms + Monomials.from_slots(idx, (True, True, False, False), coef)


def physical_hamiltonian(basis: FockBasis, vhat, backend=None) -> SparseOp:
    mono = physical_monomials(basis.modes, vhat).canonical()
    return assemble(mono, basis, name="H", hermitian=True, backend=backend)
