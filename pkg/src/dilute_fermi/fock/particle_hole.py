"""Explicit particle-hole transformation R for small mode sets.

R|n> = prod_{m ascending, n_m = 1} c^#_m |Fermi sea>, where c^# is the
creation operator outside the ball and the annihilation operator inside.
Then R^* c_m R is a_m outside the ball and a^*_m inside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import BasisError, FockBasis


def _map_state(n: int, sea: int, inside_mask: int, M: int) -> tuple[int, int]:
    s = sea
    sign = 1
    for m in range(M - 1, -1, -1):
        bit = 1 << m
        if not n & bit:
            continue
        if bin(s & (bit - 1)).count("1") & 1:
            sign = -sign
        if inside_mask & bit:
            s &= ~bit
        else:
            s |= bit
    return s, sign


@dataclass
class ParticleHole:
    """R as a signed permutation from a quasiparticle basis into a physical one."""

    quasi: FockBasis
    physical: FockBasis
    matrix: sp.csr_matrix

    def to_physical(self, psi_q):
        return self.matrix @ psi_q

    def to_quasi(self, psi_p):
        return self.matrix.T @ psi_p

    def conjugate(self, H_phys) -> sp.csr_matrix:
        """R^* H R for a physical-frame matrix (or SparseOp)."""
        m = getattr(H_phys, "matrix", H_phys)
        return (self.matrix.T @ m @ self.matrix).tocsr()

    def vacuum_image(self):
        return self.to_physical(self.quasi.vacuum())


def particle_hole(basis_physical: FockBasis, basis_quasi: FockBasis) -> ParticleHole:
    """Build R; every quasiparticle state must land in the physical basis."""
    modes = basis_quasi.modes
    if basis_physical.modes is not modes and basis_physical.modes.describe() != modes.describe():
        raise BasisError("physical and quasiparticle bases use different mode sets")
    sea = modes.fermi_sea_mask()
    inside = sea
    M = modes.M
    targets = np.empty(basis_quasi.dim, dtype=np.uint64)
    signs = np.empty(basis_quasi.dim)
    for j, n in enumerate(basis_quasi.states.tolist()):
        s, sg = _map_state(int(n), sea, inside, M)
        targets[j] = s
        signs[j] = sg
    rows = basis_physical.index(targets)
    if np.any(rows < 0):
        raise BasisError("particle numbers do not match: some images leave the physical basis")
    mat = sp.csr_matrix((signs.astype(complex), (rows, np.arange(basis_quasi.dim))),
                        shape=(basis_physical.dim, basis_quasi.dim))
    return ParticleHole(basis_quasi, basis_physical, mat)
