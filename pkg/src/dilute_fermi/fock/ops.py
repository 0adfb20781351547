"""Sparse operators on a FockBasis and the monomial assembly backend."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _pure
from .basis import FockBasis
from .monomials import Monomials

try:  # compiled kernel, unless disabled through the environment
    if os.environ.get("DILUTE_FERMI_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _core as _compiled

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None
    BACKEND = "numpy"


def _kernel(backend: str | None):
    name = backend or BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available")
        return _compiled.apply_grouped
    if name == "numpy":
        return _pure.apply_grouped
    raise ValueError(f"unknown backend {name!r}")


def _ann_masks(ann: np.ndarray) -> np.ndarray:
    masks = np.zeros(len(ann), dtype=np.uint64)
    for q in range(ann.shape[1]):
        col = ann[:, q]
        ok = col >= 0
        masks[ok] |= np.uint64(1) << col[ok].astype(np.uint64)
    return masks


def assemble_triplets(mono: Monomials, basis_in: FockBasis, basis_out: FockBasis | None = None,
                      backend: str | None = None):
    """COO triplets (rows, cols, vals) and the count of terms leaving ``basis_out``."""
    basis_out = basis_out or basis_in
    if len(mono) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, complex), 0
    masks = _ann_masks(mono.ann)
    order = np.argsort(masks, kind="stable")
    masks = masks[order]
    cre = np.ascontiguousarray(mono.cre[order])
    ann = np.ascontiguousarray(mono.ann[order])
    coef = np.ascontiguousarray(mono.coef[order])
    umask, start = np.unique(masks, return_index=True)
    start = np.append(start, len(masks)).astype(np.int64)
    fn = _kernel(backend)
    return fn(np.ascontiguousarray(basis_in.states), np.ascontiguousarray(basis_out.states),
              np.ascontiguousarray(umask), start, cre, ann, coef)


@dataclass
class SparseOp:
    """CSR matrix between two bases with bookkeeping for truncation.

    ``dropped`` counts matrix elements that left the output basis;
    ``closure_dropped`` counts momentum-space terms whose modes were missing.
    """

    matrix: sp.csr_matrix
    basis: FockBasis
    hermitian: bool = False
    qp_change: frozenset = frozenset()
    name: str = ""
    dropped: int = 0
    closure_dropped: int = 0
    basis_out: FockBasis | None = None
    meta: dict = field(default_factory=dict)

    @property
    def out(self) -> FockBasis:
        return self.basis_out or self.basis

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, v):
        if isinstance(v, SparseOp):
            return SparseOp((self.matrix @ v.matrix).tocsr(), v.basis, name=f"{self.name}*{v.name}",
                            basis_out=self.out, dropped=self.dropped + v.dropped)
        return self.matrix @ v

    def matvec(self, v):
        return self.matrix @ v

    @property
    def H(self) -> "SparseOp":
        return SparseOp(self.matrix.conj().T.tocsr(), self.out, self.hermitian,
                        frozenset(-d for d in self.qp_change), self.name + "^*", self.dropped,
                        self.closure_dropped, self.basis if self.basis_out is not None else None)

    def _combine(self, other: "SparseOp", mat, name) -> "SparseOp":
        return SparseOp(mat.tocsr(), self.basis, self.hermitian and other.hermitian,
                        self.qp_change | other.qp_change, name, self.dropped + other.dropped,
                        self.closure_dropped + other.closure_dropped, self.basis_out)

    def __add__(self, other):
        return self._combine(other, self.matrix + other.matrix, f"{self.name}+{other.name}")

    def __sub__(self, other):
        return self._combine(other, self.matrix - other.matrix, f"{self.name}-{other.name}")

    def __mul__(self, c):
        return SparseOp((self.matrix * c).tocsr(), self.basis, self.hermitian and np.isreal(c),
                        self.qp_change, self.name, self.dropped, self.closure_dropped, self.basis_out)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def commutator(self, other: "SparseOp") -> "SparseOp":
        m = self.matrix @ other.matrix - other.matrix @ self.matrix
        return SparseOp(m.tocsr(), self.basis, False, frozenset(), f"[{self.name},{other.name}]",
                        self.dropped + other.dropped)

    def expectation(self, psi) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi))

    def toarray(self):
        return self.matrix.toarray()

    def fro(self) -> float:
        return float(sp.linalg.norm(self.matrix)) if self.matrix.nnz else 0.0

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_defect() <= tol * max(1.0, float(abs(self.matrix).max()) if self.matrix.nnz else 1.0)

    def qp_change_observed(self) -> frozenset:
        m = self.matrix.tocoo()
        if m.nnz == 0:
            return frozenset()
        nq_out = np.bitwise_count(self.out.states[m.row])
        nq_in = np.bitwise_count(self.basis.states[m.col])
        d = nq_out.astype(np.int64) - nq_in.astype(np.int64)
        return frozenset(int(x) for x in np.unique(d[np.abs(m.data) > 0]))


def assemble(mono: Monomials, basis: FockBasis, *, name: str = "", hermitian: bool = False,
             basis_out: FockBasis | None = None, closure_dropped: int = 0,
             backend: str | None = None) -> SparseOp:
    """Matrix of a monomial sum on ``basis`` (mapping into ``basis_out``)."""
    out = basis_out or basis
    r, c, v, dropped = assemble_triplets(mono, basis, out, backend)
    mat = sp.csr_matrix((v, (r, c)), shape=(out.dim, basis.dim), dtype=complex)
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return SparseOp(mat, basis, hermitian, mono.qp_changes(), name, int(dropped),
                    int(closure_dropped), basis_out)


def identity(basis: FockBasis) -> SparseOp:
    return SparseOp(sp.identity(basis.dim, dtype=complex, format="csr"), basis, True,
                    frozenset({0}), "1")


def annihilation(basis: FockBasis, mode: int, basis_out: FockBasis | None = None) -> SparseOp:
    """a_m with the Jordan-Wigner sign of the canonical mode order."""
    if not 0 <= mode < basis.modes.M:
        raise KeyError(f"unknown mode {mode}")
    return assemble(Monomials.from_terms([((), (mode,), 1.0)]), basis, name=f"a{mode}",
                    basis_out=basis_out)


def creation(basis: FockBasis, mode: int, basis_out: FockBasis | None = None) -> SparseOp:
    if not 0 <= mode < basis.modes.M:
        raise KeyError(f"unknown mode {mode}")
    return assemble(Monomials.from_terms([((mode,), (), 1.0)]), basis, name=f"a*{mode}",
                    basis_out=basis_out)


def number_operator(basis: FockBasis, weights=None) -> SparseOp:
    """Diagonal sum_m w_m a*_m a_m (w = 1 by default)."""
    M = basis.modes.M
    w = np.ones(M) if weights is None else np.asarray(weights, dtype=float)
    occ = basis.occupations().astype(float)
    diag = occ @ w
    return SparseOp(sp.diags(diag.astype(complex), format="csr"), basis, True, frozenset({0}), "N")
