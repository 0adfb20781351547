"""Normal-ordered operator monomials c_0^* c_1^* ... a_0 a_1 ... with complex weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WIDTH = 4


def _pad(rows, width=WIDTH):
    out = np.full((len(rows), width), -1, dtype=np.int32)
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


def _sort_rows(x: np.ndarray):
    """Sort each row's valid (>= 0) entries ascending.

    Returns the sorted rows, the permutation sign and a flag for repeated
    indices (which make the monomial vanish).
    """
    big = np.iinfo(np.int32).max
    y = np.where(x < 0, big, x)
    inv = np.zeros(len(x), dtype=np.int64)
    dup = np.zeros(len(x), dtype=bool)
    W = x.shape[1]
    for i in range(W):
        for j in range(i + 1, W):
            valid = (x[:, i] >= 0) & (x[:, j] >= 0)
            inv += (valid & (x[:, i] > x[:, j])).astype(np.int64)
            dup |= valid & (x[:, i] == x[:, j])
    y = np.sort(y, axis=1)
    y = np.where(y == big, -1, y).astype(np.int32)
    return y, np.where(inv % 2, -1.0, 1.0), dup


@dataclass
class Monomials:
    """sum_t coef[t] * (prod_q a^*_{cre[t,q]}) (prod_q a_{ann[t,q]}), padded with -1."""

    cre: np.ndarray
    ann: np.ndarray
    coef: np.ndarray

    def __post_init__(self):
        self.cre = np.asarray(self.cre, dtype=np.int32).reshape(-1, WIDTH)
        self.ann = np.asarray(self.ann, dtype=np.int32).reshape(-1, WIDTH)
        self.coef = np.asarray(self.coef, dtype=complex).ravel()

    def __len__(self):
        return len(self.coef)

    @classmethod
    def empty(cls) -> "Monomials":
        return cls(np.zeros((0, WIDTH)), np.zeros((0, WIDTH)), np.zeros(0))

    @classmethod
    def from_terms(cls, terms) -> "Monomials":
        """terms: iterable of (creators, annihilators, coef)."""
        terms = list(terms)
        if not terms:
            return cls.empty()
        return cls(_pad([t[0] for t in terms]), _pad([t[1] for t in terms]), [t[2] for t in terms])

    @classmethod
    def from_slots(cls, idx: np.ndarray, dag: tuple, coef: np.ndarray) -> "Monomials":
        """Products written in slot order; daggered slots must precede the rest."""
        dag = tuple(bool(d) for d in dag)
        n_cre = sum(dag)
        if dag != tuple([True] * n_cre + [False] * (len(dag) - n_cre)):
            raise ValueError("slot product is not normal ordered")
        idx = np.asarray(idx, dtype=np.int32).reshape(len(coef), len(dag))
        cre = np.full((len(coef), WIDTH), -1, dtype=np.int32)
        ann = np.full((len(coef), WIDTH), -1, dtype=np.int32)
        cre[:, :n_cre] = idx[:, :n_cre]
        ann[:, : len(dag) - n_cre] = idx[:, n_cre:]
        return cls(cre, ann, coef)

    def __add__(self, other: "Monomials") -> "Monomials":
        return Monomials(np.vstack([self.cre, other.cre]), np.vstack([self.ann, other.ann]),
                         np.concatenate([self.coef, other.coef]))

    def scaled(self, c) -> "Monomials":
        return Monomials(self.cre, self.ann, self.coef * c)

    def adjoint(self) -> "Monomials":
        # (c0* c1* a0 a1)^* = a1* a0* c1 c0
        def rev(x):
            out = np.full_like(x, -1)
            n = np.sum(x >= 0, axis=1)
            for i in range(len(x)):
                out[i, : n[i]] = x[i, : n[i]][::-1]
            return out

        return Monomials(rev(self.ann), rev(self.cre), np.conj(self.coef))

    def canonical(self, tol: float = 0.0) -> "Monomials":
        """Sort indices within each monomial, drop Pauli zeros, merge duplicates."""
        if len(self) == 0:
            return self
        cre, sc, dc = _sort_rows(self.cre)
        ann, sa, da = _sort_rows(self.ann)
        coef = self.coef * sc * sa
        keep = ~(dc | da)
        cre, ann, coef = cre[keep], ann[keep], coef[keep]
        if len(coef) == 0:
            return Monomials.empty()
        key = np.hstack([cre, ann])
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.ravel()
        re = np.bincount(inv, weights=coef.real, minlength=len(uniq))
        im = np.bincount(inv, weights=coef.imag, minlength=len(uniq))
        c = re + 1j * im
        scale = np.max(np.abs(c)) if c.size else 0.0
        nz = np.abs(c) > tol * scale if tol > 0 else c != 0
        return Monomials(uniq[nz, :WIDTH], uniq[nz, WIDTH:], c[nz])

    def hermitian_part(self) -> "Monomials":
        """self + self^*."""
        return (self + self.adjoint()).canonical()

    def qp_changes(self) -> frozenset:
        d = np.sum(self.cre >= 0, axis=1) - np.sum(self.ann >= 0, axis=1)
        return frozenset(int(x) for x in np.unique(d))
