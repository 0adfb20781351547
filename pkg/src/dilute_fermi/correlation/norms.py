"""Exact norms of pair annihilators and the lattice-scale b(K_z) operators.

A pair annihilator b = (1/2) sum A_ij a_i a_j (A antisymmetric) is brought
to the form sum_k s_k c_{2k-1} c_{2k} by a Youla decomposition of A.  The
pair operators c_{2k-1} c_{2k} commute and act like hard-core boson
lowering operators, so ||b|| is the norm of sum_k s_k sigma^-_k on 2^r
states, r the number of non-zero s_k.  For b(K_z) the coefficient matrix is
bipartite (u^r modes times v^r modes) and s_k are its singular values,
obtained from the small Gram matrix over the v^r modes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..fock.monomials import Monomials

PAIR_RANK_LIMIT = 22


def _lowering(r: int):
    """(row, col, site) triplets of the single-site lowering maps on r-bit strings."""
    states = np.arange(1 << r, dtype=np.int64)
    rows, cols, ks = [], [], []
    for k in range(r):
        occ = (states >> k) & 1
        src = states[occ == 1]
        rows.append(src ^ (1 << k))
        cols.append(src)
        ks.append(np.full(src.size, k))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(ks)


def pair_space_norm(s, tol: float = 1e-12) -> float:
    """|| sum_k s_k sigma^-_k || for commuting hard-core lowering operators.

    Shell symmetry makes the s_k degenerate, which stalls power iteration,
    so the top eigenvalue of b^* b is taken from a direct eigensolver.
    """
    s = np.sort(np.abs(np.asarray(s, dtype=float)))[::-1]
    if s.size == 0 or s[0] == 0:
        return 0.0
    s = s[s > 1e-14 * s[0]]
    r = s.size
    if r == 1:
        return float(s[0])
    if r > PAIR_RANK_LIMIT:
        raise ValueError(f"pair rank {r} exceeds {PAIR_RANK_LIMIT}")
    rows, cols, ks = _lowering(r)
    m = sp.csr_matrix((s[ks], (rows, cols)), shape=(1 << r, 1 << r))
    h = (m.T @ m).tocsr()
    if r <= 12:
        top = np.linalg.eigvalsh(h.toarray())[-1]
    else:
        top = spla.eigsh(h, k=1, which="LA", tol=tol, return_eigenvectors=False)[0]
    return float(np.sqrt(max(top, 0.0)))


def youla_values(A: np.ndarray) -> np.ndarray:
    """Block values s_k of an antisymmetric matrix (singular values come in equal pairs)."""
    sv = np.linalg.svd(A, compute_uv=False)
    return sv[::2]


def pair_norm(mono: Monomials) -> float:
    """Exact norm of sum_t c_t a_i a_j (two annihilators per term)."""
    if len(mono) == 0:
        return 0.0
    if np.any(mono.cre >= 0) or np.any(mono.ann[:, 2:] >= 0):
        raise ValueError("not a pair annihilator")
    i, j = mono.ann[:, 0], mono.ann[:, 1]
    used, inv = np.unique(np.concatenate([i, j]), return_inverse=True)
    pi, pj = inv[: len(i)], inv[len(i):]
    A = np.zeros((len(used), len(used)), dtype=complex)
    np.add.at(A, (pi, pj), mono.coef)
    np.add.at(A, (pj, pi), -mono.coef)
    return pair_space_norm(youla_values(A))


def bipartite_norm(C: np.ndarray) -> float:
    """Norm of sum_ij C_ij a_i a'_j with disjoint mode sets."""
    return pair_space_norm(np.linalg.svd(np.atleast_2d(C), compute_uv=False))


def gram_norm(G: np.ndarray) -> float:
    """Same as bipartite_norm from the Gram matrix C^* C."""
    ev = np.clip(np.linalg.eigvalsh((G + G.conj().T) / 2), 0.0, None)
    return pair_space_norm(np.sqrt(ev))


def _shell_vectors(nmax: int):
    """Integer vectors with |n| <= nmax, yielded one x-slice at a time."""
    r = np.arange(-nmax, nmax + 1)
    Y, Z = np.meshgrid(r, r, indexing="ij")
    Y, Z = Y.ravel(), Z.ravel()
    for x in r:
        keep = x * x + Y * Y + Z * Z <= nmax * nmax
        yield np.column_stack([np.full(np.count_nonzero(keep), x), Y[keep], Z[keep]])


def b_gram(L: float, vr_vecs: np.ndarray, vr_vals: np.ndarray, ur_n2, coeff_n2, nmax: int,
           z=None) -> np.ndarray:
    """C^* C for C[q, k] = L^-3 K^(q - k) e^{i(q-k)z} u^r(q) v^r(k), q over |q| <= nmax.

    ``ur_n2`` and ``coeff_n2`` map integer |n|^2 arrays to profile values and
    kernel coefficients (the kernels here are radial).
    """
    k = np.asarray(vr_vecs, dtype=np.int64)
    r = len(k)
    G = np.zeros((r, r), dtype=complex)
    zz = None if z is None else np.asarray(z, dtype=float) * 2 * np.pi / L
    for q in _shell_vectors(nmax):
        u = ur_n2(np.sum(q * q, axis=1))
        sel = u != 0
        if not np.any(sel):
            continue
        q, u = q[sel], u[sel]
        d = q[:, None, :] - k[None, :, :]
        Phi = coeff_n2(np.sum(d * d, axis=2)) * u[:, None]
        if zz is not None:
            Phi = Phi * np.exp(1j * (d @ zz))
        G += Phi.conj().T @ Phi
    v = np.asarray(vr_vals, dtype=float)
    return G * np.outer(v, v) / L**6


def b_norm(config, profiles, coeff_n2, sigma: int = 0, z=None) -> dict:
    """||b_sigma(K_z)|| over the full u^r support of a closed-shell configuration."""
    sp_ = profiles.spin(sigma)
    ball = config.ball(sigma)
    n = ball.vectors()
    vr = sp_.vr(np.sum(n * n, axis=1))
    n, vr = n[vr > 0], vr[vr > 0]
    kmax = 2.0 * sp_.high
    nmax = int(np.ceil(kmax * config.L / (2 * np.pi)))
    G = b_gram(config.L, n, vr, sp_.ur, coeff_n2, nmax, z)
    return {"norm": gram_norm(G), "rank": len(n), "nmax": nmax}
