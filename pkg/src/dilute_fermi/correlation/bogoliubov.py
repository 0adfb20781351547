"""The almost-bosonic Bogoliubov transformation T_lambda = exp(lambda G), G = B_c - B_c^*.

States are propagated with a Lanczos approximation of the exponential
(G is anti-Hermitian, so -iG is Hermitian); a dense scipy expm serves as
oracle on small bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..fock.basis import FockBasis, build_quasiparticle
from ..fock.ops import SparseOp, assemble
from .blocks import BlockKind, BlockSpec, block_terms
from .inputs import Kernels, ModeProfiles

DENSE_LIMIT = 2000


class GeneratorError(ValueError):
    pass


@dataclass
class BogoliubovResult:
    state: np.ndarray
    norm: float
    leakage: float
    steps: int
    method: str
    meta: dict = field(default_factory=dict)


def _matrix(op):
    return op.matrix if isinstance(op, SparseOp) else sp.csr_matrix(op)


def check_anti_hermitian(G, tol: float = 1e-12) -> float:
    m = _matrix(G)
    d = m + m.conj().T
    defect = float(abs(d).max()) if d.nnz else 0.0
    scale = float(abs(m).max()) if m.nnz else 1.0
    if defect > tol * max(scale, 1.0):
        raise GeneratorError(f"generator is not anti-Hermitian (defect {defect:.3e})")
    return defect


def _lanczos_step(A, v, t, m, tol):
    """exp(i t A) v for Hermitian A by an m-step Lanczos basis; returns (w, err_estimate)."""
    n = v.size
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy(), 0.0
    m = min(m, n)
    Q = np.zeros((n, m + 1), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    Q[:, 0] = v / beta0
    k = m
    for j in range(m):
        w = A @ Q[:, j]
        alpha[j] = np.vdot(Q[:, j], w).real
        w = w - alpha[j] * Q[:, j] - (beta[j - 1] * Q[:, j - 1] if j > 0 else 0)
        # full reorthogonalisation keeps the small basis accurate
        w = w - Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-14 * max(1.0, abs(alpha[j])):
            k = j + 1
            break
        Q[:, j + 1] = w / beta[j]
    T = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    ev, U = np.linalg.eigh(T)
    c = U @ (np.exp(1j * t * ev) * U[0].conj())
    err = abs(beta[k - 1] * c[k - 1]) if k == m else 0.0
    return beta0 * (Q[:, :k] @ c), err


def krylov_expm(G, v, t: float = 1.0, m: int = 30, tol: float = 1e-13, max_steps: int = 10000):
    """exp(t G) v for anti-Hermitian G with adaptive step subdivision."""
    A = -1j * _matrix(G)
    w = np.asarray(v, dtype=complex).copy()
    norm0 = np.linalg.norm(w)
    done, dt, steps = 0.0, float(t), 0
    while abs(done) < abs(t) - 1e-15:
        dt = min(dt, t - done) if t > 0 else max(dt, t - done)
        new, err = _lanczos_step(A, w, dt, m, tol)
        if err > tol * max(norm0, 1e-300) and abs(dt) > 1e-12:
            dt *= 0.5
            continue
        w = new
        nrm = np.linalg.norm(w)
        if nrm > 0:
            w *= norm0 / nrm  # renormalise: exact evolution is unitary
        done += dt
        steps += 1
        if steps > max_steps:
            raise RuntimeError("Krylov propagation did not finish")
        if err < 0.01 * tol * max(norm0, 1e-300):
            dt *= 2.0
    return w, steps


def dense_expm(G, v, t: float = 1.0):
    m = _matrix(G)
    if m.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense exponential limited to dimension {DENSE_LIMIT}")
    return sla.expm(t * m.toarray()) @ np.asarray(v, dtype=complex)


def generator(basis: FockBasis, mp: ModeProfiles, K: Kernels, kernel: str = "phi", backend=None) -> SparseOp:
    """B_c - B_c^* with B_c the pair-creating block ``BlockKind.B``."""
    t = block_terms(BlockSpec(BlockKind.B, kernel=kernel), mp, K)
    bc = t.mono
    mono = (bc + bc.adjoint().scaled(-1.0)).canonical()
    op = assemble(mono, basis, name="G", closure_dropped=t.dropped, backend=backend)
    return op


def trial_generator(basis: FockBasis, mp: ModeProfiles, K: Kernels, kernel: str = "phi", backend=None) -> SparseOp:
    """B - B^* with B = int phi(z-z') a(u^r_z) a(vbar^r_z) a(u^r_z') a(vbar^r_z') (pair-annihilating)."""
    G = generator(basis, mp, K, kernel, backend)
    return -1.0 * G


def bogoliubov_apply(G, state, lam: float = 1.0, method: str = "krylov", krylov_dim: int = 30,
                     tol: float = 1e-13, leakage_op: SparseOp | None = None, leakage_points: int = 5):
    """xi = exp(lam G) state; norm, truncation leakage and step count reported.

    ``leakage_op`` is G assembled from the working basis into a basis with a
    larger quasiparticle cap; the amplitude it sends outside the working
    basis, integrated over lambda, bounds the truncation error (Duhamel).
    """
    check_anti_hermitian(G)
    state = np.asarray(state, dtype=complex)
    if lam == 0.0:
        return BogoliubovResult(state.copy(), float(np.linalg.norm(state)), 0.0, 0, "identity")
    if method == "dense":
        out, steps = dense_expm(G, state, lam), 1
    elif method == "krylov":
        out, steps = krylov_expm(G, state, lam, krylov_dim, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    leak = 0.0
    if leakage_op is not None:
        leak = leakage(G, leakage_op, state, lam, leakage_points, krylov_dim, tol)
    return BogoliubovResult(out, float(np.linalg.norm(out)), leak, steps, method)


def leakage(G, G_ext: SparseOp, state, lam, points=5, krylov_dim=30, tol=1e-13) -> float:
    """int_0^lam ||(1 - P) G_ext xi_s|| ds by the trapezoid rule on ``points`` nodes."""
    inner = G_ext.basis
    outer = G_ext.out
    pos = outer.index(inner.states)
    mask = np.ones(outer.dim, dtype=bool)
    mask[pos] = False
    s = np.linspace(0.0, lam, points)
    vals = []
    xi = np.asarray(state, dtype=complex)
    prev = 0.0
    for si in s:
        if si > prev:
            xi, _ = krylov_expm(G, xi, si - prev, krylov_dim, tol)
            prev = si
        vals.append(np.linalg.norm((G_ext.matrix @ xi)[mask]))
    return float(np.trapezoid(vals, s) if hasattr(np, "trapezoid") else np.trapz(vals, s))


def extended_generator(basis: FockBasis, mp: ModeProfiles, K: Kernels, kernel="phi", backend=None,
                       sign: float = -1.0):
    """sign * (B_c - B_c^*) from ``basis`` into the basis with cap + 4 (for leakage estimates)."""
    cap = basis.params.get("cap")
    bal = basis.params.get("balanced", False)
    if cap is None:
        return None
    big = build_quasiparticle(basis.modes, cap + 4, bal, max_modes=64)
    t = block_terms(BlockSpec(BlockKind.B, kernel=kernel), mp, K)
    mono = (t.mono + t.mono.adjoint().scaled(-1.0)).canonical().scaled(sign)
    return assemble(mono, basis, basis_out=big, name="G_ext", backend=backend)


def spin_operator(basis: FockBasis) -> SparseOp:
    """S = sum_sigma s_sigma (particles - holes)_sigma with s = +1, -1 (R^* (N_up - N_down) R minus a constant)."""
    m = basis.modes
    w = np.where(m.inside, -1.0, 1.0) * np.where(m.spin == 0, 1.0, -1.0)
    occ = basis.occupations().astype(float)
    return SparseOp(sp.diags((occ @ w).astype(complex), format="csr"), basis, True, frozenset({0}), "S")
