"""Brute-force position-space oracle for block assembly.

Each block is written directly as an integral over x, y (and z, z') of
field operators a^#(f_x) built from Jordan-Wigner matrices on the full Fock
space of a small mode set.  Integrals are Riemann sums on an n^3 grid, which
are exact for the trigonometric polynomials involved as long as the total
frequency per variable stays below n: modes with components in {0, 1} and
kernels supported on {-1, 0, 1}^3 satisfy this for n = 4.  No momentum
conservation is used anywhere in this module.
"""

from __future__ import annotations

import itertools
import string

import numpy as np
import scipy.sparse as sp

from ..fock.modes import ModeSet
from .blocks import CONVENTIONS, BlockKind, BlockSpec

UP, DOWN = 0, 1
V_TYPE = {"v", "vr"}


def car_matrices(M: int):
    """Annihilators a_m on the 2^M Fock space indexed by occupation mask."""
    states = np.arange(2**M, dtype=np.int64)
    ops = []
    for m in range(M):
        occ = (states >> m) & 1
        src = states[occ == 1]
        dst = src ^ (1 << m)
        below = src & ((1 << m) - 1)
        sign = np.array([(-1) ** bin(int(b)).count("1") for b in below], dtype=float)
        ops.append(sp.csr_matrix((sign, (dst, src)), shape=(2**M, 2**M), dtype=complex))
    return ops


class PositionOracle:
    """Blocks by grid quadrature on the full Fock space of <= 10 modes.

    ``table`` holds per-mode profile values; ``Vt`` and ``phit`` are Fourier
    coefficient tables on small integer vectors.  ``mu`` gives the chemical
    potential per spin.
    """

    def __init__(self, modes: ModeSet, table: dict, Vt: dict, phit: dict, mu, grid: int = 4):
        if modes.M > 10:
            raise ValueError("oracle limited to 10 modes")
        self.modes = modes
        self.L = modes.L
        self.table = dict(table)
        self.table.setdefault("u", (~modes.inside).astype(float))
        self.table.setdefault("v", modes.inside.astype(float))
        self.Vt, self.phit = dict(Vt), dict(phit)
        self.mu = tuple(mu)
        g = np.arange(grid) * self.L / grid
        self.x = np.array(list(itertools.product(g, g, g)))
        self.h3 = (self.L / grid) ** 3
        self.a = car_matrices(modes.M)
        self.adag = [op.conj().T.tocsr() for op in self.a]
        self.dim = 2**modes.M
        self.k = 2 * np.pi / self.L * modes.n.astype(float)

    # ---- functions on the grid
    def _series(self, table, pts, deriv=None):
        out = np.zeros(len(pts), dtype=complex)
        for q, c in table.items():
            qv = 2 * np.pi / self.L * np.array(q, dtype=float)
            f = c * np.exp(1j * pts @ qv)
            if deriv is not None:
                f = f * 1j * qv[deriv]
            out += f
        return out / self.L**3

    def kernel(self, name: str, deriv=None) -> np.ndarray:
        """K(x - y) as a (G, G) matrix over grid points."""
        d = self.x[:, None, :] - self.x[None, :, :]
        flat = d.reshape(-1, 3)
        V = self._series(self.Vt, flat)
        phi = self._series(self.phit, flat, deriv)
        if name == "V":
            val = V
        elif name == "phi":
            val = phi
        elif name == "Vphi":
            val = V * phi
        elif name == "lap_phi":
            c2 = (2 * np.pi / self.L) ** 2
            val = self._series({q: -c2 * float(np.dot(q, q)) * c for q, c in self.phit.items()}, flat)
        elif name == "E":
            lap = self.kernel("lap_phi").reshape(-1)
            val = 2 * lap + V - V * phi
        else:
            raise KeyError(name)
        return val.reshape(len(self.x), len(self.x))

    def omega(self, sigma: int) -> np.ndarray:
        """omega_sigma(x - y) = L^{-3} sum_{k in ball} e^{ik(x-y)}."""
        m = self.modes
        idx = m.of_spin(sigma)
        idx = idx[m.inside[idx]]
        return self._series({tuple(m.n[i]): 1.0 for i in idx},
                            (self.x[:, None, :] - self.x[None, :, :]).reshape(-1, 3)).reshape(len(self.x), -1)

    # ---- smeared fields
    def field(self, profile: str, spin: int, dag: bool, deriv=None, points=None) -> np.ndarray:
        """Coefficients Phi[m, x] with a^#(f_x) = sum_m Phi[m, x] a^#_m."""
        pts = self.x if points is None else np.atleast_2d(points)
        f = np.asarray(self.table[profile], dtype=float) * (self.modes.spin == spin)
        sgn = -1.0 if profile in V_TYPE else 1.0
        if dag:
            sgn = -sgn
        ph = np.exp(1j * sgn * self.k @ pts.T) / self.L**1.5
        if deriv is not None:
            ph = ph * (1j * sgn * self.k[:, deriv])[:, None]
        return f[:, None] * ph

    def _product(self, W: np.ndarray, dags) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        nz = np.argwhere(np.abs(W) > 0)
        for idx in nz:
            mat = None
            for m, d in zip(idx, dags):
                op = self.adag[m] if d else self.a[m]
                mat = op if mat is None else mat @ op
            out = out + W[tuple(idx)] * mat
        return out.tocsr()

    def integral(self, K: np.ndarray, fields, pref: float = 1.0) -> sp.csr_matrix:
        """pref * sum_{x,y} h^6 K(x-y) prod_i a^#(f_i at x or y).

        ``fields`` is a list of (Phi, var, dag) in operator order.
        """
        letters = string.ascii_lowercase
        subs, arrs = [], []
        for i, (phi, var, _) in enumerate(fields):
            subs.append(letters[i] + ("X" if var == "x" else "Y"))
            arrs.append(phi)
        expr = "XY," + ",".join(subs) + "->" + letters[: len(fields)]
        W = pref * self.h3**2 * np.einsum(expr, K, *arrs, optimize=True)
        return self._product(W, [f[2] for f in fields])

    def integral1(self, fields, weight=None, pref=1.0) -> sp.csr_matrix:
        """pref * sum_x h^3 w(x) prod_i a^#(f_i at x)."""
        letters = string.ascii_lowercase
        w = np.ones(len(self.x)) if weight is None else weight
        subs = [letters[i] + "X" for i in range(len(fields))]
        expr = "X," + ",".join(subs) + "->" + letters[: len(fields)]
        W = pref * self.h3 * np.einsum(expr, w, *[f[0] for f in fields], optimize=True)
        return self._product(W, [f[2] for f in fields])

    # ---- shorthand for fields
    def c(self, prof, spin, var, deriv=None):
        return (self.field(prof, spin, True, deriv), var, True)

    def d(self, prof, spin, var, deriv=None):
        return (self.field(prof, spin, False, deriv), var, False)


def _pairs(tilde):
    return [(s, t) for s in (UP, DOWN) for t in (UP, DOWN) if not (tilde and s == t)]


def _hc(m):
    return m + m.conj().T


def oracle_block(o: PositionOracle, spec: BlockSpec) -> sp.csr_matrix:
    """Position-space version of one block."""
    kind = spec.kind
    tilde = kind.value.startswith("t")
    V = o.kernel("V")
    if kind == BlockKind.H0:
        out = 0
        for s in (UP, DOWN):
            for j in range(3):
                out = out + o.integral1([o.c("u", s, "x", j), o.d("u", s, "x", j)])
                out = out - o.integral1([o.c("v", s, "x", j), o.d("v", s, "x", j)])
            out = out - o.mu[s] * o.integral1([o.c("u", s, "x"), o.d("u", s, "x")])
            out = out + o.mu[s] * o.integral1([o.c("v", s, "x"), o.d("v", s, "x")])
        return out
    if kind == BlockKind.X:
        out = 0
        for s in (UP, DOWN):
            Vw = V * o.omega(s)
            out = out + o.integral(Vw, [o.c("u", s, "x"), o.d("u", s, "y")])
            out = out - o.integral(Vw, [o.c("v", s, "y"), o.d("v", s, "x")])
        return CONVENTIONS["X_sign"] * out
    if kind in (BlockKind.Q1, BlockKind.tQ1):
        return sum(o.integral(V, [o.c("u", s, "x"), o.c("u", t, "y"), o.d("u", t, "y"), o.d("u", s, "x")], 0.5)
                   for s, t in _pairs(tilde))
    if kind in (BlockKind.Q2, BlockKind.tQ2):
        out = 0
        for s, t in _pairs(tilde):
            out = out + o.integral(V, [o.c("u", s, "x"), o.c("v", s, "x"), o.d("v", t, "y"), o.d("u", t, "y")],
                                   CONVENTIONS["Q2_cross"])
            out = out + o.integral(V, [o.c("v", s, "x"), o.c("v", t, "y"), o.d("v", t, "y"), o.d("v", s, "x")], 0.5)
            out = out - o.integral(V, [o.c("u", s, "x"), o.c("v", t, "y"), o.d("v", t, "y"), o.d("u", s, "x")])
        return out

    def q3_first(prof):
        return sum(-o.integral(V, [o.c("u", s, "x"), o.c("u", t, "y"), o.c("v", s, "x"), o.d(prof, t, "y")])
                   for s, t in _pairs(tilde))

    def q3_second():
        return sum(o.integral(V, [o.c("u", s, "x"), o.c("v", t, "y"), o.c("v", s, "x"), o.d("v", t, "y")])
                   for s, t in _pairs(tilde))

    if kind in (BlockKind.Q3, BlockKind.tQ3):
        return _hc(q3_first("u") + q3_second())
    if kind == BlockKind.tQ3_1_lt:
        return _hc(q3_first("u_lt"))
    if kind == BlockKind.tQ3_1_gt:
        return _hc(q3_first("u_gt"))
    if kind == BlockKind.tQ3_2:
        return _hc(q3_second())
    if kind in (BlockKind.Q4, BlockKind.tQ4):
        return _hc(sum(o.integral(V, [o.c("u", s, "x"), o.c("u", t, "y"), o.c("v", t, "y"), o.c("v", s, "x")], 0.5)
                       for s, t in _pairs(tilde)))

    def pair(Kmat, first, pref=1.0, dx=None, dy=None):
        return o.integral(Kmat, [o.d(first, UP, "x"), o.d("vr", UP, "x", dx),
                                 o.d(first, DOWN, "y"), o.d("vr", DOWN, "y", dy)], pref)

    finish = (lambda m: m) if spec.half else _hc
    if kind == BlockKind.T1:
        return finish(pair(o.kernel("lap_phi"), "ur", 2.0))
    if kind == BlockKind.T2:
        return finish(pair(o.kernel("Vphi"), "u", -1.0))
    if kind == BlockKind.T2r:
        return finish(pair(o.kernel("Vphi"), "ur", -1.0))
    if kind == BlockKind.tQ4r:
        return finish(pair(V, "ur", 1.0))
    if kind == BlockKind.ScatteringSum:
        return finish(pair(o.kernel("E"), "ur", 1.0))
    if kind == BlockKind.Egen:
        # -2 p.(k2 - k4) phi^(p) = 2 sum_j [d_j phi * d_j vbar_x - d_j phi * d_j vbar_y]
        out = 0
        for j in range(3):
            Kj = o.kernel(spec.kernel, deriv=j)
            out = out + pair(Kj, "ur", 2.0, dx=j) - pair(Kj, "ur", 2.0, dy=j)
        return finish(out)
    if kind == BlockKind.B:
        return pair(o.kernel(spec.kernel), "ur").conj().T.tocsr()
    if kind in (BlockKind.N, BlockKind.Nsigma, BlockKind.Ngt, BlockKind.Ntilde):
        prof = {BlockKind.N: "one", BlockKind.Nsigma: "one", BlockKind.Ngt: "gt", BlockKind.Ntilde: "tilde"}[kind]
        o.table.setdefault("one", np.ones(o.modes.M))
        spins = [spec.sigma] if kind == BlockKind.Nsigma else [UP, DOWN]
        return sum(o.integral1([o.c(prof, s, "x"), o.d(prof, s, "x")]) for s in spins)
    if kind == BlockKind.PairOp:
        p = 2 * np.pi / o.L * np.asarray(spec.p, dtype=float)
        w = np.exp(-1j * o.x @ p)
        return o.integral1([o.d("ur", spec.sigma, "x"), o.d("vr", spec.sigma, "x")], w)
    if kind == BlockKind.BPhi:
        z = np.zeros(3) if spec.z is None else np.asarray(spec.z, dtype=float)
        tab = o.phit if spec.kernel == "phi" else o.Vt
        w = o._series(tab, o.x - z)
        return o.integral1([o.d("ur", spec.sigma, "x"), o.d("vr", spec.sigma, "x")], w)
    if kind == BlockKind.IIB:
        return _oracle_iib(o)
    raise KeyError(kind)


def _oracle_iib(o: PositionOracle) -> sp.csr_matrix:
    """int V(x-y) phi(z-z') u^r(z;x) u(z';y) w(x;z) a_dn(vbar^r_z') a_dn(u^<_y)."""
    m = o.modes
    d = (o.x[:, None, :] - o.x[None, :, :]).reshape(-1, 3)
    G = len(o.x)

    def op_kernel(prof, spin):
        f = np.asarray(o.table[prof]) * (m.spin == spin)
        tab = {tuple(m.n[i]): f[i] for i in range(m.M) if f[i] != 0}
        return o._series(tab, d).reshape(G, G)

    ur_up = op_kernel("ur", UP)          # u^r(z;x) as [z, x]
    u_dn = op_kernel("u", DOWN)           # u(z';y) as [z', y]
    wt = dict(o.table)
    wt["wt"] = np.asarray(o.table["vr"]) * np.asarray(o.table["v"])
    o.table = wt
    w_up = op_kernel("wt", UP)            # w(x;z) as [x, z]
    V = o.kernel("V")                     # [x, y]
    phi = o.kernel("phi")                 # [z, z']
    h3 = o.h3
    # sum_x V[x,y] ur[z,x] w[x,z] -> H[y,z]
    H = np.einsum("xy,zx,xz->yz", V, ur_up, w_up) * h3
    J = np.einsum("yz,zw->yw", H, phi) * h3          # [y, z']
    C = J * u_dn.T                                    # u(z';y) -> [y, z']
    f4 = o.field("vr", DOWN, False)                   # [m, z']
    f5 = o.field("u_lt", DOWN, False)                 # [m, y]
    W = np.einsum("yw,aw,by->ab", C, f4, f5) * h3 * h3
    return o._product(W, (False, False))
