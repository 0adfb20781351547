"""Trial energy in the one-hole pair sector, without a mode budget.

When each spin's v^r is supported on the single mode k = 0 (closed shell
|n|^2 <= 1), the pair-creating operator maps the vacuum to

    B^* Omega = sum_p c_p |p>,   c_p = phi^(p) u^r_up(p) u^r_down(p) v^r_up(0) v^r_down(0) / L^3,

where |p> has particles at p (up) and -p (down) and both holes at 0.  B^*
cannot act twice (there is one hole per spin) and B B^* Omega = |c|^2 Omega,
so the trial transformation is a rotation in span{Omega, c}:

    exp(lam G) Omega = cos(t) Omega - sin(t) c/|c|,   t = lam |c|.

In this sector H0, X and Q2 are diagonal, Q1 is the convolution with V^,
Q4 couples to the vacuum through V^(p) and Q3 vanishes.  Kernels must be
radial; they are passed as functions of the integer |n|^2.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.fft as sfft

from .blocks import CONVENTIONS

DIRECT_LIMIT = 4000


class SectorError(ValueError):
    pass


def radial_table(fn, L: float, n2max: int) -> np.ndarray:
    """fn(|k|) at k = 2 pi sqrt(n2)/L for n2 = 0..n2max, as a lookup array."""
    p = 2 * np.pi / L * np.sqrt(np.arange(n2max + 1, dtype=float))
    return np.asarray(fn(p), dtype=float)


@dataclass
class SectorReport:
    L: float
    modes: int
    theta: float
    pieces: dict
    correlation: float
    method: str

    def as_dict(self) -> dict:
        return asdict(self)


def sector_support(config, profiles, shell_max_n2: int | None = None):
    """Integer vectors p with u^r(p) > 0 for both spins, and nmax."""
    up, dn = profiles.spin(0), profiles.spin(1)
    for sigma in (0, 1):
        ball = config.ball(sigma)
        n = ball.vectors()
        vr = profiles.spin(sigma).vr(np.sum(n * n, axis=1))
        if not (np.count_nonzero(vr) == 1 and vr[np.all(n == 0, axis=1)][0] > 0):
            raise SectorError("every spin needs v^r supported on k = 0 alone")
    kmax = 2.0 * max(up.high, dn.high)
    nmax = int(np.ceil(kmax * config.L / (2 * np.pi)))
    if shell_max_n2 is not None:
        nmax = min(nmax, int(np.floor(np.sqrt(shell_max_n2))))
    r = np.arange(-nmax, nmax + 1)
    n2 = r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
    w = up.ur(n2) * dn.ur(n2)
    if shell_max_n2 is not None:
        w = np.where(n2 <= shell_max_n2, w, 0.0)
    return w, n2, nmax


def _convolution_form(c: np.ndarray, Vtab: np.ndarray, nmax: int) -> float:
    """sum_{p, p'} c(p) c(p') V(|p - p'|^2) for c on the cube [-nmax, nmax]^3."""
    N = sfft.next_fast_len(4 * nmax + 1, real=True)
    r = np.arange(N)
    r = np.where(r <= N // 2, r, r - N) ** 2
    d2 = r[:, None, None] + r[None, :, None] + r[None, None, :]
    kern = np.where(d2 <= 12 * nmax * nmax, Vtab[np.minimum(d2, len(Vtab) - 1)], 0.0)
    pad = np.zeros((N, N, N))
    m = 2 * nmax + 1
    pad[:m, :m, :m] = c
    conv = sfft.irfftn(sfft.rfftn(pad) * sfft.rfftn(kern), s=(N, N, N))[:m, :m, :m]
    return float(np.sum(c * conv))


def _direct_form(c: np.ndarray, Vtab: np.ndarray, nmax: int) -> float:
    idx = np.argwhere(c != 0)
    vals = c[tuple(idx.T)]
    total = 0.0
    for s in range(0, len(idx), 512):
        d = idx[s:s + 512, None, :] - idx[None, :, :]
        total += float(vals[s:s + 512] @ Vtab[np.sum(d * d, axis=2)] @ vals)
    return total


def sector_energy(config, profiles, V_n2, phi_n2, lam: float = 1.0, shell_max_n2: int | None = None,
                  method: str = "auto") -> SectorReport:
    """Pieces of <T Omega, H_corr T Omega> in the one-hole pair sector.

    ``V_n2`` and ``phi_n2`` map integer |n|^2 arrays to Fourier coefficients.
    """
    L = config.L
    c2 = (2 * np.pi / L) ** 2
    w, n2, nmax = sector_support(config, profiles, shell_max_n2)
    vr0 = profiles.spin(0).vr(0) * profiles.spin(1).vr(0)
    c = phi_n2(n2) * w * vr0 / L**3
    norm = float(np.sqrt(np.sum(c * c)))
    U = int(np.count_nonzero(c))
    if norm == 0.0:
        z = {k: 0.0 for k in ("H0", "X", "Q1", "Q2", "Q3", "Q4")}
        return SectorReport(L, U, 0.0, z, 0.0, "empty")
    ch = c / norm
    theta = lam * norm
    s, co = np.sin(theta), np.cos(theta)

    V0 = float(V_n2(np.array(0)))
    Vp = V_n2(n2)
    # diagonal energies of |p>
    e = np.zeros_like(c)
    for sigma in (0, 1):
        mu = config.ball(sigma).mu
        e += np.abs(c2 * n2 - mu) + abs(0.0 - mu)
    X = np.zeros_like(c)
    for sigma in (0, 1):
        ball = config.ball(sigma).vectors()
        W0 = float(np.sum(V_n2(np.sum(ball * ball, axis=1)))) / L**3
        Wp = np.zeros_like(c)
        r = np.arange(-nmax, nmax + 1)
        for b in ball:
            d2 = ((r - b[0])[:, None, None] ** 2 + (r - b[1])[None, :, None] ** 2
                  + (r - b[2])[None, None, :] ** 2)
            Wp += V_n2(d2)
        Wp /= L**3
        X += CONVENTIONS["X_sign"] * (Wp - W0)
    Q2 = (2.0 * CONVENTIONS["Q2_cross"] * Vp - 3.0 * V0) / L**3

    if method == "auto":
        method = "direct" if U <= DIRECT_LIMIT else "fft"
    Vtab = V_n2(np.arange(12 * nmax * nmax + 1))
    if method == "direct":
        q1 = _direct_form(ch, Vtab, nmax)
    elif method == "fft":
        q1 = _convolution_form(ch, Vtab, nmax)
    else:
        raise ValueError(f"unknown method {method!r}")
    pieces = {
        "H0": s * s * float(np.sum(ch * ch * e)),
        "X": s * s * float(np.sum(ch * ch * X)),
        "Q1": s * s * q1 / L**3,
        "Q2": s * s * float(np.sum(ch * ch * Q2)),
        "Q3": 0.0,
        "Q4": -2.0 * s * co * float(np.sum(ch * Vp)) / L**3,
    }
    return SectorReport(L, U, theta, pieces, sum(pieces.values()), method)
