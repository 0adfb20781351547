"""Localized scattering kernel, renormalized interaction and torus periodization.

phi_inf = phi0 * chi(rho^{1/3} r) with chi = 1 inside rho^{-1/3} and 0 beyond
2 rho^{-1/3}.  Where chi varies phi0 = a/r exactly, which gives the
renormalized interaction E = 4 grad(phi0).grad(chi) + 2 phi0 Lap(chi) in
closed form (with the sign fixed so that 2 Lap(phi_inf) + V(1 - phi_inf) = E).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import expit

from .scattering import (
    GridConfig,
    RadialPotential,
    ScatteringSolution,
    gauss_panels,
    radial_transform,
    solve_zero_energy,
)


class KernelError(ValueError):
    pass


# ---------------------------------------------------------------- cutoff chi


def _exp_falloff(s, order):
    """Falloff psi(s) and its derivatives: psi = 1 for s <= 0, 0 for s >= 1.

    psi = expit(y) with y = 1/s - 1/(1-s), i.e. exp(-1/(1-s)) normalised
    against exp(-1/s).
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros((order + 1,) + s.shape)
    out[0] = np.where(s <= 0.0, 1.0, 0.0)
    inner = (s > 0.0) & (s < 1.0)
    if not np.any(inner):
        return out
    t = s[inner]
    # psi = sigma(y) with y = 1/s - 1/(1-s)
    y1 = -1.0 / t**2 - 1.0 / (1.0 - t) ** 2
    y2 = 2.0 / t**3 - 2.0 / (1.0 - t) ** 3
    y3 = -6.0 / t**4 - 6.0 / (1.0 - t) ** 4
    y = 1.0 / t - 1.0 / (1.0 - t)
    sg = expit(y)
    s1 = sg * expit(-y)
    s2 = s1 * (1.0 - 2.0 * sg)
    s3 = s1 * (1.0 - 6.0 * sg + 6.0 * sg**2)
    vals = [sg, s1 * y1, s2 * y1**2 + s1 * y2, s3 * y1**3 + 3 * s2 * y1 * y2 + s1 * y3]
    for n in range(order + 1):
        out[n][inner] = vals[n]
    return out


def _poly_falloff_factory(n: int):
    # C^n smoothstep S of degree 2n+1; psi = 1 - S
    coeffs = np.zeros(2 * n + 2)
    for k in range(n + 1):
        coeffs[n + 1 + k] = comb(n + k, k) * comb(2 * n + 1, n - k) * (-1) ** k
    S = Polynomial(coeffs)
    psi = 1 - S
    ders = [psi, psi.deriv(1), psi.deriv(2), psi.deriv(3)]

    def falloff(s, order):
        s = np.asarray(s, dtype=float)
        out = np.zeros((order + 1,) + s.shape)
        out[0] = np.where(s <= 0.0, 1.0, 0.0)
        inner = (s > 0.0) & (s < 1.0)
        for m in range(order + 1):
            out[m][inner] = ders[m](s[inner])
        # the expanded polynomial loses a few ulps near s = 1
        out[0] = np.clip(out[0], 0.0, 1.0)
        return out

    return falloff


@dataclass(frozen=True)
class CutoffChi:
    """chi(r) = psi(r rho^{1/3} - 1) with psi a smooth falloff on [0, 1].

    ``rho=None`` gives the trivial cutoff chi = 1.
    """

    rho: float | None
    profile: str = "exp"
    order: int | None = None

    @property
    def smoothness(self) -> float:
        return float("inf") if self.profile == "exp" else float(self.order)

    @property
    def inner_radius(self) -> float:
        return np.inf if self.rho is None else self.rho ** (-1.0 / 3.0)

    def derivatives(self, r, order: int = 2):
        """chi and its radial derivatives up to ``order`` (<= 3)."""
        r = np.asarray(r, dtype=float)
        if self.rho is None:
            out = np.zeros((order + 1,) + r.shape)
            out[0] = 1.0
            return out
        c = self.rho ** (1.0 / 3.0)
        fall = _exp_falloff if self.profile == "exp" else _poly_falloff_factory(self.order)
        out = fall(r * c - 1.0, order)
        for n in range(1, order + 1):
            out[n] *= c**n
        return out

    def __call__(self, r):
        return self.derivatives(r, 0)[0]

    def gradient(self, r):
        return self.derivatives(r, 1)[1]

    def laplacian(self, r):
        r = np.asarray(r, dtype=float)
        d = self.derivatives(r, 2)
        rr = np.where(r == 0.0, 1.0, r)
        return np.where(r == 0.0, 3.0 * d[2], d[2] + 2.0 * d[1] / rr)


def make_chi(rho: float, profile: str | int = "exp") -> CutoffChi:
    """Cutoff at density rho; ``profile`` is "exp" (C-infinity) or an integer order >= 4."""
    if rho is None or rho <= 0:
        raise KernelError("density must be positive")
    if profile == "exp":
        return CutoffChi(float(rho), "exp", None)
    order = int(profile)
    if order < 4:
        raise KernelError("cutoff profile needs at least 4 continuous derivatives")
    return CutoffChi(float(rho), "poly", order)


# ------------------------------------------------------------- localization


def _radial_hessian_norm(f1, f2, r):
    return np.sqrt(f2**2 + 2.0 * (f1 / r) ** 2)


def _radial_third_norm(f1, f2, f3, r):
    g = f2 / r - f1 / r**2
    return np.sqrt(f3**2 + 6.0 * g**2)


@dataclass
class LocalizedKernel:
    sol: ScatteringSolution
    chi: CutoffChi
    r: np.ndarray = field(repr=False)
    phi_grid: np.ndarray = field(repr=False)
    E_grid: np.ndarray = field(repr=False)

    @property
    def rho(self):
        return self.chi.rho

    @property
    def a(self) -> float:
        return self.sol.a

    @property
    def potential(self) -> RadialPotential:
        return self.sol.potential

    @property
    def support_radius(self) -> float:
        return 2.0 * self.chi.inner_radius

    def derivatives(self, r, order: int = 2):
        """phi_inf and its radial derivatives by the product rule."""
        r = np.asarray(r, dtype=float)
        p = self.sol.derivatives(r, order).reshape((order + 1,) + r.shape)
        c = self.chi.derivatives(r, order)
        out = np.zeros_like(p)
        binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]
        for n in range(order + 1):
            for j in range(n + 1):
                out[n] += binom[n][j] * p[j] * c[n - j]
        return out

    def phi(self, r):
        return self.derivatives(r, 0)[0]

    def laplacian(self, r):
        r = np.asarray(r, dtype=float)
        d = self.derivatives(r, 2)
        rr = np.where(r == 0.0, 1.0, r)
        return np.where(r == 0.0, 3.0 * d[2], d[2] + 2.0 * d[1] / rr)

    def E(self, r):
        """Renormalized interaction 4 grad(phi0).grad(chi) + 2 phi0 Lap(chi).

        Uses phi0 = a/r on the support of grad chi.  This sign makes
        2 Lap(phi_inf) + V (1 - phi_inf) = E hold and gives int E = 8 pi a.
        """
        r = np.asarray(r, dtype=float)
        if self.chi.rho is None:
            return np.zeros_like(r)
        c = self.chi.derivatives(r, 2)
        rr = np.where(r == 0.0, 1.0, r)
        lap_chi = c[2] + 2.0 * c[1] / rr
        val = 4.0 * (-self.a / rr**2) * c[1] + 2.0 * (self.a / rr) * lap_chi
        return np.where(c[1] != 0.0, val, 0.0)

    def E_derivatives(self, r, order: int = 2):
        """E and its first two radial derivatives by central differences."""
        r = np.asarray(r, dtype=float)
        h = 1e-4 * max(1.0, self.chi.inner_radius)
        vals = [self.E(r)]
        if order >= 1:
            vals.append((self.E(r + h) - self.E(r - h)) / (2 * h))
        if order >= 2:
            vals.append((self.E(r + h) - 2 * vals[0] + self.E(r - h)) / h**2)
        return np.array(vals)

    # ---- quadrature
    def nodes(self, pmax: float = 0.0, order: int = 24, skip_plateau: bool = False):
        """Composite Gauss-Legendre nodes adapted to the breakpoints and oscillation."""
        R0 = self.sol.R0
        breaks = [0.0, R0]
        if self.chi.rho is not None:
            breaks += [self.chi.inner_radius, self.support_radius]
        else:
            breaks += [self.sol.r[-1]]
        width_osc = 2.0 * np.pi / pmax if pmax > 0 else np.inf
        xs, ws = [], []
        for i, (lo, hi) in enumerate(zip(breaks[:-1], breaks[1:])):
            if hi <= lo or (skip_plateau and i == 1):
                continue
            width = min(width_osc, R0 / 8.0 if i == 0 else max(R0, (hi - lo) / 16.0))
            panels = max(1, int(np.ceil((hi - lo) / width)))
            x, w = gauss_panels(lo, hi, panels, order)
            xs.append(x)
            ws.append(w)
        return np.concatenate(xs), np.concatenate(ws)

    def fourier(self, p):
        """phi^(p) = 4 pi int r^2 phi_inf(r) sinc(pr) dr."""
        p = np.asarray(p, dtype=float)
        x, w = self.nodes(float(np.max(p)) if p.size else 0.0, skip_plateau=True)
        out = radial_transform(self.phi(x), x, w, p)
        # plateau R0 < r < rho^{-1/3} where phi_inf = a/r: integrate exactly
        lo = self.sol.R0
        hi = self.chi.inner_radius if self.chi.rho is not None else self.sol.r[-1]
        pp = np.where(p == 0.0, 1.0, p)
        plateau = np.where(
            p == 0.0,
            2.0 * np.pi * self.a * (hi**2 - lo**2),
            4.0 * np.pi * self.a * (np.cos(pp * lo) - np.cos(pp * hi)) / pp**2,
        )
        return out + plateau

    def E_fourier(self, p):
        p = np.asarray(p, dtype=float)
        x, w = self.nodes(float(np.max(p)) if p.size else 0.0)
        return radial_transform(self.E(x), x, w, p)

    def V_fourier(self, p):
        return self.potential.fourier(p)

    def Vphi_fourier(self, p):
        """(V phi)^(p); V vanishes beyond R0 so only the core contributes."""
        x, w = self.potential.quadrature(32)
        return radial_transform(self.potential(x) * self.phi(x), x, w, p)

    def Vcompl_fourier(self, p):
        """(V (1 - phi))^(p)."""
        x, w = self.potential.quadrature(32)
        return radial_transform(self.potential(x) * (1.0 - self.phi(x)), x, w, p)

    def integral_V_phi(self) -> float:
        return float(self.Vphi_fourier(np.array([0.0]))[0])

    def norms(self) -> dict:
        x, w = self.nodes(0.0, order=32)
        d = self.derivatives(x, 3)
        vol = 4.0 * np.pi * w * x**2
        lap = d[2] + 2.0 * d[1] / x
        E = self.E(x)
        Ed = self.E_derivatives(x, 2)
        lapE = Ed[2] + 2.0 * Ed[1] / x
        sup = float(max(np.max(np.abs(d[0])), abs(self.phi(np.zeros(1))[0])))
        return {
            "phi_inf": sup,
            "phi_1": float(np.sum(vol * np.abs(d[0]))),
            "phi_2": float(np.sqrt(np.sum(vol * d[0] ** 2))),
            "grad_phi_1": float(np.sum(vol * np.abs(d[1]))),
            "grad_phi_2": float(np.sqrt(np.sum(vol * d[1] ** 2))),
            "lap_phi_1": float(np.sum(vol * np.abs(lap))),
            "D2_phi_1": float(np.sum(vol * _radial_hessian_norm(d[1], d[2], x))),
            "D3_phi_1": float(np.sum(vol * _radial_third_norm(d[1], d[2], d[3], x))),
            "E_1": float(np.sum(vol * np.abs(E))),
            "grad_E_1": float(np.sum(vol * np.abs(Ed[1]))),
            "lap_E_1": float(np.sum(vol * np.abs(lapE))),
        }


def localize(sol: ScatteringSolution, chi: CutoffChi) -> LocalizedKernel:
    """Multiply phi0 by the cutoff and tabulate phi_inf and E on a radial grid."""
    R0 = sol.R0
    if chi.rho is not None:
        inner = chi.inner_radius
        if 2.0 * inner <= R0 or inner < R0:
            raise KernelError(
                f"cutoff overlaps potential support: rho^(-1/3)={inner:.4g} < R0={R0:.4g}"
            )
        if sol.r[-1] < 2.0 * inner:
            raise KernelError("scattering grid must extend beyond 2 rho^(-1/3)")
        r = np.linspace(0.0, 2.0 * inner * 1.05, 4001)
    else:
        r = sol.r.copy()
    k = LocalizedKernel(sol, chi, r, np.zeros(0), np.zeros(0))
    k.phi_grid = k.phi(r)
    k.E_grid = k.E(r)
    return k


def build_kernel(potential: RadialPotential, rho: float, profile="exp", rtol: float = 1e-13) -> LocalizedKernel:
    """Convenience: solve, build chi and localize at density rho."""
    rmax = max(2.5 * rho ** (-1.0 / 3.0), 2.0 * potential.R0)
    sol = solve_zero_energy(potential, GridConfig(n_points=2001, r_max=rmax, rtol=rtol, atol=1e-15))
    return localize(sol, make_chi(rho, profile))


_FD2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
_FD1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
_FD2_4 = np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
_FD1_4 = np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12])


def cancellation_residual(kernel: LocalizedKernel, potential: RadialPotential | None = None,
                          h: float | None = None, fd_order: int = 6, return_profile: bool = False):
    """sup |2 Lap(phi_inf) + V (1 - phi_inf) - E| with finite-difference Laplacian.

    The stencil is applied on a uniform radial grid, reflecting phi_inf as an
    even function through the origin.
    """
    potential = potential or kernel.potential
    R0 = potential.R0
    h = h or 2e-3 * R0
    rmax = kernel.support_radius * 1.02 if kernel.chi.rho is not None else kernel.sol.r[-1]
    n = int(np.ceil(rmax / h))
    half = 3 if fd_order == 6 else 2
    c2, c1 = (_FD2, _FD1) if fd_order == 6 else (_FD2_4, _FD1_4)
    j = np.arange(-half, n + half + 1)
    f = kernel.phi(np.abs(j * h))
    r = np.arange(0, n + 1) * h
    d2 = sum(c2[m] * f[m : m + n + 1] for m in range(2 * half + 1)) / h**2
    d1 = sum(c1[m] * f[m : m + n + 1] for m in range(2 * half + 1)) / h
    rr = np.where(r == 0.0, 1.0, r)
    lap = np.where(r == 0.0, 3.0 * d2, d2 + 2.0 * d1 / rr)
    fr = f[half : half + n + 1]
    g = 2.0 * lap + potential(r) * (1.0 - fr) - kernel.E(r)
    res = float(np.max(np.abs(g)))
    if return_profile:
        return res, r, g
    return res


# ------------------------------------------------------------- periodization


def sums_of_three_squares(nmax2: int) -> np.ndarray:
    """All integers 0..nmax2 expressible as a sum of three squares."""
    m = np.arange(nmax2 + 1)
    ok = np.ones(m.size, dtype=bool)
    x = m.copy()
    nz = x > 0
    while True:
        div = nz & (x % 4 == 0)
        if not np.any(div):
            break
        x[div] //= 4
    ok[(x % 8 == 7)] = False
    return m[ok]


@dataclass
class PeriodicKernel:
    """Fourier coefficients phi^(p) on (2 pi / L) Z^3, stored per shell |n|^2."""

    kernel: LocalizedKernel
    L: float
    shell_cutoff: float
    shells: np.ndarray
    phihat: np.ndarray
    norms: dict
    single_image: bool
    _extra: dict = field(default_factory=dict, repr=False)

    @property
    def rho(self):
        return self.kernel.rho

    def momenta(self):
        return 2.0 * np.pi / self.L * np.sqrt(self.shells)

    def coeff_n2(self, n2) -> np.ndarray:
        """phi^ at integer squared lattice norms, computing unseen shells on demand."""
        n2 = np.asarray(n2, dtype=np.int64)
        flat = n2.ravel()
        idx = np.searchsorted(self.shells, flat)
        idx_c = np.minimum(idx, self.shells.size - 1)
        hit = self.shells[idx_c] == flat
        out = np.empty(flat.shape)
        out[hit] = self.phihat[idx_c[hit]]
        if not np.all(hit):
            miss = np.unique(flat[~hit])
            need = [m for m in miss.tolist() if m not in self._extra]
            if need:
                vals = self.kernel.fourier(2.0 * np.pi / self.L * np.sqrt(np.array(need, float)))
                self._extra.update(zip(need, vals.tolist()))
            out[~hit] = [self._extra[m] for m in flat[~hit].tolist()]
        return out.reshape(n2.shape)

    def coeff(self, n_vectors) -> np.ndarray:
        n = np.asarray(n_vectors, dtype=np.int64)
        return self.coeff_n2(np.sum(n * n, axis=-1))

    def real_space(self, x, images: int = 2) -> np.ndarray:
        """Periodized phi at points x (shape (..., 3)) by summing images."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        rng = range(-images, images + 1)
        for i in rng:
            for j in rng:
                for k in rng:
                    y = x + self.L * np.array([i, j, k])
                    out += self.kernel.phi(np.linalg.norm(y, axis=-1))
        return out


def periodize(kernel: LocalizedKernel, L: float, shell_cutoff: float | None = None,
              beta: float = 0.25, require_single_image: bool = True) -> PeriodicKernel:
    """Fourier coefficients of the periodization on the lattice (2 pi/L) Z^3.

    By Poisson summation the coefficients equal the R^3 radial transform at
    lattice momenta for any L.  The single-image condition L > 4 rho^(-1/3)
    is enforced unless ``require_single_image`` is False.
    """
    rho = kernel.rho
    single = rho is None or L > 4.0 * rho ** (-1.0 / 3.0)
    if require_single_image and not single:
        raise KernelError(
            f"box side L={L:.4g} must exceed 4 rho^(-1/3)={4.0 * rho ** (-1.0 / 3.0):.4g}"
        )
    if shell_cutoff is None:
        if rho is None:
            raise KernelError("a shell cutoff is required without a density")
        shell_cutoff = 3.0 * rho ** (-beta)
    nmax = shell_cutoff * L / (2.0 * np.pi)
    shells = sums_of_three_squares(int(np.floor(nmax**2)))
    p = 2.0 * np.pi / L * np.sqrt(shells.astype(float))
    phihat = kernel.fourier(p) if shells.size else np.zeros(0)
    return PeriodicKernel(kernel, float(L), float(shell_cutoff), shells, phihat,
                          kernel.norms(), bool(single))


def decay_profile(pk: PeriodicKernel, n: int) -> float:
    """sup over stored p of |phi^(p)| (1 + rho^(-2/3)|p|^n) / rho^(-2/3)."""
    if n < 2:
        raise KernelError("decay order must be at least 2")
    s = pk.rho ** (-2.0 / 3.0)
    p = pk.momenta()
    return float(np.max(np.abs(pk.phihat) * (1.0 + s * p**n) / s)) if p.size else 0.0


def scattering_identity(kernel: LocalizedKernel) -> tuple[float, float]:
    """(V^(0) - int V phi, 8 pi a)."""
    return float(kernel.V_fourier(np.array([0.0]))[0] - kernel.integral_V_phi()), 8.0 * np.pi * kernel.a
