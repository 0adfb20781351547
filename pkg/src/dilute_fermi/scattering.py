"""Zero-energy scattering for radial, compactly supported potentials.

With w(r) = r(1 - phi0(r)) the radial equation 2*Lap(phi0) = V(1 - phi0)
reads 2 w'' = V w, w(0) = 0.  Outside the support w is linear and the tail
normalisation w(r) -> r - a fixes the scattering length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.special import expit


class ScatteringError(RuntimeError):
    """Raised when the zero-energy solve cannot be trusted."""


class ZeroEnergyResonance(ScatteringError):
    """w'(R0) vanishes: a bound state sits exactly at zero energy."""


def gauss_panels(a: float, b: float, panels: int, order: int = 24):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def sinc_kernel(p, r):
    """sin(p r)/(p r) on the outer product of p and r, equal to 1 at p r = 0."""
    pr = np.multiply.outer(np.asarray(p, dtype=float), np.asarray(r, dtype=float))
    return np.sinc(pr / np.pi)


def radial_transform(f_nodes, nodes, weights, p):
    """4 pi int r^2 f(r) sin(pr)/(pr) dr for an array of momenta p."""
    shape = np.shape(p)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty(p.shape)
    fw = 4.0 * np.pi * weights * nodes**2 * f_nodes
    flat = p.ravel()
    res = out.ravel()
    step = max(1, 4_000_000 // max(1, len(nodes)))
    for i in range(0, flat.size, step):
        res[i : i + step] = sinc_kernel(flat[i : i + step], nodes) @ fw
    return res.reshape(shape)


def _exp_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, with first derivative."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    d = np.zeros_like(s)
    inner = (s > 0.0) & (s < 1.0)
    si = s[inner]
    y = 1.0 / (1.0 - si) - 1.0 / si
    out[inner] = expit(y)
    d[inner] = expit(y) * expit(-y) * (1.0 / si**2 + 1.0 / (1.0 - si) ** 2)
    return out, d


class RadialPotential:
    """Radial interaction V(r) >= 0 vanishing for r >= R0.

    Subclasses provide ``_value`` and ``_deriv`` on r < R0.
    """

    R0: float = 1.0
    smoothness: int = 0
    name: str = "potential"

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r < self.R0
        if np.any(inside):
            out[inside] = self._value(r[inside])
        return out

    def derivative(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r < self.R0
        if np.any(inside):
            out[inside] = self._deriv(r[inside])
        return out

    def _value(self, r):
        raise NotImplementedError

    def value_scalar(self, r: float) -> float:
        return float(self(np.array([r]))[0])

    def _deriv(self, r):
        raise NotImplementedError

    def is_zero(self) -> bool:
        r = np.linspace(0.0, self.R0, 257)
        return not np.any(self(r) > 0.0)

    def quadrature(self, panels: int = 16, order: int = 24):
        return gauss_panels(0.0, self.R0, panels, order)

    def fourier(self, p):
        """Radial Fourier transform V^(p) = int V(x) e^{-ipx} dx."""
        nodes, weights = self.quadrature()
        return radial_transform(self(nodes), nodes, weights, p)

    def integral(self) -> float:
        return float(self.fourier(0.0))

    def scaled(self, lam: float) -> "RadialPotential":
        return ScaledPotential(self, lam)

    def params(self) -> dict:
        return {"family": self.name, "R0": self.R0}


@dataclass(frozen=True, eq=False)
class SmoothBump(RadialPotential):
    """V0 * exp(1 - 1/(1 - (r/R0)^2)) on r < R0; V(0) = V0."""

    V0: float = 10.0
    R0: float = 1.0
    smoothness: int = 1_000_000
    name: str = "bump"

    def _value(self, r):
        x2 = (r / self.R0) ** 2
        return self.V0 * np.exp(1.0 - 1.0 / (1.0 - x2))

    def value_scalar(self, r):
        x2 = (r / self.R0) ** 2
        return self.V0 * math.exp(1.0 - 1.0 / (1.0 - x2)) if x2 < 1.0 else 0.0

    def _deriv(self, r):
        x2 = (r / self.R0) ** 2
        return self._value(r) * (-2.0 * r / self.R0**2) / (1.0 - x2) ** 2

    def params(self):
        return {"family": self.name, "V0": self.V0, "R0": self.R0}


@dataclass(frozen=True, eq=False)
class SoftSphere(RadialPotential):
    """Plateau V0 up to R0 - width, then a C-infinity ramp down to 0 at R0."""

    V0: float = 10.0
    R0: float = 1.0
    width: float = 0.25
    smoothness: int = 1_000_000
    name: str = "softsphere"

    def __post_init__(self):
        if not 0.0 < self.width <= self.R0:
            raise ValueError("ramp width must lie in (0, R0]")

    def _value(self, r):
        s, _ = _exp_step((r - (self.R0 - self.width)) / self.width)
        return self.V0 * (1.0 - s)

    def _deriv(self, r):
        _, d = _exp_step((r - (self.R0 - self.width)) / self.width)
        return -self.V0 * d / self.width

    def params(self):
        return {"family": self.name, "V0": self.V0, "R0": self.R0, "width": self.width}


class TabulatedPotential(RadialPotential):
    """Samples (r_i, V_i) joined by monotone cubic (PCHIP) interpolation."""

    name = "tabulated"
    smoothness = 1

    def __init__(self, r, v):
        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or np.any(np.diff(r) <= 0):
            raise ValueError("samples must be strictly increasing radii with matching values")
        if np.any(v < 0):
            raise ValueError("potential must be non-negative")
        if v[-1] != 0.0:
            raise ValueError("last sample must vanish; it marks the support radius")
        self._r = r
        self._v = v
        self._interp = PchipInterpolator(r, v, extrapolate=False)
        self._d = self._interp.derivative()
        self.R0 = float(r[-1])

    def _value(self, r):
        return np.clip(np.nan_to_num(self._interp(r)), 0.0, None)

    def _deriv(self, r):
        return np.nan_to_num(self._d(r))

    def params(self):
        return {"family": self.name, "R0": self.R0, "n_samples": int(self._r.size)}


class ScaledPotential(RadialPotential):
    """lam^2 V(lam r); its scattering length is a/lam."""

    def __init__(self, base: RadialPotential, lam: float):
        if lam <= 0:
            raise ValueError("scale must be positive")
        self.base = base
        self.lam = float(lam)
        self.R0 = base.R0 / lam
        self.smoothness = base.smoothness
        self.name = f"scaled({base.name})"

    def _value(self, r):
        return self.lam**2 * self.base(self.lam * r)

    def _deriv(self, r):
        return self.lam**3 * self.base.derivative(self.lam * r)

    def params(self):
        return {"family": "scaled", "lam": self.lam, "base": self.base.params()}


def make_potential(family: str = "bump", **kw) -> RadialPotential:
    """Factory used by the CLI and the sweep configuration."""
    family = family.lower()
    if family == "bump":
        return SmoothBump(V0=float(kw.get("V0", 10.0)), R0=float(kw.get("R0", 1.0)))
    if family in ("softsphere", "soft_sphere"):
        return SoftSphere(
            V0=float(kw.get("V0", 10.0)),
            R0=float(kw.get("R0", 1.0)),
            width=float(kw.get("width", 0.25)),
        )
    if family == "zero":
        return SmoothBump(V0=0.0, R0=float(kw.get("R0", 1.0)))
    raise ValueError(f"unknown potential family {family!r}")


def reference_potential() -> RadialPotential:
    """The declared reference interaction for all quantitative checks."""
    return SmoothBump(V0=10.0, R0=1.0)


@dataclass(frozen=True)
class GridConfig:
    """Output grid and integrator tolerances.

    ``max_step`` ties the adaptive integrator to the grid spacing, so a coarse
    grid is a genuinely coarser solve.
    """

    n_points: int = 2001
    r_max: float | None = None
    rtol: float = 1e-12
    atol: float = 1e-14
    coarse: bool = False

    def radius(self, R0: float) -> float:
        return float(self.r_max) if self.r_max is not None else 10.0 * R0


@dataclass
class ScatteringSolution:
    potential: RadialPotential
    r: np.ndarray
    phi0_grid: np.ndarray
    w_grid: np.ndarray
    a: float
    a_at_rmax: float
    meta: dict = field(default_factory=dict)
    _inner: object = None
    _scale: float = 1.0

    @property
    def R0(self) -> float:
        return self.potential.R0

    def _w_inner(self, r):
        """(w, w') on 0 <= r <= R0 from the dense interior solution."""
        if self._inner is None:
            return np.asarray(r, float), np.ones_like(np.asarray(r, float))
        y = self._inner(np.asarray(r, float)) * self._scale
        return y[0], y[1]

    def derivatives(self, r, order: int = 1):
        """phi0 and its radial derivatives up to ``order`` (<= 3) at r."""
        r = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
        out = np.zeros((order + 1,) + r.shape)
        outer = r > self.R0
        ro = r[outer]
        if np.any(outer):
            a = self.a
            tail = [a / ro, -a / ro**2, 2 * a / ro**3, -6 * a / ro**4]
            for n in range(order + 1):
                out[n][outer] = tail[n]
        inner = ~outer
        if np.any(inner):
            ri = r[inner]
            V = self.potential(ri)
            small = ri < 1e-3 * self.R0
            rr = np.where(small, 1.0, ri)
            w, wp = self._w_inner(ri)
            wpp = 0.5 * V * w
            res = [
                1.0 - w / rr,
                -(wp / rr - w / rr**2),
                -(wpp / rr - 2 * wp / rr**2 + 2 * w / rr**3),
            ]
            if order >= 3:
                wppp = 0.5 * (self.potential.derivative(ri) * w + V * wp)
                res.append(-(wppp / rr - 3 * wpp / rr**2 + 6 * wp / rr**3 - 6 * w / rr**4))
            if np.any(small):
                # even Taylor expansion about the origin
                w0p = self._w_inner(np.zeros(1))[1][0]
                c0 = 1.0 - w0p
                c2 = -self.potential(np.zeros(1))[0] * (1.0 - c0) / 6.0
                rs = ri[small]
                ser = [c0 + 0.5 * c2 * rs**2, c2 * rs, c2 + 0 * rs, 0 * rs]
                for n in range(order + 1):
                    res[n] = np.where(small, 0.0, res[n])
                    res[n][small] = ser[n]
            for n in range(order + 1):
                out[n][inner] = res[n]
        return out

    def phi0(self, r):
        return self.derivatives(r, 0)[0]

    def born_integral(self, panels: int = 32, order: int = 24) -> float:
        return born_integral(self, panels, order)


def solve_zero_energy(potential: RadialPotential, grid_cfg: GridConfig | None = None) -> ScatteringSolution:
    """Integrate 2 w'' = V w outward and normalise the tail to r - a.

    Raises ZeroEnergyResonance when w'(R0) vanishes and ScatteringError when
    the integration fails or the two extraction points disagree.
    """
    cfg = grid_cfg or GridConfig()
    R0 = potential.R0
    r_max = cfg.radius(R0)
    if r_max <= R0:
        raise ValueError(f"grid radius {r_max} must exceed the support radius {R0}")
    r = np.linspace(0.0, r_max, cfg.n_points)
    h = r[1] - r[0]
    max_step = h if cfg.coarse else np.inf

    if potential.is_zero():
        return ScatteringSolution(
            potential, r, np.zeros_like(r), r.copy(), 0.0, 0.0,
            meta={"rtol": cfg.rtol, "n_points": cfg.n_points, "r_max": r_max, "nfev": 0},
        )

    vfun = potential.value_scalar

    def rhs(t, y):
        return [y[1], 0.5 * vfun(t) * y[0]]

    # one continuous outward solve; a is read off at R0 and at r_max
    sol = solve_ivp(rhs, (0.0, r_max), [0.0, 1.0], method="DOP853", rtol=cfg.rtol,
                    atol=cfg.atol, dense_output=True, max_step=max_step)
    if not sol.success:
        raise ScatteringError(f"integration failed: {sol.message}")
    wR, wpR = sol.sol(R0)
    if not np.isfinite(wR) or not np.isfinite(wpR):
        raise ScatteringError("integration overflowed")
    if abs(wpR) * R0 <= 1e3 * cfg.rtol * abs(wR):
        raise ZeroEnergyResonance(f"zero-energy resonance: w'(R0)={wpR:.3e}, w(R0)={wR:.3e}")
    scale = 1.0 / wpR
    a_R0 = R0 - wR / wpR
    w_end, wp_end = sol.y[0, -1], sol.y[1, -1]
    a_rmax = r_max - w_end / wp_end
    tol = 1e4 * cfg.rtol * max(R0, abs(a_R0)) + cfg.atol
    if abs(a_rmax - a_R0) > tol:
        raise ScatteringError(
            f"scattering length disagrees between R0 ({a_R0:.12g}) and r_max ({a_rmax:.12g})"
        )

    w_grid = sol.sol(r)[0] * scale
    phi = np.empty_like(r)
    phi[1:] = 1.0 - w_grid[1:] / r[1:]
    phi[0] = 1.0 - scale
    meta = {
        "rtol": cfg.rtol,
        "n_points": cfg.n_points,
        "r_max": r_max,
        "nfev": int(sol.nfev),
        "coarse": cfg.coarse,
    }
    return ScatteringSolution(potential, r, phi, w_grid, float(a_R0), float(a_rmax),
                              meta=meta, _inner=sol.sol, _scale=scale)


def tail_deviation(sol: ScatteringSolution) -> float:
    """max over grid points r > R0 of |phi0(r) - a/r|."""
    mask = sol.r > sol.R0
    if not np.any(mask):
        return 0.0
    r = sol.r[mask]
    return float(np.max(np.abs(sol.phi0_grid[mask] - sol.a / r)))


def born_integral(sol: ScatteringSolution, panels: int = 32, order: int = 24) -> float:
    """(1/8 pi) int V (1 - phi0) d^3x by composite Gauss-Legendre on [0, R0]."""
    if sol.a == 0.0 and sol._inner is None:
        return 0.0
    nodes, weights = gauss_panels(0.0, sol.R0, panels, order)
    w, _ = sol._w_inner(nodes)
    # r^2 (1 - phi0) = r w
    return float(4.0 * np.pi * np.sum(weights * nodes * sol.potential(nodes) * w) / (8.0 * np.pi))


def born_residual(sol: ScatteringSolution) -> float:
    """Relative mismatch between the Born-type integral and a."""
    b = born_integral(sol)
    if sol.a == 0.0:
        return abs(b)
    return abs(b - sol.a) / sol.a
