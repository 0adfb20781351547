"""Momentum lattice (2 pi/L) Z^3, closed-shell Fermi balls, cutoff profiles and
the Hartree-Fock energy of the filled Fermi sea."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .scattering import RadialPotential

KF_CONST = (6.0 * np.pi**2) ** (1.0 / 3.0)


class DegenerateBand(ValueError):
    """Raised when the regularisation radii collide."""


class LatticeError(ValueError):
    pass


def integer_ball(n2max: int) -> np.ndarray:
    """All integer vectors n with |n|^2 <= n2max, ordered by (|n|^2, n)."""
    m = int(np.floor(np.sqrt(n2max)))
    r = np.arange(-m, m + 1)
    g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    n2 = np.sum(g * g, axis=1)
    g = g[n2 <= n2max]
    n2 = n2[n2 <= n2max]
    order = np.lexsort((g[:, 2], g[:, 1], g[:, 0], n2))
    return g[order]


@dataclass
class MomentumLattice:
    """Lattice vectors k = 2 pi n / L with |n|^2 <= n2max."""

    L: float
    n2max: int
    n: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.L <= 0:
            raise LatticeError("box side must be positive")
        self.n = integer_ball(int(self.n2max))

    @classmethod
    def with_kmax(cls, L: float, kmax: float) -> "MomentumLattice":
        return cls(L, int(np.floor((kmax * L / (2 * np.pi)) ** 2)))

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi / self.L * self.n

    @property
    def n2(self) -> np.ndarray:
        return np.sum(self.n * self.n, axis=1)

    def shells(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct |n|^2 values and their multiplicities."""
        return np.unique(self.n2, return_counts=True)


@dataclass(frozen=True)
class FermiBall:
    """Filled closed-shell ball |n|^2 <= n2F for one spin."""

    L: float
    n2F: int
    N: int

    @property
    def kF(self) -> float:
        return 2.0 * np.pi / self.L * np.sqrt(self.n2F)

    @property
    def mu(self) -> float:
        return self.kF**2

    @property
    def rho(self) -> float:
        return self.N / self.L**3

    def vectors(self) -> np.ndarray:
        return integer_ball(self.n2F)

    def contains_n2(self, n2) -> np.ndarray:
        return np.asarray(n2) <= self.n2F


@dataclass(frozen=True)
class SpinConfig:
    """Both spin balls in a common box."""

    up: FermiBall
    down: FermiBall

    @property
    def L(self) -> float:
        return self.up.L

    def ball(self, sigma: int) -> FermiBall:
        return self.up if sigma == 0 else self.down

    @property
    def rho(self) -> float:
        return self.up.rho + self.down.rho

    def as_dict(self) -> dict:
        return {
            "L": self.L,
            "N_up": self.up.N, "N_down": self.down.N,
            "kF_up": self.up.kF, "kF_down": self.down.kF,
            "rho_up": self.up.rho, "rho_down": self.down.rho,
        }


def fermi_ball(lattice: MomentumLattice, target_rho: float) -> FermiBall:
    """Largest closed shell with N / L^3 <= target_rho (rounding down)."""
    vals, counts = lattice.shells()
    cum = np.cumsum(counts)
    allowed = cum <= target_rho * lattice.L**3 * (1 + 1e-12)
    if not np.any(allowed):
        raise LatticeError(
            f"empty Fermi ball: target density {target_rho:.4g} is below 1/L^3 = {lattice.L ** -3:.4g}"
        )
    i = int(np.nonzero(allowed)[0][-1])
    if i == len(vals) - 1:
        raise LatticeError("lattice cutoff does not exceed the implied Fermi momentum")
    return FermiBall(lattice.L, int(vals[i]), int(cum[i]))


def spin_config(L: float, rho_up: float, rho_down: float) -> SpinConfig:
    kmax = 2.0 * KF_CONST * max(rho_up, rho_down) ** (1.0 / 3.0) + 4.0 * np.pi / L
    lat = MomentumLattice.with_kmax(L, kmax)
    return SpinConfig(fermi_ball(lat, rho_up), fermi_ball(lat, rho_down))


def ball_config(L: float, n2F_up: int, n2F_down: int | None = None) -> SpinConfig:
    """Spin configuration from explicit closed-shell radii |n|^2 <= n2F."""
    n2F_down = n2F_up if n2F_down is None else n2F_down
    return SpinConfig(
        FermiBall(L, n2F_up, len(integer_ball(n2F_up))),
        FermiBall(L, n2F_down, len(integer_ball(n2F_down))),
    )


# ------------------------------------------------------------------ HF energy


@dataclass
class HfResult:
    kinetic: float
    direct: float
    exchange: float
    total: float
    L: float
    N_up: int
    N_down: int
    continuum_prediction: float
    per_volume: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "direct": self.direct,
            "exchange": self.exchange,
            "total": self.total,
            "per_volume": self.per_volume,
            "continuum_prediction": self.continuum_prediction,
            "L": self.L,
            "N_up": self.N_up,
            "N_down": self.N_down,
        }


def pair_difference_counts(n2F: int) -> tuple[np.ndarray, np.ndarray]:
    """For the ball |n|^2 <= n2F, count ordered pairs by |n - n'|^2."""
    m = int(np.floor(np.sqrt(n2F)))
    r = np.arange(-m, m + 1)
    X, Y, Z = np.meshgrid(r, r, r, indexing="ij")
    ind = (X**2 + Y**2 + Z**2 <= n2F).astype(float)
    auto = np.rint(fftconvolve(ind, ind[::-1, ::-1, ::-1])).astype(np.int64)
    d = np.arange(-2 * m, 2 * m + 1)
    D2 = d[:, None, None] ** 2 + d[None, :, None] ** 2 + d[None, None, :] ** 2
    mask = auto > 0
    vals, inv = np.unique(D2[mask], return_inverse=True)
    counts = np.bincount(inv, weights=auto[mask]).astype(np.int64)
    return vals, counts


def kinetic_sum(ball: FermiBall) -> float:
    n = ball.vectors()
    return float((2 * np.pi / ball.L) ** 2 * np.sum(n * n))


def hf_energy(config: SpinConfig, potential: RadialPotential) -> HfResult:
    """Hartree-Fock functional at the filled Fermi sea."""
    L = config.L
    kin = kinetic_sum(config.up) + kinetic_sum(config.down)
    V0 = float(potential.fourier(0.0))
    Ns = (config.up.N, config.down.N)
    direct = 0.5 / L**3 * V0 * (Ns[0] + Ns[1]) ** 2
    exch = 0.0
    for ball in (config.up, config.down):
        vals, counts = pair_difference_counts(ball.n2F)
        vh = potential.fourier(2 * np.pi / L * np.sqrt(vals.astype(float)))
        exch -= 0.5 / L**3 * float(np.sum(counts * vh))
    total = kin + direct + exch
    r_up, r_dn = config.up.rho, config.down.rho
    cont = L**3 * (0.6 * KF_CONST**2 * (r_up ** (5 / 3) + r_dn ** (5 / 3)) + V0 * r_up * r_dn)
    vol = L**3
    pv = {
        "kinetic": kin / vol,
        "direct": direct / vol,
        "exchange": exch / vol,
        "total": total / vol,
        "interaction": (direct + exch) / vol,
        "interaction_minus_leading": (direct + exch) / vol - V0 * r_up * r_dn,
    }
    return HfResult(kin, direct, exch, total, L, Ns[0], Ns[1], cont, pv)


# ------------------------------------------------------------ cutoff profiles


def raised_cosine(t):
    """Smooth step 0 -> 1 on [0, 1]: (1 - cos(pi t))/2, clamped outside."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * t))


@dataclass(frozen=True)
class SpinProfiles:
    """Regularised profiles of one spin as functions of the integer |n|^2."""

    L: float
    n2F: int
    rho: float
    eps: float
    beta: float

    @property
    def kF(self) -> float:
        return 2.0 * np.pi / self.L * np.sqrt(self.n2F)

    @property
    def alpha_exp(self) -> float:
        return 1.0 / 3.0 + self.eps / 3.0

    @property
    def high(self) -> float:
        return self.rho ** (-self.beta)

    @property
    def width_v(self) -> float:
        return self.rho**self.alpha_exp

    def _k(self, n2):
        return 2.0 * np.pi / self.L * np.sqrt(np.asarray(n2, dtype=float))

    def v(self, n2):
        return (np.asarray(n2) <= self.n2F).astype(float)

    def u(self, n2):
        return (np.asarray(n2) > self.n2F).astype(float)

    def vr(self, n2):
        k = self._k(n2)
        lo = self.kF - self.width_v
        out = 1.0 - raised_cosine((k - lo) / self.width_v)
        return np.where(np.asarray(n2) <= self.n2F, out, 0.0) * (k < self.kF)

    def ur(self, n2):
        n2 = np.asarray(n2)
        k = self._k(n2)
        rise = raised_cosine((k - 2 * self.kF) / self.kF)
        fall = 1.0 - raised_cosine((k - self.high) / self.high)
        out = np.where(k <= self.high, rise, fall)
        return np.where(n2 <= 4 * self.n2F, 0.0, out)

    def nu(self, n2):
        n2 = np.asarray(n2)
        k = self._k(n2)
        out = np.where(n2 <= 4 * self.n2F, 1.0, 1.0 - self.ur(n2) ** 2)
        return np.where(k >= 3 * self.kF, 0.0, out)

    def delta(self, n2):
        k = self._k(n2)
        return np.where(k <= self.high, 1.0, self.ur(n2) ** 2)

    def alpha(self, n2):
        n2 = np.asarray(n2)
        k = self._k(n2)
        keep = (n2 > self.n2F) & (k < 3 * self.kF)
        return np.where(keep, 1.0 - self.ur(n2), 0.0)

    def delta_gt(self, n2):
        k = self._k(n2)
        return np.where(k > self.high, 1.0 - self.ur(n2), 0.0)

    def u_lt(self, n2):
        n2 = np.asarray(n2)
        return ((n2 > self.n2F) & (n2 < 4 * self.n2F)).astype(float)

    def u_gt(self, n2):
        return (np.asarray(n2) >= 4 * self.n2F).astype(float)

    def gt(self, n2):
        """Indicator of |k| >= 2 kF (the N_> window)."""
        return self.u_gt(n2)

    def tilde(self, n2, eta: float):
        """Indicator of |k| >= kF + rho^{1/3 + eta/3} (the N~ window)."""
        k = self._k(n2)
        return (k >= self.kF + self.rho ** (1.0 / 3.0 + eta / 3.0)).astype(float)

    def get(self, name: str, n2, eta: float = 0.4):
        if name == "one":
            return np.ones(np.shape(n2))
        if name == "tilde":
            return self.tilde(n2, eta)
        return getattr(self, name)(n2)


PROFILE_NAMES = ("u", "v", "ur", "vr", "nu", "delta", "alpha", "delta_gt", "u_lt", "u_gt")


@dataclass(frozen=True)
class CutoffProfiles:
    up: SpinProfiles
    down: SpinProfiles

    def spin(self, sigma: int) -> SpinProfiles:
        return self.up if sigma == 0 else self.down

    @property
    def eps(self):
        return self.up.eps

    @property
    def beta(self):
        return self.up.beta


def build_profiles(config: SpinConfig, eps: float = 1.0, beta: float = 0.25,
                   check: bool = True) -> CutoffProfiles:
    """Regularised u^r, v^r and auxiliaries for both spins."""
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    out = []
    for ball in (config.up, config.down):
        sp = SpinProfiles(ball.L, ball.n2F, ball.rho, float(eps), float(beta))
        if check:
            if sp.kF == 0.0:
                raise DegenerateBand("degenerate band: kF = 0 so 2 kF and 3 kF coincide")
            if sp.kF - sp.width_v <= 0.0:
                raise DegenerateBand(
                    f"degenerate band: kF - rho^alpha = {sp.kF - sp.width_v:.4g} <= 0"
                )
            if sp.high <= 3.0 * sp.kF:
                raise DegenerateBand(
                    f"degenerate band: rho^-beta = {sp.high:.4g} does not exceed 3 kF = {3 * sp.kF:.4g}"
                )
        out.append(sp)
    return CutoffProfiles(*out)


def profile_norms(sp: SpinProfiles) -> dict:
    """||v^r_x||_2^2 = L^-3 sum v^r(k)^2 and the analogue for u^r."""
    kmax = 2.0 * sp.high
    n = integer_ball(int(np.floor((kmax * sp.L / (2 * np.pi)) ** 2)) + 1)
    n2 = np.sum(n * n, axis=1)
    return {
        "vr_2_sq": float(np.sum(sp.vr(n2) ** 2) / sp.L**3),
        "ur_2_sq": float(np.sum(sp.ur(n2) ** 2) / sp.L**3),
    }


def omega_r_l1(sp: SpinProfiles, grid: int = 16) -> float:
    """||omega^r||_1 for omega^r(x) = L^-3 sum_k v^r(k)^2 e^{ikx}, by a real-space sum."""
    n = integer_ball(sp.n2F)
    w = sp.vr(np.sum(n * n, axis=1)) ** 2
    x = np.arange(grid) / grid
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    vals = np.exp(2j * np.pi * X @ n.T) @ w / sp.L**3
    return float(np.sum(np.abs(vals)) * (sp.L / grid) ** 3)
