"""Per-mode profile values and Fourier kernels consumed by block assembly."""

from __future__ import annotations

import numpy as np

from ..fock.modes import ModeSet
from ..kernel import LocalizedKernel, PeriodicKernel
from ..lattice import CutoffProfiles, SpinConfig, integer_ball
from ..scattering import RadialPotential

U_TYPE = {"u", "ur", "u_lt", "u_gt", "alpha", "delta_gt"}
V_TYPE = {"v", "vr"}


class ModeProfiles:
    """Profile values on the modes of a ModeSet.

    Either derived from CutoffProfiles (physical runs) or given as explicit
    arrays (algebraic checks with arbitrary coefficients).  The Fermi balls
    used by the exchange-type coefficient of X come from ``config`` when
    available and from the ``inside`` flags of the mode set otherwise.
    """

    def __init__(self, modes: ModeSet, profiles: CutoffProfiles | None = None,
                 config: SpinConfig | None = None, table: dict | None = None,
                 mu=None, eta: float = 0.4):
        self.modes = modes
        self.profiles = profiles
        self.config = config
        self.table = dict(table or {})
        self.eta = float(eta)
        if mu is not None:
            self.mu = tuple(float(x) for x in mu)
        elif config is not None:
            self.mu = (config.up.mu, config.down.mu)
        elif profiles is not None:
            self.mu = (profiles.up.kF**2, profiles.down.kF**2)
        else:
            self.mu = (0.0, 0.0)
        self._cache: dict = {}

    def values(self, name: str) -> np.ndarray:
        if name in self._cache:
            return self._cache[name]
        m = self.modes
        if name in self.table:
            out = np.asarray(self.table[name], dtype=float)
        elif name == "u":
            out = (~m.inside).astype(float)
        elif name == "v":
            out = m.inside.astype(float)
        elif name == "one":
            out = np.ones(m.M)
        elif self.profiles is not None:
            out = np.zeros(m.M)
            for sigma in (0, 1):
                idx = m.of_spin(sigma)
                out[idx] = self.profiles.spin(sigma).get(name, m.n2[idx], eta=self.eta)
        else:
            raise KeyError(f"profile {name!r} not available")
        self._cache[name] = out
        return out

    def off_set(self, name: str, n: np.ndarray, sigma: int):
        """Profile at modes outside the set, or None when unknown."""
        if self.profiles is None:
            if name == "u":
                return np.ones(len(n))
            return None
        n2 = np.sum(np.asarray(n) ** 2, axis=-1)
        if name == "u":
            return (n2 > self.profiles.spin(sigma).n2F).astype(float)
        if name == "v":
            return (n2 <= self.profiles.spin(sigma).n2F).astype(float)
        return self.profiles.spin(sigma).get(name, n2, eta=self.eta)

    def ball(self, sigma: int) -> np.ndarray:
        if self.config is not None:
            return integer_ball(self.config.ball(sigma).n2F)
        m = self.modes
        idx = m.of_spin(sigma)
        return m.n[idx[m.inside[idx]]]

    def energies(self) -> np.ndarray:
        """| |k|^2 - mu_sigma | per mode."""
        k2 = (2 * np.pi / self.modes.L) ** 2 * self.modes.n2
        mu = np.where(self.modes.spin == 0, self.mu[0], self.mu[1])
        return np.abs(k2 - mu)


class Kernels:
    """Fourier coefficients of V, phi and derived kernels at integer lattice vectors."""

    def __init__(self, L: float):
        self.L = float(L)

    def _p2(self, n):
        n = np.asarray(n)
        return (2 * np.pi / self.L) ** 2 * np.sum(n * n, axis=-1)

    def V(self, n):
        raise NotImplementedError

    def phi(self, n):
        raise NotImplementedError

    def Vphi(self, n):
        raise NotImplementedError

    def E(self, n):
        """Renormalized interaction, by default from the scattering identity."""
        return -2.0 * self._p2(n) * self.phi(n) + self.V(n) - self.Vphi(n)

    def lap_phi(self, n):
        return -self._p2(n) * self.phi(n)

    def get(self, name: str):
        return {
            "V": self.V,
            "phi": self.phi,
            "Vphi": self.Vphi,
            "E": self.E,
            "lap_phi": self.lap_phi,
            "zero": lambda n: np.zeros(np.shape(n)[:-1]),
        }[name]


class _ShellCache:
    def __init__(self, fn, L):
        self.fn = fn
        self.L = L
        self.cache: dict[int, float] = {}

    def __call__(self, n):
        n = np.asarray(n, dtype=np.int64)
        n2 = np.sum(n * n, axis=-1)
        flat = n2.ravel()
        uniq = np.unique(flat)
        need = [int(x) for x in uniq if int(x) not in self.cache]
        if need:
            p = 2 * np.pi / self.L * np.sqrt(np.array(need, dtype=float))
            self.cache.update(zip(need, np.atleast_1d(self.fn(p)).tolist()))
        lut = np.array([self.cache[int(x)] for x in uniq])
        return lut[np.searchsorted(uniq, flat)].reshape(n2.shape)


class RadialKernels(Kernels):
    """Kernels of a radial potential and its localized scattering solution.

    All coefficients are R^3 radial transforms at lattice momenta, i.e. the
    exact Fourier coefficients of the periodized functions.
    """

    def __init__(self, L: float, potential: RadialPotential, kernel: LocalizedKernel | PeriodicKernel | None = None):
        super().__init__(L)
        self.potential = potential
        if isinstance(kernel, PeriodicKernel):
            self.periodic = kernel
            kernel = kernel.kernel
        else:
            self.periodic = None
        self.kernel = kernel
        self._V = _ShellCache(potential.fourier, L)
        if kernel is not None:
            if self.periodic is not None:
                self._phi = lambda n: self.periodic.coeff(n)
            else:
                self._phi = _ShellCache(kernel.fourier, L)
            self._Vphi = _ShellCache(kernel.Vphi_fourier, L)
            self._E = _ShellCache(kernel.E_fourier, L)

    def V(self, n):
        return self._V(n)

    def phi(self, n):
        if self.kernel is None:
            return np.zeros(np.shape(n)[:-1])
        return self._phi(n)

    def Vphi(self, n):
        if self.kernel is None:
            return np.zeros(np.shape(n)[:-1])
        return self._Vphi(n)

    def E_direct(self, n):
        """E^ by direct radial transform of E(r), independent of the identity."""
        return self._E(n)


class TableKernels(Kernels):
    """Band-limited kernels given by coefficient tables on a finite set D of vectors.

    Products are exact truncated convolutions over D, so the kernels are
    the Fourier series of trigonometric polynomials.
    """

    def __init__(self, L: float, V: dict, phi: dict):
        super().__init__(L)
        self.Vt = {tuple(k): float(v) for k, v in V.items()}
        self.phit = {tuple(k): float(v) for k, v in phi.items()}

    @staticmethod
    def _lookup(table, n):
        n = np.asarray(n, dtype=np.int64)
        flat = n.reshape(-1, 3)
        out = np.array([table.get(tuple(x), 0.0) for x in flat.tolist()])
        return out.reshape(n.shape[:-1])

    def V(self, n):
        return self._lookup(self.Vt, n)

    def phi(self, n):
        return self._lookup(self.phit, n)

    def Vphi(self, n):
        n = np.asarray(n, dtype=np.int64)
        flat = n.reshape(-1, 3)
        out = np.zeros(len(flat))
        for q, vq in self.Vt.items():
            out += vq * self.phi(flat - np.array(q))
        return (out / self.L**3).reshape(n.shape[:-1])


class FunctionKernels(Kernels):
    """Kernels from user callables on integer vectors (used for random coefficients)."""

    def __init__(self, L: float, V=None, phi=None, Vphi=None):
        super().__init__(L)
        zero = lambda n: np.zeros(np.shape(n)[:-1])  # noqa: E731
        self._V, self._phi, self._Vphi = V or zero, phi or zero, Vphi or zero

    def V(self, n):
        return self._V(np.asarray(n))

    def phi(self, n):
        return self._phi(np.asarray(n))

    def Vphi(self, n):
        return self._Vphi(np.asarray(n))
