"""Finite mode sets (k, sigma) drawn from the momentum lattice."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lattice import SpinConfig, integer_ball

UP, DOWN = 0, 1
_OFF = 1 << 10
_BASE = 1 << 11


def encode(n, spin) -> np.ndarray:
    """Integer key for (n, spin); injective for |n_i| < 1024."""
    n = np.asarray(n, dtype=np.int64)
    spin = np.asarray(spin, dtype=np.int64)
    return ((spin * _BASE + n[..., 0] + _OFF) * _BASE + n[..., 1] + _OFF) * _BASE + n[..., 2] + _OFF


@dataclass
class ModeSet:
    """Ordered modes with a ball-membership flag per mode.

    The canonical order is spin-major, then |n|^2, then lexicographic in n;
    it fixes the Jordan-Wigner signs of every operator built on it.
    """

    L: float
    n: np.ndarray
    spin: np.ndarray
    inside: np.ndarray
    _keys: np.ndarray = field(init=False, repr=False)
    _perm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64).reshape(-1, 3)
        self.spin = np.asarray(self.spin, dtype=np.int64).ravel()
        self.inside = np.asarray(self.inside, dtype=bool).ravel()
        if not (len(self.n) == len(self.spin) == len(self.inside)):
            raise ValueError("mode arrays differ in length")
        keys = encode(self.n, self.spin)
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate (k, sigma) in mode set")
        self._perm = np.argsort(keys, kind="stable")
        self._keys = keys[self._perm]

    def __len__(self):
        return len(self.n)

    @property
    def M(self) -> int:
        return len(self.n)

    @property
    def n2(self) -> np.ndarray:
        return np.sum(self.n * self.n, axis=1)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi / self.L * self.n

    def lookup(self, n, spin) -> np.ndarray:
        """Mode indices for (n, spin) pairs; -1 where absent."""
        keys = encode(n, spin)
        pos = np.searchsorted(self._keys, keys)
        pos_c = np.minimum(pos, len(self._keys) - 1)
        found = self._keys[pos_c] == keys
        return np.where(found, self._perm[pos_c], -1)

    def index(self, n, spin) -> int:
        i = int(self.lookup(np.asarray(n)[None, :], np.array([spin]))[0])
        if i < 0:
            raise KeyError(f"mode {tuple(n)}, spin {spin} not in set")
        return i

    def of_spin(self, sigma: int) -> np.ndarray:
        return np.nonzero(self.spin == sigma)[0]

    def mask(self, indices) -> int:
        m = 0
        for i in indices:
            m |= 1 << int(i)
        return m

    def fermi_sea_mask(self) -> int:
        return self.mask(np.nonzero(self.inside)[0])

    def spin_mask(self, sigma: int) -> int:
        return self.mask(self.of_spin(sigma))

    def describe(self) -> list[tuple]:
        return [(tuple(int(x) for x in self.n[i]), int(self.spin[i]), bool(self.inside[i]))
                for i in range(self.M)]

    # ---- constructors
    @classmethod
    def from_vectors(cls, L: float, vectors_by_spin, inside_by_spin) -> "ModeSet":
        """Build from per-spin vector lists; ordering is canonicalised."""
        ns, ss, ins = [], [], []
        for sigma in (UP, DOWN):
            vec = np.asarray(vectors_by_spin[sigma], dtype=np.int64).reshape(-1, 3)
            flag = np.asarray(inside_by_spin[sigma], dtype=bool).reshape(-1)
            if vec.size == 0:
                continue
            n2 = np.sum(vec * vec, axis=1)
            order = np.lexsort((vec[:, 2], vec[:, 1], vec[:, 0], n2))
            ns.append(vec[order])
            ss.append(np.full(len(vec), sigma))
            ins.append(flag[order])
        return cls(L, np.concatenate(ns), np.concatenate(ss), np.concatenate(ins))

    @classmethod
    def from_config(cls, config: SpinConfig, shell_max_n2: int, keep=None) -> "ModeSet":
        """All of both Fermi balls plus every |n|^2 <= shell_max_n2.

        ``keep(n2, sigma)`` may drop excitation modes (ball modes are always kept).
        """
        vecs, flags = [], []
        for sigma in (UP, DOWN):
            ball = config.ball(sigma)
            n = integer_ball(max(shell_max_n2, ball.n2F))
            n2 = np.sum(n * n, axis=1)
            inside = n2 <= ball.n2F
            sel = np.ones(len(n), dtype=bool)
            if keep is not None:
                sel = inside | np.asarray(keep(n2, sigma), dtype=bool)
            vecs.append(n[sel])
            flags.append(inside[sel])
        return cls.from_vectors(config.L, vecs, flags)

    @classmethod
    def active(cls, config: SpinConfig, profiles, shell_max_n2: int) -> "ModeSet":
        """Only the modes where v^r or u^r is non-zero, up to |n|^2 <= shell_max_n2.

        Normal-ordered blocks have vanishing matrix elements between states
        that leave every other mode in its Fermi-sea occupation, so this set
        is exact for expectations in states generated by B from the vacuum.
        """
        vecs, flags = [], []
        for sigma in (UP, DOWN):
            sp = profiles.spin(sigma)
            ball = config.ball(sigma)
            n = integer_ball(max(shell_max_n2, ball.n2F))
            n2 = np.sum(n * n, axis=1)
            sel = (sp.vr(n2) > 0) | ((sp.ur(n2) > 0) & (n2 <= shell_max_n2))
            vecs.append(n[sel])
            flags.append((n2 <= ball.n2F)[sel])
        return cls.from_vectors(config.L, vecs, flags)
