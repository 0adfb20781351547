"""Occupation-number bases over a ModeSet, stored as sorted uint64 masks."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .modes import DOWN, UP, ModeSet

DEFAULT_MAX_MODES = 40
DEFAULT_MAX_DIM = 2_000_000


class BasisError(ValueError):
    pass


def popcount(x: np.ndarray) -> np.ndarray:
    """Bit count of uint64 masks."""
    x = np.asarray(x, dtype=np.uint64)
    return np.bitwise_count(x).astype(np.int64) if hasattr(np, "bitwise_count") else _popcount_fallback(x)


def _popcount_fallback(x):
    x = x.copy()
    c = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        c += (x & np.uint64(1)).astype(np.int64)
        x >>= np.uint64(1)
    return c


def _subset_masks(indices, k: int) -> np.ndarray:
    """uint64 masks of all k-subsets of ``indices``."""
    idx = [int(i) for i in indices]
    if k == 0:
        return np.zeros(1, dtype=np.uint64)
    if k > len(idx):
        return np.zeros(0, dtype=np.uint64)
    bits = [1 << i for i in idx]
    return np.fromiter((sum(c) for c in combinations(bits, k)), dtype=np.uint64,
                       count=comb(len(idx), k))


def _outer_or(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, None] | b[None, :]).ravel()


@dataclass
class FockBasis:
    modes: ModeSet
    states: np.ndarray
    frame: str
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.states.size)

    def __len__(self):
        return self.dim

    def index(self, masks) -> np.ndarray:
        """Positions of masks in the basis; -1 where absent."""
        masks = np.asarray(masks, dtype=np.uint64)
        pos = np.searchsorted(self.states, masks)
        pos_c = np.minimum(pos, self.dim - 1)
        return np.where(self.states[pos_c] == masks, pos_c, -1)

    def vacuum(self) -> np.ndarray:
        """Unit vector on the all-empty mask (the quasiparticle vacuum)."""
        i = int(self.index(np.array([0], dtype=np.uint64))[0])
        if i < 0:
            raise BasisError("vacuum is not in this basis")
        v = np.zeros(self.dim, dtype=complex)
        v[i] = 1.0
        return v

    def basis_vector(self, mask: int) -> np.ndarray:
        i = int(self.index(np.array([mask], dtype=np.uint64))[0])
        if i < 0:
            raise BasisError(f"state {mask:#x} is not in this basis")
        v = np.zeros(self.dim, dtype=complex)
        v[i] = 1.0
        return v

    def occupations(self) -> np.ndarray:
        """(dim, M) 0/1 occupation table."""
        m = np.arange(self.modes.M, dtype=np.uint64)
        return ((self.states[:, None] >> m[None, :]) & np.uint64(1)).astype(np.int8)

    def quasiparticle_numbers(self) -> np.ndarray:
        return popcount(self.states)


def _check_modes(modes: ModeSet, max_modes: int):
    if modes.M > min(max_modes, 64):
        raise BasisError(f"{modes.M} modes exceed the configured limit {min(max_modes, 64)}")


def physical_dimension(modes: ModeSet, N_up: int, N_down: int) -> int:
    return comb(len(modes.of_spin(UP)), N_up) * comb(len(modes.of_spin(DOWN)), N_down)


def build_physical(modes: ModeSet, N_up: int, N_down: int, max_modes: int = DEFAULT_MAX_MODES,
                   max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    """All occupations with N_up and N_down particles."""
    _check_modes(modes, max_modes)
    dim = physical_dimension(modes, N_up, N_down)
    if dim > max_dim:
        raise BasisError(f"basis dimension {dim} exceeds the limit {max_dim}")
    up = _subset_masks(modes.of_spin(UP), N_up)
    dn = _subset_masks(modes.of_spin(DOWN), N_down)
    states = np.sort(_outer_or(up, dn))
    return FockBasis(modes, states, "physical", {"N_up": N_up, "N_down": N_down})


def _qp_blocks(modes: ModeSet, cap: int | None, balanced: bool):
    """Enumerate (masks-by-spin) blocks in the particle-hole frame."""
    blocks = []
    M = modes.M
    cap = M if cap is None else cap
    if not balanced:
        for j in range(0, min(cap, M) + 1):
            blocks.append(("all", j))
        return blocks
    per_spin = []
    for sigma in (UP, DOWN):
        idx = modes.of_spin(sigma)
        ins = idx[modes.inside[idx]]
        out = idx[~modes.inside[idx]]
        per_spin.append((ins, out))
    for pu in range(0, min(len(per_spin[0][0]), len(per_spin[0][1])) + 1):
        for pd in range(0, min(len(per_spin[1][0]), len(per_spin[1][1])) + 1):
            if 2 * (pu + pd) <= cap:
                blocks.append(("bal", pu, pd, per_spin))
    return blocks


def quasiparticle_dimension(modes: ModeSet, cap: int | None, balanced: bool = False) -> int:
    total = 0
    for b in _qp_blocks(modes, cap, balanced):
        if b[0] == "all":
            total += comb(modes.M, b[1])
        else:
            _, pu, pd, ps = b
            total += (comb(len(ps[0][0]), pu) * comb(len(ps[0][1]), pu)
                      * comb(len(ps[1][0]), pd) * comb(len(ps[1][1]), pd))
    return total


def build_quasiparticle(modes: ModeSet, cap: int | None = None, balanced: bool = False,
                        max_modes: int = DEFAULT_MAX_MODES, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    """Particle-hole frame basis with at most ``cap`` quasiparticles.

    ``balanced`` keeps only states with as many particles as holes in each
    spin, which is the image of the fixed-particle-number physical sector.
    """
    _check_modes(modes, max_modes)
    if cap is not None and cap % 2:
        raise BasisError("quasiparticle cap must be even")
    dim = quasiparticle_dimension(modes, cap, balanced)
    if dim > max_dim:
        raise BasisError(f"basis dimension {dim} exceeds the limit {max_dim}")
    parts = []
    for b in _qp_blocks(modes, cap, balanced):
        if b[0] == "all":
            parts.append(_subset_masks(range(modes.M), b[1]))
        else:
            _, pu, pd, ps = b
            up = _outer_or(_subset_masks(ps[0][0], pu), _subset_masks(ps[0][1], pu))
            dn = _outer_or(_subset_masks(ps[1][0], pd), _subset_masks(ps[1][1], pd))
            parts.append(_outer_or(up, dn))
    states = np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.uint64)
    return FockBasis(modes, states, "quasiparticle", {"cap": cap, "balanced": balanced})


def build_basis(modes: ModeSet, frame: str = "quasiparticle", *, N=None, cap=None,
                balanced: bool = False, max_modes: int = DEFAULT_MAX_MODES,
                max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    """Dispatch on ``frame``: "physical" needs N=(N_up, N_down), "quasiparticle" takes cap."""
    if frame == "physical":
        if N is None:
            raise BasisError("physical frame needs particle numbers")
        return build_physical(modes, int(N[0]), int(N[1]), max_modes, max_dim)
    if frame == "quasiparticle":
        return build_quasiparticle(modes, cap, balanced, max_modes, max_dim)
    raise BasisError(f"unknown frame {frame!r}")
