"""Identity checks, norms and trial-state energies on assembled blocks."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..fock.basis import FockBasis, build_quasiparticle
from ..fock.modes import ModeSet
from ..fock.monomials import Monomials
from ..fock.ops import SparseOp, assemble
from ..kernel import build_kernel, periodize
from ..lattice import build_profiles, hf_energy, spin_config
from ..scattering import RadialPotential, reference_potential, solve_zero_energy
from .blocks import BlockKind, BlockSpec, assemble_block, block_terms, egen_weight
from .bogoliubov import bogoliubov_apply, extended_generator, trial_generator
from .inputs import Kernels, ModeProfiles, RadialKernels

log = logging.getLogger(__name__)


class NormConvergenceError(RuntimeError):
    def __init__(self, msg, estimate):
        super().__init__(msg)
        self.estimate = estimate


# ---------------------------------------------------------------- norms
def operator_norm(op, tol: float = 1e-8, maxiter: int = 20000, seed: int = 0) -> float:
    """Largest singular value by power iteration on op^* op."""
    m = op.matrix if isinstance(op, SparseOp) else op
    if m.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.normal(size=m.shape[1]) + 1j * rng.normal(size=m.shape[1])
    x /= np.linalg.norm(x)
    mh = m.conj().T.tocsr()
    lam = 0.0
    for _ in range(maxiter):
        y = mh @ (m @ x)
        lam = float(np.vdot(x, y).real)
        if lam <= 0.0:
            return 0.0
        # stop on the eigen-residual, which is much stricter than the change in lam
        if np.linalg.norm(y - lam * x) <= tol * lam:
            return float(np.sqrt(lam))
        x = y / np.linalg.norm(y)
    raise NormConvergenceError("power iteration did not converge", float(np.sqrt(max(lam, 0.0))))


# ---------------------------------------------------------------- identities
def check_h0_commutator(basis: FockBasis, mp: ModeProfiles, K: Kernels, kernel: str = "phi",
                        backend=None) -> dict:
    """|| [H0, B] - (T1 + E_gen) || / || [H0, B] || for the pair-annihilating halves.

    [H0, a1 a2 a3 a4] = -(e1 + e2 + e3 + e4) a1 a2 a3 a4 and the energy sum
    over the slots (s+p, s, s'-p, s') is 2|p|^2 + 2 p.(s - s'): the first part
    is the Laplacian block T1, the second the gradient block E_gen.
    """
    H0 = assemble_block(BlockKind.H0, basis, mp, K, backend=backend)
    Bann = assemble_block(BlockSpec(BlockKind.B, kernel=kernel), basis, mp, K, backend=backend).H
    if kernel == "phi":
        T1 = assemble_block(BlockSpec(BlockKind.T1, half=True), basis, mp, K, backend=backend)
    else:  # Laplacian block of an arbitrary kernel
        lap = lambda n: -K._p2(n) * K.get(kernel)(n)  # noqa: E731
        from .blocks import _pair_block
        mono, _ = _pair_block(mp, lap, "ur", 2.0)
        T1 = assemble(mono.canonical(), basis, backend=backend)
    Eg = assemble_block(BlockSpec(BlockKind.Egen, kernel=kernel, half=True), basis, mp, K, backend=backend)
    comm = H0.matrix @ Bann.matrix - Bann.matrix @ H0.matrix
    diff = comm - T1.matrix - Eg.matrix
    nc = float(np.sqrt(abs(comm.multiply(comm.conj())).sum()))
    nd = float(np.sqrt(abs(diff.multiply(diff.conj())).sum())) if diff.nnz else 0.0
    return {"residual": nd / nc if nc else 0.0, "commutator_norm": nc, "difference_norm": nd,
            "terms": int(Bann.matrix.nnz)}


def single_mode_commutator_coefficients(mp: ModeProfiles, K: Kernels) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of [H0, B] per monomial vs -(2|p|^2 + 2p.(s-s')) phi^(p) u v u v / L^3."""
    from .blocks import _pair_block

    mono, _ = _pair_block(mp, K.phi, "ur", 1.0)
    eps = mp.energies()
    e = eps[mono.ann[:, 0]] + eps[mono.ann[:, 1]] + eps[mono.ann[:, 2]] + eps[mono.ann[:, 3]]
    got = -e * mono.coef
    n = mp.modes.n
    s, sp_, p = n[mono.ann[:, 1]], n[mono.ann[:, 3]], n[mono.ann[:, 0]] - n[mono.ann[:, 1]]
    c = (2 * np.pi / mp.modes.L) ** 2
    want = -(2 * c * np.sum(p * p, 1) + 2 * c * np.sum(p * (s - sp_), 1)) * mono.coef
    return got, want


def derivative_check(A: SparseOp, G: SparseOp, psi, lam: float, h: float = 1e-4,
                     method: str = "krylov") -> dict:
    """Central difference of <xi_l, A xi_l> (xi_l = exp(l G) psi) against <xi_l, [A, G] xi_l>."""
    def f(t):
        xi = bogoliubov_apply(G, psi, t, method=method).state if t else np.asarray(psi, complex)
        return float(np.vdot(xi, A.matrix @ xi).real), xi

    fp, _ = f(lam + h)
    fm, _ = f(lam - h)
    _, xi = f(lam)
    fd = (fp - fm) / (2 * h)
    comm = A.matrix @ G.matrix - G.matrix @ A.matrix
    an = float(np.vdot(xi, comm @ xi).real)
    return {"finite_difference": fd, "commutator": an, "abs_error": abs(fd - an)}


def scattering_cancellation_expectation(state, basis: FockBasis, mp: ModeProfiles, K: RadialKernels,
                                        backend=None) -> dict:
    """<xi, (T1 + T2^r + tQ4^r) xi> and the per-shell kernel identity.

    The three kernels combine to -2|p|^2 phi^ - (V phi)^ + V^, compared with
    the direct transform of the renormalised interaction E at every shell
    carried by the mode set.
    """
    ops = {k: assemble_block(k, basis, mp, K, backend=backend)
           for k in (BlockKind.T1, BlockKind.T2r, BlockKind.tQ4r)}
    xi = np.asarray(state, dtype=complex)
    parts = {k.value: float(np.vdot(xi, op.matrix @ xi).real) for k, op in ops.items()}
    n = mp.modes.n
    diffs = np.unique((n[:, None, :] - n[None, :, :]).reshape(-1, 3), axis=0)
    n2 = np.unique(np.sum(diffs * diffs, axis=1))
    vec = np.zeros((len(n2), 3), dtype=np.int64)
    vec[:, 0] = 0
    shells = []
    assembled = []
    for s in n2:
        # any lattice vector with this |n|^2 works since all kernels are radial
        v = diffs[np.sum(diffs * diffs, axis=1) == s][0]
        shells.append(int(s))
        assembled.append(v)
    assembled = np.array(assembled)
    coef = 2.0 * K.lap_phi(assembled) - K.Vphi(assembled) + K.V(assembled)
    direct = K.E_direct(assembled)
    scale = np.max(np.abs(K.V(assembled))) if len(assembled) else 1.0
    nq = assemble_block(BlockKind.Ngt, basis, mp, K, backend=backend)
    ngt = float(np.vdot(xi, nq.matrix @ xi).real)
    rho = mp.config.rho if mp.config is not None else float("nan")
    return {
        "expectation": sum(parts.values()),
        "parts": parts,
        "shells": shells,
        "coefficient": coef.tolist(),
        "E_hat": direct.tolist(),
        "coefficient_residual": float(np.max(np.abs(coef - direct)) / scale) if len(coef) else 0.0,
        "reference_scale": rho**1.5 * np.sqrt(max(ngt, 0.0)) * mp.modes.L**1.5,
        "N_gt": ngt,
    }


# ---------------------------------------------------------------- states
def reduce_one_pdm(state, basis: FockBasis, backend=None) -> dict:
    """gamma_{m m'} = <a*_{m'} a_m>, trace and tr gamma (1 - omega)."""
    M = basis.modes.M
    psi = np.asarray(state, dtype=complex)
    gamma = np.zeros((M, M), dtype=complex)
    for m in range(M):
        for mp_ in range(M):
            op = assemble(Monomials.from_terms([((mp_,), (m,), 1.0)]), basis, backend=backend)
            gamma[m, mp_] = np.vdot(psi, op.matrix @ psi)
    outside = ~basis.modes.inside
    return {
        "gamma": gamma,
        "trace": float(np.trace(gamma).real),
        "trace_outside": float(np.sum(np.diag(gamma).real[outside])),
    }


def occupation_numbers(state, basis: FockBasis) -> np.ndarray:
    p = np.abs(np.asarray(state)) ** 2
    return basis.occupations().T.astype(float) @ p


def number_diagnostics(state, basis: FockBasis, mp: ModeProfiles, K: Kernels | None = None) -> dict:
    """Expectations of N, N_>, N~ and H0 plus the per-mode bound 3 kF^2 1_{|k|>=2kF} <= | |k|^2 - kF^2 |."""
    occ = occupation_numbers(state, basis)
    gt = mp.values("gt")
    til = mp.values("tilde")
    eps = mp.energies()
    m = mp.modes
    kF2 = np.where(m.spin == 0, mp.mu[0], mp.mu[1])
    per_mode = 3.0 * kF2 * gt <= eps + 1e-12 * np.maximum(eps, 1.0)
    return {
        "N": float(occ.sum()),
        "N_gt": float(occ @ gt),
        "N_tilde": float(occ @ til),
        "H0": float(occ @ eps),
        "per_mode_bound": bool(np.all(per_mode)),
        "violations": int(np.count_nonzero(~per_mode)),
    }


def lattice_gap_check(config, shell_n2: int) -> bool:
    """| |k|^2 - kF^2 | >= 3 kF^2 for every lattice |k| >= 2 kF up to ``shell_n2``."""
    ok = True
    for sigma in (0, 1):
        b = config.ball(sigma)
        n2 = np.arange(4 * b.n2F, max(shell_n2, 4 * b.n2F) + 1)
        c = (2 * np.pi / b.L) ** 2
        ok &= bool(np.all(np.abs(c * n2 - c * b.n2F) >= 3 * c * b.n2F - 1e-12))
    return ok


def approx_gs_check(psi, H_phys: SparseOp, config, C: float) -> tuple[bool, float]:
    """Defect |<psi, H psi> - sum_{k in balls} |k|^2| / (L^3 rho^2) compared with C."""
    psi = np.asarray(psi, dtype=complex)
    e = float(np.vdot(psi, H_phys.matrix @ psi).real) / float(np.vdot(psi, psi).real)
    kin = 0.0
    for sigma in (0, 1):
        b = config.ball(sigma)
        n = b.vectors
        kin += float(np.sum((2 * np.pi / b.L) ** 2 * np.sum(n * n, axis=1)))
    rho = config.rho
    defect = abs(e - kin) / (config.L**3 * rho**2)
    return defect <= C, defect


# ---------------------------------------------------------------- trial state
@dataclass
class TrialSystem:
    config: object
    profiles: object
    kernel: object
    periodic: object
    kernels: RadialKernels
    modes: ModeSet
    mp: ModeProfiles
    basis: FockBasis
    params: dict = field(default_factory=dict)


def build_trial_system(rho_up: float, rho_down: float, L: float, cap: int | None = 4,
                       eps: float = 1.0, beta: float = 0.25, eta: float = 0.4,
                       potential: RadialPotential | None = None, shell_max_n2: int | None = None,
                       max_modes: int = 64, profile: str = "exp", check_band: bool = True) -> TrialSystem:
    """Configuration, cutoff profiles, kernel and the active mode set at one density.

    Only modes with v^r > 0 or u^r > 0 enter (all blocks are normal ordered,
    so expectations in states generated from the vacuum by B are exact on
    this set).  ``shell_max_n2`` truncates the u^r support; by default the
    largest shell that keeps the mode count within ``max_modes``.
    """
    V = potential or reference_potential()
    config = spin_config(L, rho_up, rho_down)
    profiles = build_profiles(config, eps, beta, check=check_band)
    kern = build_kernel(V, config.rho, profile)
    if shell_max_n2 is None:
        shell_max_n2 = _largest_shell(config, profiles, max_modes)
    modes = ModeSet.active(config, profiles, shell_max_n2)
    pk = periodize(kern, L, shell_cutoff=2 * np.pi / L * np.sqrt(4 * shell_max_n2) + 1e-9,
                   require_single_image=False)
    K = RadialKernels(L, V, pk)
    mp = ModeProfiles(modes, profiles, config, eta=eta)
    basis = build_quasiparticle(modes, cap, balanced=True, max_modes=max_modes)
    return TrialSystem(config, profiles, kern, pk, K, modes, mp, basis,
                       {"rho_up": rho_up, "rho_down": rho_down, "L": L, "cap": cap, "eps": eps,
                        "beta": beta, "eta": eta, "shell_max_n2": shell_max_n2})


def _largest_shell(config, profiles, max_modes: int) -> int:
    from ..lattice import integer_ball

    best = 0
    n2F = max(config.up.n2F, config.down.n2F)
    for s in range(4 * n2F + 1, 4 * n2F + 400):
        count = 0
        for sigma in (0, 1):
            sp = profiles.spin(sigma)
            n = integer_ball(s)
            n2 = np.sum(n * n, axis=1)
            count += int(np.count_nonzero((sp.vr(n2) > 0) | (sp.ur(n2) > 0)))
        if count > max_modes:
            break
        best = s
    return best


@dataclass
class TrialEnergyReport:
    rho_up: float
    rho_down: float
    L: float
    cap: int | None
    pieces: dict
    correlation: float
    total: float
    predicted_first_order: float
    leakage: float
    dims: dict
    checks: dict
    params: dict

    def as_dict(self) -> dict:
        return asdict(self)


def trial_energy(rho_up: float, rho_down: float, L: float, cap: int | None = 4, eps: float = 1.0,
                 beta: float = 0.25, potential: RadialPotential | None = None, lam: float = 1.0,
                 system: TrialSystem | None = None, backend=None, **kw) -> TrialEnergyReport:
    """E_HF + <T Omega, H_corr T Omega> piece by piece for the trial state R T Omega."""
    V = potential or reference_potential()
    sysm = system or build_trial_system(rho_up, rho_down, L, cap, eps, beta, potential=V, **kw)
    basis, mp, K = sysm.basis, sysm.mp, sysm.kernels
    G = trial_generator(basis, mp, K, backend=backend)
    Gext = extended_generator(basis, mp, K, backend=backend) if lam else None
    res = bogoliubov_apply(G, basis.vacuum(), lam, leakage_op=Gext)
    xi = res.state
    hf = hf_energy(sysm.config, V)
    pieces = {"E_HF": hf.total}
    closure = 0
    for k in (BlockKind.H0, BlockKind.X, BlockKind.Q1, BlockKind.Q2, BlockKind.Q3, BlockKind.Q4):
        op = assemble_block(k, basis, mp, K, backend=backend)
        closure += op.closure_dropped
        pieces[k.value] = float(np.vdot(xi, op.matrix @ xi).real)
    corr = sum(v for k, v in pieces.items() if k != "E_HF")
    tq3 = assemble_block(BlockKind.tQ3, basis, mp, K, backend=backend)
    ivphi = sysm.kernel.integral_V_phi()
    a = sysm.kernel.sol.a
    rho_r = [float(np.sum(mp.values("vr")[mp.modes.spin == sg] ** 2)) / L**3 for sg in (0, 1)]
    checks = {
        "Q3": pieces["Q3"],
        # only v^r-weighted holes take part in B; this is the finite-size slack
        "rho_r": rho_r,
        "predicted_active": -rho_r[0] * rho_r[1] * ivphi * L**3,
        "tQ3": float(np.vdot(xi, tq3.matrix @ xi).real),
        "norm": res.norm,
        "closure_dropped": closure,
        "generator_closure_dropped": G.closure_dropped,
        "kinetic": hf.kinetic,
        "scattering_length": a,
        "residual_per_volume": (hf.total + corr) / L**3 - hf.kinetic / L**3 - 8 * np.pi * a * sysm.config.up.rho * sysm.config.down.rho,
    }
    log.info("trial rho=(%g,%g) L=%g corr=%.6e predicted=%.6e leakage=%.2e", rho_up, rho_down, L, corr,
             -rho_up * rho_down * ivphi * L**3, res.leakage)
    return TrialEnergyReport(rho_up, rho_down, L, cap, pieces, corr, hf.total + corr,
                             -sysm.config.up.rho * sysm.config.down.rho * ivphi * L**3, res.leakage,
                             {"modes": sysm.modes.M, "basis": basis.dim}, checks, sysm.params)


def sector_trial_energy(rho_up: float, rho_down: float, L: float, eps: float = 1.0, beta: float = 0.25,
                        potential: RadialPotential | None = None, lam: float = 1.0,
                        shell_max_n2: int | None = None, profile: str = "exp") -> TrialEnergyReport:
    """Trial energy over the full u^r support through the one-hole pair sector.

    Exact for closed shells |n|^2 <= 1, where v^r lives on k = 0 alone; it
    agrees with the Fock route whenever both fit (see the test suite).
    """
    from .sector import radial_table, sector_energy, sector_support

    V = potential or reference_potential()
    config = spin_config(L, rho_up, rho_down)
    profiles = build_profiles(config, eps, beta, check=False)
    kern = build_kernel(V, config.rho, profile)
    _, _, nmax = sector_support(config, profiles, shell_max_n2)
    n2max = 12 * nmax * nmax
    Vt = radial_table(V.fourier, L, n2max)
    Pt = radial_table(kern.fourier, L, n2max)
    rep = sector_energy(config, profiles, lambda n2: Vt[n2], lambda n2: Pt[n2], lam, shell_max_n2)
    hf = hf_energy(config, V)
    ivphi = kern.integral_V_phi()
    rho_r = [float(profiles.spin(s).vr(0)) ** 2 / L**3 for s in (0, 1)]
    a = kern.sol.a
    corr = rep.correlation
    pieces = {"E_HF": hf.total, **rep.pieces}
    checks = {
        "Q3": 0.0,
        "rho_r": rho_r,
        "predicted_active": -rho_r[0] * rho_r[1] * ivphi * L**3,
        "theta": rep.theta,
        "kinetic": hf.kinetic,
        "scattering_length": a,
        "residual_per_volume": (hf.total + corr) / L**3 - hf.kinetic / L**3
        - 8 * np.pi * a * config.up.rho * config.down.rho,
        "method": rep.method,
    }
    log.info("sector trial rho=%g L=%g modes=%d corr=%.6e", config.rho, L, rep.modes, corr)
    return TrialEnergyReport(config.up.rho, config.down.rho, L, None, pieces, corr, hf.total + corr,
                             -config.up.rho * config.down.rho * ivphi * L**3, 0.0,
                             {"modes": rep.modes, "basis": 2}, checks,
                             {"eps": eps, "beta": beta, "lam": lam, "shell_max_n2": shell_max_n2,
                              "route": "sector"})
