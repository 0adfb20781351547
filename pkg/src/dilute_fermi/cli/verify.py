"""Exact-identity suite behind the ``verify`` subcommand.

Every check compares two independently computed quantities and returns the
discrepancy with its tolerance.  The systems are small enough for the whole
suite to run in about twenty seconds.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from ..correlation import blocks as bl
from ..correlation import bogoliubov as bg
from ..correlation import diagnostics as dg
from ..correlation.inputs import FunctionKernels, ModeProfiles, RadialKernels, TableKernels
from ..correlation.position import PositionOracle, oracle_block
from ..correlation.sector import sector_energy
from ..fock import (
    FockBasis,
    ModeSet,
    annihilation,
    build_basis,
    build_quasiparticle,
    creation,
    particle_hole,
    physical_hamiltonian,
)
from ..lattice import ball_config, hf_energy, integer_ball
from ..scattering import reference_potential
from . import report

log = logging.getLogger("dilute_fermi.verify")

L_TEST = 2 * np.pi * 1.3


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def _check(name, value, tol, **detail):
    value = float(value)
    return Check(name, value, tol, bool(np.isfinite(value) and value <= tol), detail=detail)


def _sym_table(rng, scale=1.0, reach=1):
    """Random even table q -> c(q) = c(-q) on the cube |q_i| <= 2 reach."""
    t = {}
    for q in itertools.product(range(-2 * reach, 2 * reach + 1), repeat=3):
        if q not in t:
            c = scale * rng.normal()
            t[q] = c
            t[tuple(-x for x in q)] = c
    return t


def small_system(seed: int = 1, scale: float = 300.0):
    """Six modes per spin, two holes each, random profiles and random even kernels."""
    rng = np.random.default_rng(seed)
    vec = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [-1, 0, 0], [2, 0, 0]])
    inside = [1, 1, 0, 0, 0, 0]
    modes = ModeSet.from_vectors(L_TEST, [vec, vec], [inside, inside])
    M = modes.M
    u = (~modes.inside).astype(float)
    tab = {"ur": rng.uniform(0.2, 1, M) * u, "vr": rng.uniform(0.2, 1, M) * (1 - u), "u_lt": 0.5 * u,
           "u_gt": 0.5 * u, "gt": u, "tilde": u}
    K = TableKernels(L_TEST, _sym_table(rng, scale, 2), _sym_table(rng, scale, 2))
    mp = ModeProfiles(modes, table=tab, mu=((2 * np.pi / L_TEST) ** 2,) * 2)
    basis = build_quasiparticle(modes, None, balanced=True)
    return basis, mp, K


# ---------------------------------------------------------------- checks
def check_car(n_modes: int = 12) -> Check:
    """{a_i, a_j^*} = delta_ij and {a_i, a_j} = 0 on the full Fock space."""
    vec = integer_ball(2)[: n_modes // 2]
    modes = ModeSet.from_vectors(L_TEST, [vec, vec], [np.zeros(len(vec), bool)] * 2)
    basis = build_quasiparticle(modes, None, balanced=False)
    a = [annihilation(basis, m).matrix for m in range(modes.M)]
    ad = [creation(basis, m).matrix for m in range(modes.M)]
    eye = sp.identity(basis.dim, format="csr")
    worst = 0.0
    for i in range(modes.M):
        for j in range(modes.M):
            d = a[i] @ ad[j] + ad[j] @ a[i] - (eye if i == j else 0 * eye)
            e = a[i] @ a[j] + a[j] @ a[i]
            worst = max(worst, abs(d).max() if d.nnz else 0.0, abs(e).max() if e.nnz else 0.0)
    return _check("car", worst, 1e-12, modes=modes.M, dim=basis.dim)


def check_relabel() -> Check:
    """R^* c_m R equals a_m^* inside the ball and a_m outside."""
    vec_up = np.array([[0, 0, 0], [1, 0, 0], [-1, 0, 0]])
    vec_dn = vec_up[:2]
    modes = ModeSet.from_vectors(L_TEST, [vec_up, vec_dn], [[1, 0, 0], [1, 0]])
    quasi = build_quasiparticle(modes, None, balanced=False)
    # both frames hold every state, so R acts on the full Fock space
    phys = FockBasis(modes, quasi.states.copy(), "physical", {})
    R = particle_hole(phys, quasi)
    worst = 0.0
    for m in range(modes.M):
        c = annihilation(phys, m).matrix
        got = R.conjugate(c)
        want = (creation if modes.inside[m] else annihilation)(quasi, m).matrix
        d = got - want
        worst = max(worst, abs(d).max() if d.nnz else 0.0)
    return _check("relabel", worst, 0.0, modes=modes.M)


def check_sea_energy() -> Check:
    """<R Omega, H R Omega> = E_HF with two modes per spin."""
    V = reference_potential()
    L = 3.0
    vec = np.array([[0, 0, 0], [1, 0, 0]])
    modes = ModeSet.from_vectors(L, [vec, vec], [[1, 0], [1, 0]])
    phys = build_basis(modes, "physical", N=(1, 1))
    quasi = build_basis(modes, "quasiparticle", balanced=True)
    R = particle_hole(phys, quasi)
    H = physical_hamiltonian(phys, RadialKernels(L, V).V)
    psi = R.to_physical(quasi.vacuum())
    e = float(np.vdot(psi, H.matrix @ psi).real)
    ehf = hf_energy(ball_config(L, 0, 0), V).total
    return _check("sea_energy", abs(e - ehf) / max(abs(ehf), 1.0), 1e-10, energy=e, hf=ehf)


def check_hcorr() -> Check:
    """R^* H R - E_HF - H_corr = 0 on the balanced sector."""
    V = reference_potential()
    L = 3.0
    cfg = ball_config(L, 1, 0)
    up = np.vstack([integer_ball(1), [[1, 1, 0], [-1, -1, 0], [0, 1, 1]]])
    dn = np.array([[0, 0, 0], [1, 0, 0], [0, -1, 0], [1, 1, 0], [0, 0, 1]])
    modes = ModeSet.from_vectors(L, [up, dn], [np.sum(up**2, 1) <= 1, np.sum(dn**2, 1) <= 0])
    K = RadialKernels(L, V)
    phys = build_basis(modes, "physical", N=(7, 1))
    quasi = build_basis(modes, "quasiparticle", balanced=True)
    R = particle_hole(phys, quasi)
    Hq = R.conjugate(physical_hamiltonian(phys, K.V).matrix)
    ehf = hf_energy(cfg, V).total
    Hc = bl.correlation_hamiltonian(quasi, ModeProfiles(modes, config=cfg), K)
    D = Hq - ehf * sp.identity(quasi.dim) - Hc.matrix
    return _check("hcorr_identity", abs(D).max() if D.nnz else 0.0, 1e-10, dim=quasi.dim)


def check_oracle(grid: int = 6, seed: int = 1) -> Check:
    """Every block against the position-space quadrature oracle (8 modes)."""
    rng = np.random.default_rng(seed)
    vec = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    modes = ModeSet.from_vectors(L_TEST, [vec, vec], [[1, 0, 0, 0], [1, 0, 0, 0]])
    M = modes.M
    u = (~modes.inside).astype(float)
    ult = u * rng.uniform(0, 1, M)
    tab = {"ur": rng.uniform(0.2, 1, M), "vr": rng.uniform(0.2, 1, M), "u_lt": ult, "u_gt": u - ult,
           "gt": (rng.uniform(0, 1, M) > 0.5) * 1.0, "tilde": (rng.uniform(0, 1, M) > 0.5) * 1.0}
    Vt, phit = _sym_table(rng), _sym_table(rng)
    mu = (0.5 * (2 * np.pi / L_TEST) ** 2,) * 2
    mp = ModeProfiles(modes, table=tab, mu=mu)
    K = TableKernels(L_TEST, Vt, phit)
    basis = build_basis(modes, "quasiparticle")
    o = PositionOracle(modes, tab, Vt, phit, mu, grid=grid)
    skip = (bl.BlockKind.Nsigma, bl.BlockKind.PairOp, bl.BlockKind.BPhi)
    specs = [bl.BlockSpec(k) for k in bl.BlockKind if k not in skip]
    specs += [bl.BlockSpec(bl.BlockKind.Nsigma, sigma=1), bl.BlockSpec(bl.BlockKind.PairOp, sigma=0, p=(1, -1, 0)),
              bl.BlockSpec(bl.BlockKind.BPhi, sigma=1, z=(0.3, 1.1, -0.4))]
    per = {}
    for s in specs:
        A = bl.assemble_block(s, basis, mp, K).toarray()
        B = oracle_block(o, s).toarray()
        per[s.kind.value] = float(np.abs(A - B).max())
    return _check("assembly_oracle", max(per.values()), 1e-8, per_block=per)


def check_commutators(seed: int = 1) -> list[Check]:
    """[H0, B] = T1/2 + Egen/2 on three configurations."""
    out = []
    basis, mp, K = small_system(seed)
    out.append(_check("commutator_table", dg.check_h0_commutator(basis, mp, K)["residual"], 1e-10))
    rng = np.random.default_rng(seed + 7)
    amp, width = rng.uniform(50, 300, 2), rng.uniform(1, 4, 2)
    Kf = FunctionKernels(L_TEST, V=lambda n: amp[0] * np.exp(-np.sum(n * n, -1) / width[0]),
                         phi=lambda n: amp[1] * np.exp(-np.sum(n * n, -1) / width[1]) * (1 + 0.3 * np.cos(np.sum(n * n, -1))))
    out.append(_check("commutator_function", dg.check_h0_commutator(basis, mp, Kf)["residual"], 1e-10))
    rho = 1e-2
    s = dg.build_trial_system(rho / 2, rho / 2, (7 / (rho / 2)) ** (1 / 3), cap=4, shell_max_n2=5,
                              check_band=False)
    out.append(_check("commutator_physical", dg.check_h0_commutator(s.basis, s.mp, s.kernels)["residual"], 1e-10,
                      dim=s.basis.dim))
    return out


def check_bogoliubov(seed: int = 1) -> list[Check]:
    basis, mp, K = small_system(seed)
    G = bg.trial_generator(basis, mp, K)
    v0 = basis.vacuum()
    a = bg.bogoliubov_apply(G, v0, 0.7, "krylov")
    b = bg.bogoliubov_apply(G, v0, 0.7, "dense")
    rho = 1e-2
    s = dg.build_trial_system(rho / 2, rho / 2, (7 / (rho / 2)) ** (1 / 3), cap=4, shell_max_n2=5,
                              check_band=False)
    Gs = bg.trial_generator(s.basis, s.mp, s.kernels)
    r = bg.bogoliubov_apply(Gs, s.basis.vacuum(), 1.0, leakage_op=bg.extended_generator(s.basis, s.mp, s.kernels))
    return [
        _check("bogoliubov_norm", abs(a.norm - 1.0), 1e-10),
        _check("krylov_vs_dense", np.abs(a.state - b.state).max(), 1e-8, dim=basis.dim),
        _check("leakage", r.leakage, 1e-12, dim=s.basis.dim, norm=r.norm),
    ]


def check_spin(seed: int = 1) -> list[Check]:
    basis, mp, K = small_system(seed)
    G = bg.trial_generator(basis, mp, K)
    S = bg.spin_operator(basis)
    C = G.matrix @ S.matrix - S.matrix @ G.matrix
    xi = bg.bogoliubov_apply(G, basis.vacuum(), 0.7).state
    Q3 = bl.assemble_block(bl.BlockKind.Q3, basis, mp, K)
    return [
        _check("spin_commutator", abs(C).max() if C.nnz else 0.0, 0.0),
        _check("Q3_expectation", abs(np.vdot(xi, Q3.matrix @ xi)), 1e-10),
    ]


def check_derivatives(seed: int = 1) -> list[Check]:
    basis, mp, K = small_system(seed)
    G = bg.trial_generator(basis, mp, K)
    out = []
    for k in (bl.BlockKind.N, bl.BlockKind.Ngt, bl.BlockKind.H0, bl.BlockKind.tQ1):
        A = bl.assemble_block(k, basis, mp, K)
        r = dg.derivative_check(A, G, basis.vacuum(), 0.5)
        scale = max(1.0, abs(r["commutator"]))
        out.append(_check(f"derivative_{k.value}", r["abs_error"] / scale, 1e-6, **r))
    return out


def check_sector(rho: float = 1e-2, lam: float = 40.0) -> Check:
    """The one-hole sector formula against the Fock-space route."""
    L = (7 / (rho / 2)) ** (1 / 3)
    s = dg.build_trial_system(rho / 2, rho / 2, L, cap=4, shell_max_n2=5, check_band=False)
    r = dg.trial_energy(rho / 2, rho / 2, L, cap=4, system=s, lam=lam)
    V = reference_potential()
    vf = lambda n2: V.fourier(2 * np.pi / L * np.sqrt(np.asarray(n2, float)))  # noqa: E731
    pf = lambda n2: s.kernel.fourier(2 * np.pi / L * np.sqrt(np.asarray(n2, float)))  # noqa: E731
    sr = sector_energy(s.config, s.profiles, vf, pf, lam=lam, shell_max_n2=5)
    diff = max(abs(r.pieces[k] - sr.pieces[k]) for k in sr.pieces)
    return _check("sector_vs_fock", diff / max(abs(r.correlation), 1e-300), 1e-8,
                  fock=r.correlation, sector=sr.correlation)


SUITE = {
    "car": lambda: [check_car()],
    "relabel": lambda: [check_relabel()],
    "sea_energy": lambda: [check_sea_energy()],
    "hcorr": lambda: [check_hcorr()],
    "oracle": lambda: [check_oracle()],
    "commutator": check_commutators,
    "bogoliubov": check_bogoliubov,
    "spin": check_spin,
    "derivative": check_derivatives,
    "sector": lambda: [check_sector()],
}


def run_verify(only=None) -> list[Check]:
    results = []
    for name, fn in SUITE.items():
        if only and name not in only:
            continue
        t = time.perf_counter()
        try:
            checks = fn()
        except Exception as exc:  # report, do not abort the suite
            checks = [Check(name, float("nan"), 0.0, False, detail={"error": f"{type(exc).__name__}: {exc}"})]
        dt = time.perf_counter() - t
        for c in checks:
            c.seconds = dt / len(checks)
            lvl = logging.INFO if c.passed else logging.ERROR
            log.log(lvl, report.kv("check", name=c.name, residual=c.value, tol=c.tol,
                                   status="PASS" if c.passed else "FAIL"))
        results.extend(checks)
    return results


def format_table(checks) -> str:
    w = max(len(c.name) for c in checks)
    lines = [f"{'check':{w}s}  {'residual':>11s}  {'tol':>9s}  status"]
    for c in checks:
        lines.append(f"{c.name:{w}s}  {c.value:11.3e}  {c.tol:9.1e}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
