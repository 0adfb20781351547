"""Density sweeps: one CSV row per (density, quantity), then log-log fits."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..correlation.diagnostics import sector_trial_energy, trial_energy
from ..correlation.norms import b_norm
from ..kernel import build_kernel, cancellation_residual, decay_profile, periodize, scattering_identity
from ..lattice import build_profiles, hf_energy, spin_config
from . import report
from .fit import FitError, fit_exponent

log = logging.getLogger("dilute_fermi.sweep")

# exponents in rho expected from the kernel bounds and the energy expansion
FIT_REFERENCES = {
    "kernel.phi_1": -2.0 / 3.0,
    "kernel.grad_phi_1": -1.0 / 3.0,
    "kernel.phi_2": -1.0 / 6.0,
    "kernel.lap_phi_1": 0.0,
    "bnorm.phi": 1.0 / 3.0,
    "trial.residual": 7.0 / 3.0,
}


def radial_lookup(fn, L: float):
    """Memoized map from integer |n|^2 arrays to fn(2 pi sqrt(n2) / L)."""
    cache: dict[int, float] = {}

    def g(n2):
        n2 = np.asarray(n2)
        u, inv = np.unique(n2, return_inverse=True)
        new = [int(x) for x in u if int(x) not in cache]
        if new:
            vals = np.atleast_1d(fn(2 * np.pi / L * np.sqrt(np.array(new, dtype=float))))
            cache.update(zip(new, (float(v) for v in vals)))
        return np.array([cache[int(x)] for x in u])[inv].reshape(n2.shape)

    return g


# ---------------------------------------------------------------- quantity groups
def _kernel(cfg, rho_up, rho_down, L):
    V = cfg.make_potential()
    rho = rho_up + rho_down
    k = build_kernel(V, rho)
    nm = k.norms()
    out = [(f"kernel.{n}", nm[n]) for n in ("phi_1", "grad_phi_1", "phi_2", "lap_phi_1")]
    pk = periodize(k, L, beta=cfg.beta, require_single_image=not cfg.allow_image_overlap)
    out += [(f"kernel.C{n}", decay_profile(pk, n)) for n in (2, 3, 4)]
    out.append(("kernel.cancellation_residual", cancellation_residual(k)))
    lhs, rhs = scattering_identity(k)
    out.append(("kernel.identity_rel", abs(lhs - rhs) / rhs if rhs else abs(lhs)))
    return rho, out


def _hf(cfg, rho_up, rho_down, L):
    V = cfg.make_potential()
    c = spin_config(L, rho_up, rho_down)
    hf = hf_energy(c, V)
    V0 = float(V.fourier(0.0))
    lead = V0 * c.up.rho * c.down.rho
    ratio = hf.per_volume["interaction"] / lead if lead else 0.0
    return c.rho, [("hf.interaction_ratio", ratio), ("hf.kinetic_per_volume", hf.per_volume["kinetic"])]


def _bnorm(cfg, rho_up, rho_down, L):
    V = cfg.make_potential()
    c = spin_config(L, rho_up, rho_down)
    prof = build_profiles(c, cfg.eps, cfg.beta, check=False)
    k = build_kernel(V, c.rho)
    vals = {}
    for name, fn in (("phi", k.fourier), ("E", k.E_fourier), ("V", V.fourier)):
        vals[name] = b_norm(c, prof, radial_lookup(fn, L))["norm"]
    # translation by z only multiplies C by phases on both sides
    shifted = b_norm(c, prof, radial_lookup(k.fourier, L), z=(0.37, -1.1, 2.3))["norm"]
    out = [(f"bnorm.{n}", v) for n, v in vals.items()]
    out.append(("bnorm.E_over_V", vals["E"] / vals["V"] if vals["V"] else 0.0))
    out.append(("bnorm.z_shift_rel", abs(shifted - vals["phi"]) / vals["phi"] if vals["phi"] else 0.0))
    return c.rho, out


def _trial_rows(rep, prefix):
    ch = rep.checks
    return [
        (f"{prefix}.correlation_per_volume", rep.correlation / rep.L**3),
        (f"{prefix}.predicted_per_volume", rep.predicted_first_order / rep.L**3),
        (f"{prefix}.predicted_active_per_volume", ch["predicted_active"] / rep.L**3),
        (f"{prefix}.residual", ch["residual_per_volume"]),
        (f"{prefix}.Q3", ch["Q3"]),
        (f"{prefix}.leakage", rep.leakage),
    ]


def _trial(cfg, rho_up, rho_down, L):
    rep = sector_trial_energy(rho_up, rho_down, L, cfg.eps, cfg.beta, cfg.make_potential())
    return rep.rho_up + rep.rho_down, _trial_rows(rep, "trial")


def _trial_fock(cfg, rho_up, rho_down, L):
    rep = trial_energy(rho_up, rho_down, L, cfg.cap_value, cfg.eps, cfg.beta, cfg.make_potential(),
                       eta=cfg.eta)
    rows = _trial_rows(rep, "trial_fock")
    rows.append(("trial_fock.closure_dropped", float(rep.checks["closure_dropped"])))
    return rep.rho_up + rep.rho_down, rows


QUANTITIES = {
    "kernel": _kernel,
    "hf": _hf,
    "bnorm": _bnorm,
    "trial": _trial,
    "trial_fock": _trial_fock,
}


# ---------------------------------------------------------------- driver
def _point(args):
    cfg, rho_up, rho_down = args
    L = cfg.box(rho_up, rho_down)
    rows = []
    for q in cfg.quantities:
        try:
            rho, vals = QUANTITIES[q](cfg, rho_up, rho_down, L)
            for name, v in vals:
                rows.append(dict(rho_up=rho_up, rho_down=rho_down, rho=rho, L=L, quantity=name,
                                 value=float(v), status="ok", message=""))
        except Exception as exc:  # a failing row must not stop the sweep
            rows.append(dict(rho_up=rho_up, rho_down=rho_down, rho=rho_up + rho_down, L=L, quantity=q,
                             value=None, status="error", message=f"{type(exc).__name__}: {exc}"))
    return rows


@dataclass
class SweepResult:
    rows: list
    fits: list
    out: Path | None = None
    failed: int = 0
    paths: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def values(self, quantity: str) -> list:
        return [(r["rho"], r["value"]) for r in self.rows if r["quantity"] == quantity and r["status"] == "ok"]


def compute_fits(rows) -> list:
    names = sorted({r["quantity"] for r in rows if r["status"] == "ok"})
    fits = []
    for q in names:
        pts = [(r["rho"], r["value"]) for r in rows
               if r["quantity"] == q and r["status"] == "ok" and math.isfinite(r["value"])]
        if q not in FIT_REFERENCES and not any(v for _, v in pts):
            continue
        try:
            fits.append(fit_exponent(pts, q, FIT_REFERENCES.get(q)).as_dict())
        except FitError as exc:
            if q in FIT_REFERENCES:
                fits.append({"quantity": q, "reference": FIT_REFERENCES[q], "error": str(exc)})
    return fits


def run_sweep(cfg, out=None, write: bool = True) -> SweepResult:
    """Evaluate every quantity at every density and fit exponents.

    Points run in a process pool when ``workers > 1``; rows are merged in
    density order, so the CSV does not depend on scheduling.
    """
    cfg.validate()
    text = cfg.to_toml()
    rid = report.run_id(text)
    np.random.seed(cfg.seed)
    pts = sorted((float(a), float(b)) for a, b in cfg.densities)
    jobs = [(cfg, a, b) for a, b in pts]
    log.info(report.kv("sweep_start", points=len(jobs), quantities=",".join(cfg.quantities)))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, os.cpu_count() or 1)) as ex:
            results = list(ex.map(_point, jobs))
    else:
        results = [_point(j) for j in jobs]
    rows = [r for point in results for r in point]
    failed = 0
    for r in rows:
        if r["status"] == "ok":
            log.info(report.kv("row", rho=r["rho"], quantity=r["quantity"], value=r["value"]))
        else:
            failed += 1
            log.error(report.kv("row_failed", rho=r["rho"], quantity=r["quantity"], error=repr(r["message"])))
    fits = compute_fits(rows)
    for f in fits:
        if "error" in f:
            log.warning(report.kv("fit_failed", quantity=f["quantity"], error=repr(f["error"])))
        else:
            log.info(report.kv("fit", quantity=f["quantity"], exponent=f["exponent"], stderr=f["stderr"],
                               reference=f["reference"]))
    res = SweepResult(rows, fits, failed=failed)
    if write:
        d = Path(out or cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        res.out = d
        res.paths = {
            "csv": d / "sweep.csv",
            "csv_schema": d / "sweep.schema.json",
            "fits": d / "fits.json",
            "fits_schema": d / "fits.schema.json",
            "config": d / "config.toml",
        }
        report.write_csv(res.paths["csv"], rows)
        report.write_json(res.paths["csv_schema"], report.csv_schema())
        report.write_json(res.paths["fits"], fits)
        report.write_json(res.paths["fits_schema"], report.fits_schema())
        res.paths["config"].write_text(text)
    log.info(report.kv("sweep_done", config_hash=rid, rows=len(rows), failed=failed))
    return res
