"""Command-line drivers: ``dilute-fermi <subcommand>``.

Settings come from an optional flat TOML file (``--config``); the flags
``--out --seed --cap --eps --beta --eta`` override file values.  The exit
code is 0 exactly when every check of the subcommand passed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigError, SweepConfig
from .fit import FitError, FitResult, fit_exponent
from .sweep import FIT_REFERENCES, QUANTITIES, SweepResult, run_sweep

__all__ = [
    "ConfigError", "FIT_REFERENCES", "FitError", "FitResult", "QUANTITIES", "SweepConfig",
    "SweepResult", "fit_exponent", "main", "run_sweep",
]

log = logging.getLogger("dilute_fermi.cli")


def _settings(args) -> SweepConfig:
    cfg = SweepConfig.load(args.config) if args.config else SweepConfig()
    for name in ("out", "seed", "cap", "eps", "beta", "eta", "workers"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def _emit(obj, out: str | None, name: str, schema=None) -> None:
    print(json.dumps(report._jsonable(obj), indent=2, sort_keys=True))
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        report.write_json(d / f"{name}.json", obj)
        if schema is not None:
            report.write_json(d / f"{name}.schema.json", schema)


def _box(cfg, args, shell: bool = False) -> float:
    if args.L:
        return args.L
    if shell:
        # trial routes need closed shells: one ball |n|^2 <= shell_n2F per spin
        from ..lattice import integer_ball

        return (len(integer_ball(cfg.shell_n2F)) / max(args.rho_up, args.rho_down)) ** (1.0 / 3.0)
    return cfg.box(args.rho_up, args.rho_down)


# ---------------------------------------------------------------- subcommands
def cmd_scatter(cfg, args) -> bool:
    from ..scattering import born_integral, solve_zero_energy, tail_deviation

    V = cfg.make_potential()
    sol = solve_zero_energy(V)
    b = born_integral(sol)
    rel = abs(b - sol.a) / sol.a if sol.a else abs(b)
    ok = rel < 1e-6
    log.info(report.kv("scatter", a=sol.a, born=b, residual=rel))
    _emit({"potential": V.params(), "a": sol.a, "born_integral": b, "born_residual": rel,
           "tail_deviation": tail_deviation(sol), "passed": ok}, cfg.out if args.out else None, "scatter")
    return ok


def cmd_kernel(cfg, args) -> bool:
    from ..kernel import build_kernel, cancellation_residual, scattering_identity

    V = cfg.make_potential()
    rho = args.rho
    k = build_kernel(V, rho)
    res = cancellation_residual(k)
    lhs, rhs = scattering_identity(k)
    rel = abs(lhs - rhs) / rhs if rhs else abs(lhs)
    ok = res < 1e-6 and rel < 1e-5
    log.info(report.kv("kernel", rho=rho, cancellation_residual=res, identity_rel=rel))
    _emit({"rho": rho, "a": k.a, "norms": k.norms(), "cancellation_residual": res,
           "V0_minus_int_Vphi": lhs, "eight_pi_a": rhs, "identity_rel": rel, "passed": ok},
          cfg.out if args.out else None, "kernel")
    return ok


def cmd_hf(cfg, args) -> bool:
    from ..lattice import hf_energy, spin_config

    V = cfg.make_potential()
    L = _box(cfg, args)
    c = spin_config(L, args.rho_up, args.rho_down)
    hf = hf_energy(c, V)
    lead = float(V.fourier(0.0)) * c.up.rho * c.down.rho
    ratio = hf.per_volume["interaction"] / lead if lead else 0.0
    log.info(report.kv("hf", L=L, total=hf.total, interaction_ratio=ratio))
    _emit({**hf.as_dict(), "config": c.as_dict(), "interaction_ratio": ratio}, cfg.out if args.out else None, "hf")
    return True


def cmd_trial(cfg, args) -> bool:
    from ..correlation.diagnostics import sector_trial_energy, trial_energy

    V = cfg.make_potential()
    L = _box(cfg, args, shell=True)
    if args.route == "sector":
        rep = sector_trial_energy(args.rho_up, args.rho_down, L, cfg.eps, cfg.beta, V, lam=args.lam)
    else:
        rep = trial_energy(args.rho_up, args.rho_down, L, cfg.cap_value, cfg.eps, cfg.beta, V, lam=args.lam,
                           eta=cfg.eta)
    d = rep.as_dict()
    checks = {
        "Q3_zero": abs(rep.pieces["Q3"]) < 1e-10,
        "leakage": rep.leakage < 1e-12,
        "correlation_nonpositive": rep.correlation <= 0.0,
    }
    d["passed"] = checks
    log.info(report.kv("trial", route=args.route, L=L, correlation=rep.correlation,
                       predicted=rep.predicted_first_order, leakage=rep.leakage))
    _emit(d, cfg.out if args.out else None, "trial", report.trial_report_schema())
    return all(checks.values())


def cmd_verify(cfg, args) -> bool:
    from .verify import format_table, run_verify

    checks = run_verify(args.only)
    print(format_table(checks))
    if args.out:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        report.write_json(d / "verify.json", [c.as_dict() for c in checks])
    return all(c.passed for c in checks)


def cmd_sweep(cfg, args) -> bool:
    if args.densities:
        cfg.densities = [[r / 2, r / 2] for r in np.logspace(np.log10(args.densities[0]),
                                                               np.log10(args.densities[1]),
                                                               int(args.densities[2]))]
    if args.quantities:
        cfg.quantities = args.quantities
    res = run_sweep(cfg)
    for f in res.fits:
        if "error" in f:
            print(f"{f['quantity']:40s}  fit failed: {f['error']}")
        else:
            ref = "" if f["reference"] is None else f"  reference {f['reference']:+.4f}"
            print(f"{f['quantity']:40s}  exponent {f['exponent']:+.4f} +- {f['stderr']:.4f}{ref}")
    print(f"rows {len(res.rows)}, failed {res.failed}, written to {res.out}")
    return res.ok


COMMANDS = {
    "scatter": cmd_scatter,
    "kernel": cmd_kernel,
    "hf": cmd_hf,
    "trial": cmd_trial,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML settings file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--cap", type=int, help="quasiparticle cap, -1 for none")
    common.add_argument("--eps", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--log-level", default="WARNING")

    p = argparse.ArgumentParser(prog="dilute-fermi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("scatter", parents=[common], help="zero-energy scattering length")
    k = sub.add_parser("kernel", parents=[common], help="localized kernel norms and identities")
    k.add_argument("--rho", type=float, default=1e-3, help="total density")
    for name, hlp in (("hf", "Hartree-Fock energy of the Fermi sea"), ("trial", "trial-state energy")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--rho-up", type=float, default=5e-3)
        s.add_argument("--rho-down", type=float, default=5e-3)
        s.add_argument("--L", type=float, help="box side (default: the configured L rule for hf, "
                       "the closed-shell box for trial)")
        if name == "trial":
            s.add_argument("--route", choices=("sector", "fock"), default="sector")
            s.add_argument("--lam", type=float, default=1.0)
    v = sub.add_parser("verify", parents=[common], help="exact-identity suite")
    v.add_argument("--only", nargs="*", help="subset of checks")
    w = sub.add_parser("sweep", parents=[common], help="density sweep with exponent fits")
    w.add_argument("--workers", type=int)
    w.add_argument("--densities", type=float, nargs=3, metavar=("RHO_MAX", "RHO_MIN", "COUNT"),
                   help="equal-spin log-spaced total densities (overrides the file)")
    w.add_argument("--quantities", nargs="*", choices=sorted(QUANTITIES))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report.setup_logging(report.run_id(args.command + cfg.to_toml()), args.log_level, sys.stderr)
    try:
        ok = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # module errors: logged, nonzero exit
        log.error(report.kv("failed", command=args.command, error=repr(f"{type(exc).__name__}: {exc}")))
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
