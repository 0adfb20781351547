"""Least-squares power-law fits on log-log data."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

MIN_POINTS = 4
MIN_DECADES = 1.5


class FitError(ValueError):
    pass


@dataclass
class FitResult:
    quantity: str
    exponent: float
    stderr: float
    points: list
    reference: float | None = None
    sign: int = 1
    intercept: float = 0.0
    meta: dict = field(default_factory=dict)

    def within(self, tol: float) -> bool | None:
        if self.reference is None:
            return None
        return abs(self.exponent - self.reference) <= tol

    def as_dict(self) -> dict:
        return asdict(self)


def fit_exponent(points, quantity: str = "", reference: float | None = None,
                 min_points: int = MIN_POINTS, min_decades: float = MIN_DECADES) -> FitResult:
    """Slope of log|value| against log rho with its standard error.

    Values must share one sign (negative data are fitted on magnitudes with
    the sign recorded); zeros and sign changes raise FitError.
    """
    pts = sorted((float(r), float(v)) for r, v in points)
    if len(pts) < min_points:
        raise FitError(f"{quantity}: need at least {min_points} points, got {len(pts)}")
    rho = np.array([p[0] for p in pts])
    val = np.array([p[1] for p in pts])
    if np.any(rho <= 0):
        raise FitError(f"{quantity}: densities must be positive")
    if np.any(val == 0) or not (np.all(val > 0) or np.all(val < 0)):
        raise FitError(f"{quantity}: values change sign or vanish")
    span = np.log10(rho.max() / rho.min())
    if span < min_decades - 1e-12:
        raise FitError(f"{quantity}: densities span {span:.2f} decades, need {min_decades}")
    x, y = np.log(rho), np.log(np.abs(val))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return FitResult(quantity, float(coef[0]), float(np.sqrt(cov[0, 0])), [list(p) for p in pts],
                     reference, int(np.sign(val[0])), float(coef[1]))
