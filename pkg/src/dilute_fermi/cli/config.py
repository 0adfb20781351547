"""Sweep configuration: a flat key-value TOML file.

Keys (all optional except ``densities``)::

    densities           list of [rho_up, rho_down]
    quantities          list of quantity names (see sweep.QUANTITIES)
    l_rule              "scaled" (L = l_factor * rho^(-1/3), l_factor > 4)
                        or "shell" (L = (N / rho_sigma)^(1/3) with N the ball of shell_n2F)
    l_factor            float, default 4.5
    shell_n2F           int, default 1
    allow_image_overlap bool; must be true for a "shell" rule with L <= 4 rho^(-1/3)
    potential           "bump" | "softsphere" | "zero"
    potential_V0, potential_R0, potential_width
    eps, beta, eta      cutoff parameters
    cap                 quasiparticle cap (-1 for none)
    seed, workers, out
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from ..lattice import integer_ball
from ..scattering import make_potential


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    densities: list = field(default_factory=list)
    quantities: list = field(default_factory=lambda: ["kernel"])
    l_rule: str = "scaled"
    l_factor: float = 4.5
    shell_n2F: int = 1
    allow_image_overlap: bool = False
    potential: str = "bump"
    potential_V0: float = 10.0
    potential_R0: float = 1.0
    potential_width: float = 0.25
    eps: float = 1.0
    beta: float = 0.25
    eta: float = 0.4
    cap: int = 4
    seed: int = 0
    workers: int = 1
    out: str = "runs"

    def __post_init__(self):
        self.densities = [[float(a), float(b)] for a, b in self.densities]
        self.quantities = [str(q) for q in self.quantities]

    # ---------------------------------------------------------------- rules
    def box(self, rho_up: float, rho_down: float) -> float:
        rho = rho_up + rho_down
        if self.l_rule == "scaled":
            return self.l_factor * rho ** (-1.0 / 3.0)
        if self.l_rule == "shell":
            N = len(integer_ball(self.shell_n2F))
            return (N / max(rho_up, rho_down)) ** (1.0 / 3.0)
        raise ConfigError(f"unknown l_rule {self.l_rule!r}")

    def validate(self) -> "SweepConfig":
        from .sweep import QUANTITIES

        if not self.densities:
            raise ConfigError("no densities given")
        for a, b in self.densities:
            if not (a > 0 and b > 0):
                raise ConfigError("densities must be positive")
        unknown = [q for q in self.quantities if q not in QUANTITIES]
        if unknown:
            raise ConfigError(f"unknown quantities {unknown}")
        if self.l_rule == "scaled" and not self.l_factor > 4.0:
            raise ConfigError("the scaled rule needs l_factor > 4 (L > 4 rho^(-1/3))")
        for a, b in self.densities:
            L = self.box(a, b)
            if L <= 4.0 * (a + b) ** (-1.0 / 3.0) and not self.allow_image_overlap:
                raise ConfigError(
                    f"L={L:.4g} <= 4 rho^(-1/3) at rho={a + b:.3g}; set allow_image_overlap to accept")
        if self.cap != -1 and (self.cap < 0 or self.cap % 2):
            raise ConfigError("cap must be a non-negative even number or -1")
        self.make_potential()
        return self

    def make_potential(self):
        kw = {"V0": self.potential_V0, "R0": self.potential_R0}
        if self.potential in ("softsphere", "soft_sphere"):
            kw["width"] = self.potential_width
        return make_potential(self.potential, **kw)

    @property
    def cap_value(self):
        return None if self.cap == -1 else self.cap

    # ---------------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}")
        return cls(**d)

    def to_toml(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_toml_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_toml(cls, text: str) -> "SweepConfig":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


def _toml_char(c: str) -> str:
    if c in '"\\':
        return "\\" + c
    # control characters (including DEL) must be escaped in basic strings
    if ord(c) < 0x20 or ord(c) == 0x7F:
        return f"\\u{ord(c):04x}"
    return c


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        r = repr(v)
        return r if any(c in r for c in ".en") else r + ".0"
    if isinstance(v, str):
        return '"' + "".join(_toml_char(c) for c in v) + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__}")
