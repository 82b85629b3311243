"""Run configuration: a flat `key = value` text file with `#` comments.

Lists are comma separated.  Floats are written with repr, so a config read
back from its own serialization compares equal field by field and produces
the same text again.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

EXPERIMENTS = ("kernel-check", "stokes-run", "ns-run", "inviscid-rate", "bound-check", "oracle-check")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str = "stokes-run"
    # physics
    nu: tuple = (1e-3,)
    beta: tuple = (1.0,)
    K: int = 4
    T: float = 1.0
    times: tuple = ()
    dt: float = 0.05
    m: int = 3
    # grid
    n_nodes: int = 601
    L: float = 120.0
    wall_fraction: float = 0.015625
    # contour
    contour: str = "production"
    contour_a: float = 1.0
    contour_M: float = 1.0
    contour_b_max: float = 7.0
    contour_n_nodes: int = 96
    # initial data
    family: str = "shear"
    amplitude: float = 1.0
    center: float = 1.0
    width: float = 0.2
    eps: float = 0.05
    mode: int = 1
    families: tuple = ("zero", "gaussian", "wall_layer", "shear", "shear_well", "two_mode")
    # norms and iteration
    rho0: float = 0.5
    gamma: float = 0.1
    picard_tol: float = 1e-10
    smallness: float = 0.5
    # sweeps for audits
    samples: int = 100
    t_sweep: tuple = (0.01, 0.1, 0.5, 1.0)
    alpha_sweep: tuple = (0, 1, 4, 16)
    t_min: float = 0.01
    lp: tuple = (2, 4)
    surrogate: bool = False
    nu_ref: float = 1e-6
    # tolerances
    slope_band: float = 0.15
    bc_tol: float = 1e-6
    oracle_tol: float = 1e-2
    contour_tol: float = 1e-8
    picard_ratio: float = 0.5
    stability_factor: float = 3.0
    audit_margin: float = 1.5
    # run
    out: str = "out"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.nu or not self.beta:
            raise ConfigError("nu and beta sweeps must be nonempty")
        if any(v <= 0 for v in self.nu):
            raise ConfigError("nu must be positive")
        if any(b < 0 for b in self.beta):
            raise ConfigError("beta must be nonnegative")
        for name in ("T", "dt", "L", "wall_fraction", "width", "contour_a", "contour_M", "contour_b_max", "nu_ref"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.K < 0 or self.n_nodes < 9 or self.m < 1:
            raise ConfigError("K >= 0, n_nodes >= 9 and m >= 1 are required")
        if self.contour_n_nodes < 32:
            raise ConfigError("contour_n_nodes must be at least 32")
        if any(t < 0 or t > self.T * (1 + 1e-12) for t in self.times):
            raise ConfigError("output times must lie in [0, T]")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def output_times(self) -> list[float]:
        if self.times:
            return sorted(float(t) for t in self.times)
        n = int(round(self.T / self.dt))
        return [k * self.dt for k in range(n + 1)]

    def contour_spec(self):
        from ..stokes_green import ContourSpec
        return ContourSpec(self.contour, self.contour_a, self.contour_M, self.contour_b_max, self.contour_n_nodes)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    # serialization
    def dumps(self) -> str:
        lines = ["# slipns run configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]

    @classmethod
    def loads(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        base = base or cls()
        kinds = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse(val, getattr(base, key), key)
        return dataclasses.replace(base, **values)

    @classmethod
    def load(cls, path, base: "RunConfig | None" = None) -> "RunConfig":
        return cls.loads(Path(path).read_text(), base)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())


def _format(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _scalar(text: str, like, key: str):
    try:
        if isinstance(like, bool):
            if text.lower() not in ("true", "false"):
                raise ValueError(text)
            return text.lower() == "true"
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r}") from exc
    return text


def _parse(text: str, like, key: str):
    if isinstance(like, tuple):
        items = [s.strip() for s in text.split(",") if s.strip()]
        proto = _LIST_TYPES[key]
        return tuple(_scalar(s, proto, key) for s in items)
    return _scalar(text, like, key)


_LIST_TYPES = dict(nu=0.0, beta=0.0, times=0.0, t_sweep=0.0, alpha_sweep=0, lp=0, families="")
