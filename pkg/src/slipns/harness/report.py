"""Experiment reports and their on-disk form.

A run writes three kinds of file into the output directory:

    manifest.json              config echo, code version, timestamps, fits, verdicts
    results.csv                experiment,nu,beta,t,quantity,value,tolerance,verdict
    <experiment>__<curve>.dat  two whitespace separated columns per curve

Numbers are written with repr so the CSV parses back to identical floats.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig

MANIFEST_SCHEMA = "slipns-manifest"
MANIFEST_VERSION = 1
CSV_HEADER = ("experiment", "nu", "beta", "t", "quantity", "value", "tolerance", "verdict")
VERDICTS = ("pass", "fail", "info")


def code_version() -> str:
    from .. import __version__
    return __version__


@dataclass
class Row:
    experiment: str
    nu: float | None
    beta: float | None
    t: float | None
    quantity: str
    value: float
    tolerance: float | None = None
    verdict: str = "info"

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")


@dataclass
class Fit:
    """A fitted constant and the sweep it was fitted on."""

    name: str
    value: float
    residual: float
    domain: dict
    note: str = ""


@dataclass(eq=False)
class ExperimentReport:
    experiment: str
    config: RunConfig
    rows: list[Row] = field(default_factory=list)
    fits: list[Fit] = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    started: str = field(default_factory=lambda: _now())
    finished: str | None = None

    def add(self, quantity: str, value: float, *, nu=None, beta=None, t=None, tolerance=None,
            verdict: str | None = None, upper: bool = True) -> Row:
        """Record a value; with a tolerance and no explicit verdict, pass iff value <= tolerance
        (or >= when upper is False)."""
        value = float(value)
        if verdict is None:
            if tolerance is None:
                verdict = "info"
            else:
                ok = value <= tolerance if upper else value >= tolerance
                verdict = "pass" if ok and np.isfinite(value) else "fail"
        row = Row(self.experiment, _opt(nu), _opt(beta), _opt(t), quantity, value, _opt(tolerance), verdict)
        self.rows.append(row)
        return row

    def check(self, quantity: str, ok: bool, value: float = float("nan"), **kw) -> Row:
        return self.add(quantity, value, verdict="pass" if ok else "fail", **kw)

    def fit(self, name: str, value: float, residual: float, domain: dict, note: str = "") -> Fit:
        f = Fit(name, float(value), float(residual), _plain(domain), note)
        self.fits.append(f)
        return f

    def curve(self, name: str, x, y) -> None:
        if not re.fullmatch(r"[A-Za-z0-9_.=+-]+", name):
            raise ValueError(f"curve name {name!r} is not filename safe")
        self.curves[name] = (np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def fail(self, message: str) -> None:
        self.failures.append(message)

    @property
    def passed(self) -> bool:
        return not self.failures and all(r.verdict != "fail" for r in self.rows)

    def verdicts(self) -> dict:
        out = {}
        for r in self.rows:
            if r.verdict == "info":
                continue
            out.setdefault(r.quantity, True)
            out[r.quantity] &= r.verdict == "pass"
        return out

    def merge(self, other: "ExperimentReport") -> None:
        self.rows += other.rows
        self.fits += other.fits
        self.curves.update(other.curves)
        self.failures += other.failures
        self.notes += other.notes

    def close(self) -> "ExperimentReport":
        self.finished = _now()
        return self


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _opt(v):
    return None if v is None else float(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def check_writable(out_dir) -> Path:
    """Create out_dir if needed and make sure files can be written there."""
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise PermissionError(f"output directory {path} is not writable: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path


def write_csv(rows: list[Row], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.experiment, _num(r.nu), _num(r.beta), _num(r.t), r.quantity, _num(r.value),
                        _num(r.tolerance), r.verdict])


def read_csv(path) -> list[Row]:
    def val(s):
        return None if s == "" else float(s)

    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return [Row(e, val(nu), val(b), val(t), q, float(v), val(tol), verdict)
                for e, nu, b, t, q, v, tol, verdict in rd]


def write_curve(x, y, path) -> None:
    with open(path, "w") as fh:
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r} {float(b)!r}\n")


def manifest(reports: list[ExperimentReport], config: RunConfig, files: list[str]) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "schema_version": MANIFEST_VERSION,
        "code_version": code_version(),
        "config_hash": config.config_hash(),
        "config": config.dumps(),
        "started": min((r.started for r in reports), default=_now()),
        "finished": _now(),
        "passed": all(r.passed for r in reports),
        "experiments": [
            {
                "experiment": r.experiment,
                "config_hash": r.config.config_hash(),
                "config": r.config.dumps() if r.config is not config else None,
                "started": r.started,
                "finished": r.finished,
                "passed": r.passed,
                "verdicts": r.verdicts(),
                "fits": [asdict(f) for f in r.fits],
                "failures": r.failures,
                "notes": r.notes,
            }
            for r in reports
        ],
        "files": files,
    }


def emit_outputs(reports, out_dir, config: RunConfig, fmt: str = "csv") -> list[Path]:
    """Write manifest, CSV table and curve files; returns the paths written."""
    if fmt != "csv":
        raise ValueError(f"unsupported table format {fmt!r}")
    if isinstance(reports, ExperimentReport):
        reports = [reports]
    out = check_writable(out_dir)
    written: list[Path] = []
    rows = [row for r in reports for row in r.rows]
    if rows:
        p = out / "results.csv"
        write_csv(rows, p)
        written.append(p)
    for r in reports:
        for name, (x, y) in r.curves.items():
            p = out / f"{r.experiment}__{name}.dat"
            write_curve(x, y, p)
            written.append(p)
    m = manifest(list(reports), config, [p.name for p in written])
    p = out / "manifest.json"
    p.write_text(json.dumps(_plain(m), indent=2, allow_nan=True) + "\n")
    return [p] + written
