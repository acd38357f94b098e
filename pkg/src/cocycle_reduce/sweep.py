"""Run configuration and Schrodinger energy sweeps.

A sweep runs one independent reduction per energy in a process pool and
assembles rows in energy order, so the CSV does not depend on the pool width.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.optimize import brentq

from .arithmetic import golden_alpha, liouville_alpha
from .cocycle import Cocycle, lyapunov, rotation_number, schrodinger
from .errors import CocycleError
from .scheme import Outcome, SchemeConfig, rotations_reduce
from .torusfun import TorusFn

CSV_HEADER = ("E", "rho", "rho_err", "lyapunov", "outcome", "final_defect", "steps", "classification")
THREADS_ENV = "COCYCLE_REDUCE_THREADS"

_LIOUVILLE = re.compile(r"^liouville\((\d+)\)$")


def parse_alpha(text: str):
    """'golden', 'liouville(k)', 'p/q' or a decimal literal (taken exactly)."""
    s = str(text).strip()
    if s == "golden":
        return golden_alpha()
    m = _LIOUVILLE.match(s)
    if m:
        k = int(m.group(1))
        if k < 1:
            raise ValueError("liouville(k) needs k >= 1")
        return liouville_alpha(k)
    try:
        float(s.split("/")[0])
    except ValueError:
        raise ValueError(f"cannot parse alpha {text!r}") from None
    return s


def parse_potential(coeffs) -> TorusFn:
    """Coefficient list c_0..c_N of v = c_0 + 2 Re sum c_l e(l x); complex entries as [re, im]."""
    vals = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in coeffs]
    if not vals:
        vals = [0.0]
    if abs(vals[0].imag) > 0:
        raise ValueError("the mean of a real potential must be real")
    return TorusFn(np.array(vals, dtype=complex))


@dataclass
class RunConfig:
    alpha: str = "golden"
    potential: list = field(default_factory=lambda: [0.0])
    E: float | None = None
    E_grid: list | None = None  # [lo, hi, num], inclusive endpoints
    scheme: dict = field(default_factory=dict)  # SchemeConfig overrides
    lyapunov_L: int = 100_000
    calibration_energies: list = field(default_factory=lambda: [-1.5, -0.75, 0.0, 0.75, 1.5])
    out: str | None = None
    trace: str | None = None
    width: int = 1

    def __post_init__(self):
        parse_alpha(self.alpha)
        self.potential = [list(c) if isinstance(c, (list, tuple)) else c for c in self.potential]
        if self.E_grid is not None:
            lo, hi, num = self.E_grid
            if int(num) < 1 or not lo <= hi:
                raise ValueError("E_grid must be [lo, hi, num] with lo <= hi and num >= 1")
            self.E_grid = [float(lo), float(hi), int(num)]
        if self.E is not None:
            self.E = float(self.E)
        if int(self.width) < 1:
            raise ValueError("width must be >= 1")
        self.width = int(self.width)
        allowed = {f.name for f in fields(SchemeConfig)}
        unknown = set(self.scheme) - allowed
        if unknown:
            raise ValueError(f"unknown scheme options {sorted(unknown)}")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_json(json.loads(text))

    def scheme_config(self) -> SchemeConfig:
        kw = dict(self.scheme)
        if "norm_orders" in kw:
            kw["norm_orders"] = tuple(kw["norm_orders"])
        return SchemeConfig(**kw)

    def energies(self) -> list[float]:
        if self.E_grid is not None:
            lo, hi, num = self.E_grid
            return [float(e) for e in np.linspace(lo, hi, num)]
        if self.E is not None:
            return [self.E]
        raise ValueError("config has neither E nor E_grid")

    def cocycle(self, E: float | None = None, potential: TorusFn | None = None) -> Cocycle:
        E = self.E if E is None else E
        if E is None:
            raise ValueError("no energy given")
        v = parse_potential(self.potential) if potential is None else potential
        return schrodinger(v, E, parse_alpha(self.alpha))

    def pool_width(self) -> int:
        env = os.environ.get(THREADS_ENV)
        if env:
            w = int(env)
            if w < 1:
                raise ValueError(f"{THREADS_ENV} must be >= 1")
            return w
        return self.width


@dataclass(frozen=True)
class SweepRecord:
    E: float
    rho: float
    rho_err: float
    lyapunov: float
    outcome: str
    final_defect: float
    steps: int
    classification: str = "undecided"
    message: str = ""

    def row(self) -> list[str]:
        return [
            _fmt(self.E),
            _fmt(self.rho),
            _fmt(self.rho_err),
            _fmt(self.lyapunov),
            self.outcome,
            _fmt(self.final_defect),
            str(self.steps),
            self.classification,
        ]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def classify(rec: SweepRecord, noise: float) -> str:
    if rec.outcome == Outcome.CONVERGED.value:
        return "ac-candidate"
    if np.isfinite(rec.lyapunov) and rec.lyapunov > 3.0 * noise:
        return "nuh-candidate"
    return "undecided"


def energy_for_rho(cfg: RunConfig, rho: float, lo: float = -2.0, hi: float = 2.0, xtol: float = 1e-13) -> float:
    """Energy where the rotation number equals rho, by bracketing root-find.

    rho decreases in E, from 1/2 below the spectrum to 0 above it; inside a
    gap it is constant, so a target equal to a gap value lands on its edge.
    """
    if not 0.0 < rho < 0.5:
        raise ValueError("target rho must lie in (0, 1/2)")
    return float(brentq(lambda E: rotation_number(cfg.cocycle(E)).rho - rho, lo, hi, xtol=xtol))


def run_energy(cfg: RunConfig, E: float) -> SweepRecord:
    """One sweep row. Failures are recorded in the row, never raised."""
    nan = float("nan")
    try:
        c = cfg.cocycle(E)
        lyap = lyapunov(c, L=cfg.lyapunov_L)
    except (CocycleError, ValueError, FloatingPointError) as exc:
        return SweepRecord(E, nan, nan, nan, Outcome.NUMERICAL_FAILURE.value, nan, 0, message=str(exc))
    try:
        est = rotation_number(c)
    except (CocycleError, FloatingPointError) as exc:
        return SweepRecord(E, nan, nan, lyap, Outcome.NUMERICAL_FAILURE.value, nan, 0, message=str(exc))
    try:
        rep = rotations_reduce(c, cfg.scheme_config(), rho_estimate=est)
    except (CocycleError, ValueError, FloatingPointError) as exc:
        return SweepRecord(E, est.rho, est.error_bound, lyap, Outcome.NUMERICAL_FAILURE.value, nan, 0, message=str(exc))
    return SweepRecord(
        E, est.rho, est.error_bound, lyap, rep.outcome.value, rep.final_defect, rep.steps, message=rep.message
    )


def noise_floor(cfg: RunConfig) -> float:
    """Largest |Lyapunov estimate| over free (zero potential) in-band energies,
    floored at 1/L.

    The true exponent there is zero, so this measures the estimator's own bias.
    The weighted average is far more accurate on these constant cocycles than
    near gap edges, hence the 1/L floor (the resolution of a plain average).
    """
    free = TorusFn([0.0])
    vals = [abs(lyapunov(cfg.cocycle(E, free), L=cfg.lyapunov_L)) for E in cfg.calibration_energies]
    return max(vals + [1.0 / cfg.lyapunov_L])


def _row_job(args):
    cfg, E = args
    return run_energy(cfg, E)


@dataclass
class SweepResult:
    records: list
    noise: float

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            w.writerow(r.row())
        return buf.getvalue()

    def ac_fraction(self, lo: float = -2.0, hi: float = 2.0) -> float:
        band = [r for r in self.records if lo < r.E < hi]
        if not band:
            return float("nan")
        return sum(r.classification == "ac-candidate" for r in band) / len(band)


def run_sweep(cfg: RunConfig, width: int | None = None) -> SweepResult:
    """Evaluate every energy of the grid; rows come back in grid order."""
    energies = cfg.energies()
    width = cfg.pool_width() if width is None else width
    noise = noise_floor(cfg)
    jobs = [(cfg, E) for E in energies]
    if width == 1:
        records = [_row_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=width) as pool:
            records = list(pool.map(_row_job, jobs))
    records = [replace(r, classification=classify(r, noise)) for r in records]
    return SweepResult(records, noise)
