"""
Per-record norms, the dissipation ledger, the modified entropy and rate fits.

Records are assembled sequentially during a run by ``Recorder``; everything else
here is post-processing on the resulting series.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .boundary import boundary_dissipation as _wall_dissipation
from .boundary import wall_traces
from .elliptic import EllipticSolution, cross_term, entropy_aux
from .errors import ContractError, FitError
from .fields import initial_mass, mass, perp
from .grids import MeasureWeights, VelocityGrid, norm_dm

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "norm_f_minus_Mc", "norm_fperp", "mass", "boundary_dissipation",
               "A_quantity", "entropy_E", "int_fperp2", "int_boundary")
_TINY = 1e-300


@dataclass
class DiagnosticsRecord:
    t: float
    norm_f_minus_Mc: float
    norm_fperp: float
    mass: float
    boundary_dissipation: float
    A_quantity: float
    entropy_E: float
    int_fperp2: float
    int_boundary: float
    norm_f: float = math.nan  # kept in memory for the ledger, not serialised

    def row(self) -> list[float]:
        return [getattr(self, c) for c in CSV_COLUMNS]


def modified_entropy(f, u: EllipticSolution, kappa: float, eps: float, M_c: float,
                     vgrid: VelocityGrid, meas: MeasureWeights) -> float:
    """E = ||f - M_c||^2 + kappa eps (v . grad u, f_perp)."""
    f = np.asarray(f, dtype=float)
    base = norm_dm(f - M_c, meas) ** 2
    if kappa == 0.0:
        return base
    return base + kappa * eps * cross_term(f, u, vgrid, meas)


def adaptive_kappa(f, u: EllipticSolution, eps: float, M_c: float, vgrid: VelocityGrid,
                   meas: MeasureWeights, kappa_max: float = 0.1) -> float:
    """kappa = min(kappa_max, ||f - M_c||^2 / (2 eps |cross| + tiny))."""
    base = norm_dm(np.asarray(f, dtype=float) - M_c, meas) ** 2
    cross = abs(cross_term(f, u, vgrid, meas))
    return float(min(kappa_max, base / (2.0 * eps * cross + _TINY)))


class Recorder:
    """Builds DiagnosticsRecord rows along a run; kappa and M_c are frozen from the initial field."""

    def __init__(self, setup, f_in):
        self.setup = setup
        self.vgrid, self.meas, self.bc = setup.vgrid, setup.meas, setup.bc
        self.eps = setup.cfg.epsilon
        f_in = np.asarray(f_in, dtype=float)
        self.M0 = initial_mass(f_in, self.meas)
        self.norm_in_sq = norm_dm(f_in, self.meas) ** 2
        sol, _, self.M_c = entropy_aux(f_in, self.vgrid, self.meas, self.bc, setup.robin, M0=self.M0)
        self.kappa = adaptive_kappa(f_in, sol, self.eps, self.M_c, self.vgrid, self.meas,
                                    setup.cfg.kappa_max)
        self.records: list[DiagnosticsRecord] = []
        self._int_perp = 0.0
        self._int_bdry = 0.0
        self.record(0.0, f_in)

    def record(self, t: float, f) -> DiagnosticsRecord:
        f = np.asarray(f, dtype=float)
        vg, meas = self.vgrid, self.meas
        sol, A, _ = entropy_aux(f, vg, meas, self.bc, self.setup.robin, M0=self.M0)
        nperp2 = norm_dm(perp(f, vg), meas) ** 2
        bd = _wall_dissipation(wall_traces(f, self.bc, vg), meas, vg)
        if self.records:
            prev = self.records[-1]
            h = t - prev.t
            self._int_perp += 0.5 * h * (prev.norm_fperp**2 + nperp2)
            self._int_bdry += 0.5 * h * (prev.boundary_dissipation + bd)
        rec = DiagnosticsRecord(
            t=float(t),
            norm_f_minus_Mc=norm_dm(f - self.M_c, meas),
            norm_fperp=math.sqrt(nperp2),
            mass=mass(f, meas),
            boundary_dissipation=bd,
            A_quantity=A,
            entropy_E=modified_entropy(f, sol, self.kappa, self.eps, self.M_c, vg, meas),
            int_fperp2=self._int_perp,
            int_boundary=self._int_bdry,
            norm_f=norm_dm(f, meas),
        )
        if not all(math.isfinite(x) for x in rec.row()):
            raise ContractError(f"non-finite diagnostics at t = {t}")
        self.records.append(rec)
        return rec


# ---------------------------------------------------------------------------
# rate fitting


@dataclass
class RateFit:
    lam: float
    C: float
    t0: float
    t1: float
    r2: float
    n_samples: int
    shrunk: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def floor_time(t, y, floor: float = 1e-12) -> float:
    """Last sample time before the series first drops below floor * y[0]."""
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    below = np.nonzero(y <= floor * y[0])[0]
    if below.size == 0:
        return float(t[-1])
    return float(t[max(below[0] - 1, 0)])


def default_window(t, y, eps: float, T: float | None = None) -> tuple[float, float]:
    """[max(10 eps^2, 0.1 T), t_floor]."""
    t = np.asarray(t, dtype=float)
    T = float(t[-1]) if T is None else T
    return max(10.0 * eps**2, 0.1 * T), floor_time(t, y)


def fit_decay_rate(t, y, window: tuple[float, float] | None = None, min_samples: int = 10) -> RateFit:
    """Least-squares fit of log y = log(C y_ref) - lam t on the samples inside ``window``.

    C is normalised by the first value of the series, so for y = y(0) C e^{-lam t}
    the fit recovers C.  Non-positive values end the window early; the shrink is
    flagged on the result.
    """
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("t and y must be 1-d arrays of equal length")
    t0, t1 = (float(t[0]), float(t[-1])) if window is None else map(float, window)
    sel = np.nonzero((t >= t0 - 1e-12) & (t <= t1 + 1e-12))[0]
    shrunk = False
    bad = sel[y[sel] <= 0]
    if bad.size:
        sel = sel[sel < bad[0]]
        shrunk = True
        logger.info("fit window shrunk at t = %g (non-positive value)", t[bad[0]])
    if sel.size < min_samples:
        raise FitError(f"only {sel.size} samples in fit window [{t0:g}, {t1:g}] (need {min_samples})")
    ts, ly = t[sel], np.log(y[sel])
    ref = y[0] if y[0] > 0 else y[sel[0]]
    if np.ptp(ly) == 0.0:
        return RateFit(0.0, float(y[sel[0]] / ref), float(ts[0]), float(ts[-1]), 1.0, int(sel.size), shrunk)
    slope, intercept = np.polyfit(ts, ly, 1)
    resid = ly - (slope * ts + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(lam=float(-slope), C=float(math.exp(intercept) / ref), t0=float(ts[0]),
                   t1=float(ts[-1]), r2=float(min(max(r2, 0.0), 1.0)), n_samples=int(sel.size),
                   shrunk=shrunk)


def fit_trajectory(traj, column: str = "norm_f_minus_Mc", window=None) -> RateFit:
    """Fit a run's decay; a run starting at equilibrium (up to rounding) reports lam = 0."""
    t, y = traj.times, traj.column(column)
    if y[0] <= 1e-12 * max(math.sqrt(traj.norm_in_sq), _TINY) or np.ptp(y) == 0.0:
        return RateFit(0.0, 1.0, float(t[0]), float(t[-1]), 1.0, int(t.size))
    if window is None:
        window = default_window(t, y, traj.cfg.epsilon, traj.cfg.T)
    return fit_decay_rate(t, y, window)


# ---------------------------------------------------------------------------
# ledger


@dataclass
class LedgerReport:
    lhs: float  # ||f(T)||^2 + (2/eps^2) int ||f_perp||^2 + (1/eps) int (f^2, n.v)
    norm_in_sq: float
    slack: float  # ||f_in||^2 - lhs
    rel_slack: float
    int_fperp2: float
    int_boundary: float
    cadence_error: float  # relative change of lhs when every other record is dropped
    reliable: bool
    holds: bool
    norm_monotone: bool
    entropy_in_band: bool
    entropy_monotone: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _trapz(t, y) -> float:
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    return float(np.sum(0.5 * np.diff(t) * (y[1:] + y[:-1]))) if t.size > 1 else 0.0


def ledger_lhs(records, eps: float, stride: int = 1) -> float:
    idx = list(range(0, len(records), stride))
    if idx[-1] != len(records) - 1:
        idx.append(len(records) - 1)
    t = [records[i].t for i in idx]
    perp2 = [records[i].norm_fperp**2 for i in idx]
    bd = [records[i].boundary_dissipation for i in idx]
    return records[-1].norm_f**2 + 2.0 / eps**2 * _trapz(t, perp2) + _trapz(t, bd) / eps


def entropy_checks(records, rtol: float = 1e-9, floor: float = 1e-12) -> tuple[bool, bool]:
    """(E within [1/2, 3/2] ||f - M_c||^2 at every record, E non-increasing up to rtol).

    Monotonicity is only asserted while ||f - M_c|| stays above floor times its
    initial value; below that the series is rounding noise.
    """
    E = np.array([r.entropy_E for r in records])
    nrm = np.array([r.norm_f_minus_Mc for r in records])
    base = nrm**2
    band = bool(np.all((E >= 0.5 * base - _TINY) & (E <= 1.5 * base + _TINY)))
    live = nrm[:-1] > floor * nrm[0]
    dE = np.diff(E)[live]
    mono = bool(np.all(dE <= rtol * np.maximum(np.abs(E[:-1][live]), _TINY)))
    return band, mono


def dissipation_ledger(traj, rtol: float = 1e-3) -> LedgerReport:
    """Check ||f(T)||^2 + (2/eps^2) int ||f_perp||^2 + (1/eps) int (f^2, n.v) <= ||f_in||^2 (1 + rtol)."""
    recs = traj.records
    if len(recs) < 3:
        raise ContractError("ledger needs at least three records")
    eps = traj.cfg.epsilon
    nin = traj.norm_in_sq
    lhs = ledger_lhs(recs, eps)
    coarse = ledger_lhs(recs, eps, stride=2)
    scale = max(nin, _TINY)
    cadence = abs(lhs - coarse) / scale
    nf = np.array([r.norm_f for r in recs])
    band, mono = entropy_checks(recs)
    return LedgerReport(
        lhs=lhs, norm_in_sq=nin, slack=nin - lhs, rel_slack=(nin - lhs) / scale,
        int_fperp2=recs[-1].int_fperp2, int_boundary=recs[-1].int_boundary,
        cadence_error=cadence, reliable=cadence < rtol,
        holds=lhs <= nin * (1.0 + rtol),
        norm_monotone=bool(np.all(np.diff(nf) <= 1e-12 * nf[:-1])),
        entropy_in_band=band, entropy_monotone=mono,
    )


# ---------------------------------------------------------------------------
# CSV


def write_csv(path, records) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(["%.17g" % x for x in r.row()])


def read_csv(path) -> list[DiagnosticsRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd, None)
        if head is None or tuple(head) != CSV_COLUMNS:
            raise ContractError(f"{path}: unexpected CSV header {head}")
        return [DiagnosticsRecord(*map(float, row)) for row in rd if row]


def record_columns() -> tuple[str, ...]:
    return tuple(f.name for f in fields(DiagnosticsRecord))
