"""
Reference objects for eps -> 0: the Neumann parabolic limit, the initial layer,
and gap metrics between a kinetic run and its limit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .boundary import BoundaryConfig
from .collision import CollisionKind, implicit_collision_solve
from .elliptic import RobinOperator
from .errors import ContractError
from .fields import moment0
from .grids import MeasureWeights, SpatialGrid, VelocityGrid, norm_dm


def T_eps(eps: float) -> float:
    """Layer threshold eps^2 |log sqrt(eps)|."""
    return eps**2 * abs(math.log(math.sqrt(eps)))


# ---------------------------------------------------------------------------
# parabolic limit


@dataclass
class ParabolicTrajectory:
    times: np.ndarray
    rho: np.ndarray  # (nt, nx)
    dt_p: float
    dx: float
    n_steps: int

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation in time."""
        k = int(np.searchsorted(self.times, t))
        if k < self.times.size and self.times[k] == t:
            return self.rho[k]
        if k == 0 or k == self.times.size:
            raise ContractError(f"t = {t} outside the sampled range")
        t0, t1 = self.times[k - 1], self.times[k]
        s = (t - t0) / (t1 - t0)
        return (1 - s) * self.rho[k - 1] + s * self.rho[k]


def solve_parabolic(rho_in, xgrid: SpatialGrid, meas: MeasureWeights, times,
                    dt_p: float | None = None) -> ParabolicTrajectory:
    """Crank-Nicolson for d_t rho = e^{phi} (e^{-phi} rho')' with zero flux at both walls.

    The default step 0.5 dx^2 keeps the explicit half of the scheme monotone, so
    the discrete maximum principle holds for phi = 0.  Samples at ``times`` are
    linear interpolants of the two bracketing steps.
    """
    rho = np.array(rho_in, dtype=float)
    times = np.asarray(times, dtype=float)
    if rho.shape != (xgrid.nx,):
        raise ContractError(f"rho_in has shape {rho.shape}, expected ({xgrid.nx},)")
    if not np.all(np.isfinite(rho)):
        raise ContractError("rho_in must be finite")
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise ContractError("times must be a non-decreasing array starting at t >= 0")
    dt = 0.5 * xgrid.dx**2 if dt_p is None else float(dt_p)
    T = float(times[-1])
    n = max(1, math.ceil(T / dt - 1e-9)) if T > 0 else 0
    dt = T / n if n else dt

    op = RobinOperator(xgrid, meas, BoundaryConfig())  # c_b = 0: Neumann
    m = meas.x_cell
    ab = np.zeros((3, xgrid.nx))
    ab[0, 1:] = 0.5 * dt * op._stiff_off
    ab[1] = m + 0.5 * dt * op._stiff_diag
    ab[2, :-1] = 0.5 * dt * op._stiff_off

    out = np.empty((times.size, xgrid.nx))
    k = 0
    while k < times.size and times[k] <= 0.0:
        out[k] = rho
        k += 1
    t_prev, prev = 0.0, rho
    for step in range(1, n + 1):
        rhs = m * prev - 0.5 * dt * op.stiffness(prev)
        cur = solve_banded((1, 1), ab, rhs, check_finite=False)
        t_cur = step * dt if step < n else T
        while k < times.size and times[k] <= t_cur + 1e-14:
            s = (times[k] - t_prev) / (t_cur - t_prev)
            out[k] = cur if s >= 1.0 else (1 - s) * prev + s * cur
            k += 1
        t_prev, prev = t_cur, cur
    return ParabolicTrajectory(times=times.copy(), rho=out, dt_p=dt, dx=xgrid.dx, n_steps=n)


# ---------------------------------------------------------------------------
# initial layer


@dataclass
class LayerTrajectory:
    times: np.ndarray
    psi: np.ndarray  # (nt, nx, nv)
    kind: str
    eps: float
    norm: np.ndarray  # ||psi(t)|| under dm
    weighted_norm: np.ndarray  # ||(1 + |v|) psi(t)||
    int_norm2: np.ndarray  # int_0^t ||psi||^2, right-endpoint sums over the sub-steps
    dt_layer: float | None = None

    def ledger(self) -> np.ndarray:
        """||psi(t)||^2 + (2 / eps^2) int_0^t ||psi||^2, to compare with ||psi_in||^2."""
        return self.norm**2 + 2.0 / self.eps**2 * self.int_norm2


def solve_layer(psi_in, eps: float, kind, times, vgrid: VelocityGrid, meas: MeasureWeights,
                dt_layer: float | None = None) -> LayerTrajectory:
    """Evolve d_t psi = eps^{-2} L psi from psi_in with its cell means removed.

    BGK uses the closed form e^{-t/eps^2} psi_in.  FP uses backward-Euler sub-steps
    of length at most ``dt_layer`` (default eps^2 / 1000).
    """
    kind = CollisionKind.parse(kind)
    psi = np.array(psi_in, dtype=float)
    scale = max(float(np.max(np.abs(psi))), 1e-300)
    psi -= moment0(psi, vgrid)[:, None]
    if np.max(np.abs(moment0(psi, vgrid))) > 1e-13 * scale:
        raise ContractError("layer data keeps a nonzero mean after enforcement")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) < 0):
        raise ContractError("times must be a non-decreasing array starting at t >= 0")
    wv = 1.0 + np.abs(vgrid.nodes)[None, :]

    def norms(p):
        return norm_dm(p, meas), norm_dm(wv * p, meas)

    out = np.empty((times.size,) + psi.shape)
    nrm, wnrm, integ = (np.empty(times.size) for _ in range(3))
    if kind is CollisionKind.BGK:
        n0, w0 = norms(psi)
        for k, t in enumerate(times):
            d = math.exp(-t / eps**2)
            out[k] = d * psi
            nrm[k], wnrm[k] = d * n0, d * w0
            integ[k] = n0**2 * eps**2 * (1.0 - math.exp(-2.0 * t / eps**2)) / 2.0
        return LayerTrajectory(times, out, kind.value, eps, nrm, wnrm, integ, None)

    h_max = eps**2 / 1000.0 if dt_layer is None else float(dt_layer)
    t_prev, cur, acc = 0.0, psi, 0.0
    for k, t in enumerate(times):
        span = t - t_prev
        if span > 0:
            n = max(1, math.ceil(span / h_max - 1e-9))
            h = span / n
            for _ in range(n):
                cur = implicit_collision_solve(cur, h / eps**2, kind, vgrid)
                cur -= moment0(cur, vgrid)[:, None]
                acc += h * norm_dm(cur, meas) ** 2
        out[k] = cur
        nrm[k], wnrm[k] = norms(cur)
        integ[k] = acc
        t_prev = t
    return LayerTrajectory(times, out, kind.value, eps, nrm, wnrm, integ, h_max)


# ---------------------------------------------------------------------------
# gap metrics


@dataclass
class GapMetrics:
    eps: float
    T_eps: float
    l2_dtdm: float  # ||f - rho|| in L^2([0, T], dt dm), trapezoid in t
    sup_after: float  # sup_{t >= T_eps} ||f - rho||
    sup_all: float  # sup_t ||f - rho||
    sup_layer: float | None  # sup_t ||f - rho - psi|| when a layer is supplied
    times: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("times")
        d.pop("gaps")
        return d


def diffusion_gap(snapshots, par: ParabolicTrajectory, meas: MeasureWeights, eps: float,
                  layer: LayerTrajectory | None = None) -> GapMetrics:
    """Gap metrics from kinetic snapshots [(t, f)], the parabolic limit and an optional layer."""
    if not snapshots:
        raise ContractError("no kinetic snapshots")
    nx = meas.x_cell.size
    times = np.array([t for t, _ in snapshots], dtype=float)
    gaps, lgaps = np.empty(times.size), np.empty(times.size)
    for k, (t, f) in enumerate(snapshots):
        f = np.asarray(f, dtype=float)
        if f.shape != meas.cell.shape:
            raise ContractError(f"snapshot shape {f.shape} does not match grid {meas.cell.shape}")
        rho = par.at(t)
        if rho.shape != (nx,):
            raise ContractError("parabolic and kinetic grids differ")
        diff = f - rho[:, None]
        gaps[k] = norm_dm(diff, meas)
        if layer is not None:
            j = np.nonzero(np.isclose(layer.times, t, rtol=0, atol=1e-12))[0]
            if j.size == 0:
                raise ContractError(f"layer not sampled at t = {t}")
            if layer.psi.shape[1:] != f.shape:
                raise ContractError("layer and kinetic grids differ")
            lgaps[k] = norm_dm(diff - layer.psi[j[0]], meas)
    Te = T_eps(eps)
    after = gaps[times >= Te]
    l2 = math.sqrt(float(np.sum(0.5 * np.diff(times) * (gaps[1:] ** 2 + gaps[:-1] ** 2)))) if times.size > 1 else 0.0
    return GapMetrics(
        eps=eps, T_eps=Te, l2_dtdm=l2,
        sup_after=float(after.max()) if after.size else 0.0,
        sup_all=float(gaps.max()),
        sup_layer=float(lgaps.max()) if layer is not None else None,
        times=times, gaps=gaps,
    )


def restrict_pairs(f_fine) -> np.ndarray:
    """Average neighbouring cell pairs of a field on 2 nx cells onto nx cells."""
    f_fine = np.asarray(f_fine, dtype=float)
    if f_fine.shape[0] % 2:
        raise ContractError("fine grid must have an even number of cells")
    return 0.5 * (f_fine[0::2] + f_fine[1::2])


def richardson_snapshots(coarse, fine) -> list:
    """2 P(f_fine) - f_coarse at matching times; cancels the first-order scheme error."""
    if len(coarse) != len(fine):
        raise ContractError("coarse and fine runs hold different numbers of snapshots")
    out = []
    for (tc, fc), (tf, ff) in zip(coarse, fine):
        if not math.isclose(tc, tf, rel_tol=0, abs_tol=1e-12):
            raise ContractError(f"snapshot times differ: {tc} vs {tf}")
        pf = restrict_pairs(ff)
        if pf.shape != np.shape(fc):
            raise ContractError("fine grid is not a two-fold refinement of the coarse grid")
        out.append((tc, 2.0 * pf - np.asarray(fc, dtype=float)))
    return out


def loglog_order(eps, values) -> float:
    """Slope of log(values) against log(eps)."""
    eps, values = np.asarray(eps, dtype=float), np.asarray(values, dtype=float)
    if eps.size < 2 or np.any(values <= 0):
        return math.nan
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])
