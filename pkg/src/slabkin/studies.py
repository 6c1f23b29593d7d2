"""
Drivers shared by the CLI and the acceptance suite: single runs summarised for
reporting, epsilon sweeps and diffusion-limit studies.  Member functions are
top-level so they can be shipped to worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .asymptotics import (diffusion_gap, loglog_order, richardson_snapshots, solve_layer,
                          solve_parabolic)
from .diagnostics import dissipation_ledger, fit_trajectory
from .errors import ConfigError, FitError, SlabkinError
from .fields import moment0
from .transport import SimConfig, Trajectory, build_setup, initial_field, run_simulation, time_grid

SNAPSHOTS_PER_RUN = 200


def summarize(traj: Trajectory) -> dict:
    """Final norms, rate fit and ledger for one trajectory (JSON-ready)."""
    last = traj.records[-1]
    try:
        fit = fit_trajectory(traj).to_dict()
    except FitError as exc:
        fit = {"error": str(exc)}
    ledger = dissipation_ledger(traj).to_dict() if len(traj.records) >= 3 else None
    return {
        "final": {"t": last.t, "norm_f_minus_Mc": last.norm_f_minus_Mc, "norm_fperp": last.norm_fperp,
                  "mass": last.mass, "entropy_E": last.entropy_E},
        "M0": traj.M0, "M_c": traj.M_c, "kappa": traj.kappa, "dt": traj.dt, "n_steps": traj.n_steps,
        "rate_fit": fit,
        "ledger": ledger,
    }


def _pool_map(fn, items, workers: int | None):
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# sweeps


def sweep_member(cfg: SimConfig) -> dict:
    try:
        traj = run_simulation(cfg)
    except SlabkinError as exc:
        return {"epsilon": cfg.epsilon, "ok": False, "error": f"{type(exc).__name__}: {exc}"}
    out = summarize(traj)
    out.update(epsilon=cfg.epsilon, ok=True)
    return out


@dataclass
class SweepResult:
    members: list
    ratio: float | None
    partial: bool

    def to_dict(self) -> dict:
        return {"members": self.members, "lambda_ratio": self.ratio, "partial": self.partial}


def lambda_ratio(members) -> float | None:
    lams = [m["rate_fit"].get("lam") for m in members if m.get("ok")]
    lams = [x for x in lams if x is not None]
    if not lams:
        return None
    lo, hi = min(lams), max(lams)
    if lo <= 0:
        return math.inf if hi > 0 else 1.0
    return hi / lo


def sweep(base: SimConfig, eps_list, workers: int | None = None) -> SweepResult:
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ConfigError("empty epsilon list", "sweep.epsilons")
    cfgs = [base.replace(epsilon=e, dt=None) for e in eps_list]
    members = _pool_map(sweep_member, cfgs, workers)
    return SweepResult(members=members, ratio=lambda_ratio(members),
                       partial=not all(m["ok"] for m in members))


# ---------------------------------------------------------------------------
# diffusion limit


def _snapshot_cadence(n_steps: int) -> int:
    return max(1, n_steps // SNAPSHOTS_PER_RUN)


def limit_member(args) -> dict:
    """Kinetic run, optional refined control run, parabolic limit and layer for one eps.

    The control run doubles nx and takes exactly twice as many steps, so its
    snapshots land on the same times; 2 P(f_fine) - f_coarse then removes the
    first-order scheme error before the gap to the limit is measured.
    """
    cfg, control = args
    setup = build_setup(cfg)
    n, dt = time_grid(cfg, setup)
    k = _snapshot_cadence(n)
    coarse = run_simulation(cfg.replace(snapshot_every=k, record_every=max(n, 1)), setup)
    snaps = coarse.snapshots
    if control:
        fine = run_simulation(cfg.replace(nx=2 * cfg.nx, dt=dt / 2, snapshot_every=2 * k,
                                          record_every=max(2 * n, 1)))
        snaps_used = richardson_snapshots(coarse.snapshots, fine.snapshots)
    else:
        snaps_used = snaps
    f_in = initial_field(cfg, setup)
    rho_in = moment0(f_in, setup.vgrid)
    times = [t for t, _ in snaps]
    par = solve_parabolic(rho_in, setup.xgrid, setup.meas, times)
    layer = None  # well-prepared data: psi = 0 identically
    psi_in = f_in - rho_in[:, None]
    if np.max(np.abs(psi_in)) > 1e-13 * np.max(np.abs(f_in)):
        layer = solve_layer(psi_in, cfg.epsilon, cfg.kind, times, setup.vgrid, setup.meas)
    raw = diffusion_gap(snaps, par, setup.meas, cfg.epsilon, layer)
    gap = diffusion_gap(snaps_used, par, setup.meas, cfg.epsilon, layer)
    return {"epsilon": cfg.epsilon, "control": bool(control), "layer": layer is not None,
            "gap": gap.to_dict(), "gap_uncorrected": raw.to_dict(),
            "n_snapshots": len(times), "dt": dt, "n_steps": n}


def limit_study(base: SimConfig, eps_list, control: bool = True, workers: int | None = None) -> dict:
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ConfigError("empty epsilon list", "limit.epsilons")
    members = _pool_map(limit_member, [(base.replace(epsilon=e, dt=None), control) for e in eps_list],
                        workers)
    # with a layer the gap to rho alone is O(1) at t = 0, so the layer-corrected sup is tracked
    sups = [m["gap"]["sup_layer"] if m["layer"] else m["gap"]["sup_all"] for m in members]
    order = loglog_order(eps_list, sups)
    by_eps = sorted(zip(eps_list, sups), reverse=True)
    monotone = all(b[1] < a[1] for a, b in zip(by_eps, by_eps[1:]))
    return {"members": members, "sup_gap": sups, "order": order, "monotone": monotone,
            "order_l2": loglog_order(eps_list, [m["gap"]["l2_dtdm"] for m in members])}
