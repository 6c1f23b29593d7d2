"""
Transport eps^{-1} (v d_x - phi' d_v) with first-order upwinding, Lie-split IMEX
stepping, and the simulation driver.

The transport is written in conservative form for F = e^{-phi} mu f,
    e^{-phi} mu (v d_x f - phi' d_v f) = d_x(e^{-phi} mu v f) + d_v(-phi' e^{-phi} mu f),
with face weights chosen so that the discrete velocity field is exactly
divergence free: constants are stationary, cell mass only moves through faces,
and the forward-Euler upwind update is a convex combination under the CFL
bound, which gives ||f*||^2 <= ||f||^2 - (dt/eps) (f^2, n.v)_boundary per step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .boundary import BoundaryConfig, wall_traces
from .collision import CollisionKind, implicit_collision_solve
from .errors import ConfigError, NumericalError
from .fields import initial_mass, macro_to_field
from .grids import (MeasureWeights, Potential, SpatialGrid, VelocityGrid, build_spatial_grid,
                    build_velocity_grid, make_potential, measure_weights)

logger = logging.getLogger(__name__)

INITIAL_KINDS = ("cosine", "bump", "shifted", "constant")


@dataclass(frozen=True)
class SimConfig:
    epsilon: float = 1.0
    kind: str = "bgk"
    nx: int = 64
    nv: int = 64
    vmax: float = 8.0
    alpha_left: float = 1.0
    beta_left: float = 0.0
    alpha_right: float = 1.0
    beta_right: float = 0.0
    iota: float = 1e-8
    potential: str = "zero"
    potential_amplitude: float = 0.0
    potential_path: str | None = None
    initial: str = "cosine"
    initial_amplitude: float = 0.5
    initial_center: float = 0.5
    initial_width: float = 0.1
    initial_value: float = 1.0
    T: float = 5.0
    cfl: float = 0.5
    dt: float | None = None
    record_every: int = 1
    snapshot_every: int = 0
    kappa_max: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ConfigError(f"epsilon must lie in (0, 1], got {self.epsilon}", "model.epsilon")
        CollisionKind.parse(self.kind)
        if not (0.0 < self.cfl < 1.0):
            raise ConfigError(f"cfl must lie in (0, 1), got {self.cfl}", "time.cfl")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be positive, got {self.T}", "time.T")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}", "time.dt")
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial preset {self.initial!r}", "initial.kind")
        if int(self.record_every) < 1:
            raise ConfigError("record_every must be >= 1", "output.record_every")
        if int(self.snapshot_every) < 0:
            raise ConfigError("snapshot_every must be >= 0", "output.snapshot_every")
        if not self.kappa_max > 0:
            raise ConfigError("kappa_max must be positive", "model.kappa_max")
        self.boundary  # validates alpha/beta
        build_velocity_grid(self.nv, self.vmax)
        make_potential(build_spatial_grid(self.nx), self.potential, self.potential_amplitude,
                       self.potential_path)

    @property
    def boundary(self) -> BoundaryConfig:
        return BoundaryConfig((self.alpha_left, self.alpha_right), (self.beta_left, self.beta_right), self.iota)

    @property
    def collision(self) -> CollisionKind:
        return CollisionKind.parse(self.kind)

    @property
    def well_prepared(self) -> bool:
        return self.initial in ("cosine", "bump", "constant")

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Setup:
    """Grids, measures and precomputed transport coefficients for one configuration."""

    cfg: SimConfig
    vgrid: VelocityGrid
    xgrid: SpatialGrid
    pot: Potential
    meas: MeasureWeights
    bc: BoundaryConfig
    # transport coefficients
    xflux: np.ndarray = field(repr=False)  # (nx+1, nv): v_j w_j A_{face}
    vcoef: np.ndarray = field(repr=False)  # (nx,): -g_i, the signed v-drift weight per cell
    omega: np.ndarray = field(repr=False)  # (nv+1,)
    mass_xv: np.ndarray = field(repr=False)  # (nx, nv): a_i w_j

    @cached_property
    def robin(self):
        from .elliptic import RobinOperator

        return RobinOperator(self.xgrid, self.meas, self.bc)


def build_setup(cfg: SimConfig) -> Setup:
    vgrid = build_velocity_grid(cfg.nv, cfg.vmax)
    xgrid = build_spatial_grid(cfg.nx)
    pot = make_potential(xgrid, cfg.potential, cfg.potential_amplitude, cfg.potential_path)
    meas = measure_weights(vgrid, xgrid, pot)
    A = meas.x_face
    a = np.exp(-pot.centers)
    g = (A[:-1] - A[1:]) / xgrid.dx  # ~ phi'(x_i) e^{-phi(x_i)}
    return Setup(
        cfg=cfg, vgrid=vgrid, xgrid=xgrid, pot=pot, meas=meas, bc=cfg.boundary,
        xflux=np.outer(A, vgrid.nodes * vgrid.weights),
        vcoef=-g,
        omega=vgrid.half_gaussian,
        mass_xv=np.outer(a, vgrid.weights),
    )


def stable_dt(cfg: SimConfig, setup: Setup | None = None) -> float:
    """dt = theta * eps / (vmax / dx + L_phi / dv)."""
    setup = setup or build_setup(cfg)
    return cfg.cfl * cfg.epsilon / (setup.vgrid.vmax / setup.xgrid.dx + setup.pot.lipschitz / setup.vgrid.dv)


def convexity_ratio(setup: Setup, dt: float) -> float:
    """Largest dt/eps * (outflow coefficient) / (cell weight); <= 1 makes the upwind step a convex update."""
    out_x = np.abs(setup.xflux)
    v_pos = setup.vgrid.nodes > 0
    # outflow x-face of cell i is i+1 for v > 0 and i for v < 0
    ox = np.where(v_pos[None, :], out_x[1:], out_x[:-1]) / setup.xgrid.dx
    up = setup.vcoef >= 0
    ov = np.where(up[:, None], setup.omega[None, 1:], setup.omega[None, :-1]) * np.abs(setup.vcoef)[:, None]
    return float(np.max((ox + ov) / setup.mass_xv)) * dt / setup.cfg.epsilon


def transport_rhs(f, setup: Setup, trace=None) -> np.ndarray:
    """-eps^{-1} (v d_x f - phi' d_v f) with upwind fluxes and closed wall traces."""
    f = np.asarray(f, dtype=float)
    vg = setup.vgrid
    if trace is None:
        trace = wall_traces(f, setup.bc, vg)
    ext = np.concatenate((trace[:1], f, trace[1:]), axis=0)  # ghost rows carry wall traces
    v_pos = vg.nodes > 0
    fup = np.where(v_pos[None, :], ext[:-1], ext[1:])
    X = setup.xflux * fup
    div = (X[1:] - X[:-1]) / setup.xgrid.dx

    if np.any(setup.vcoef != 0.0):
        c = setup.vcoef[:, None]
        f_lo = np.concatenate((f[:, :1], f), axis=1)  # value below face j+1/2 is f_j
        f_hi = np.concatenate((f, f[:, -1:]), axis=1)
        fv = np.where(c >= 0, f_lo, f_hi)
        Y = c * setup.omega[None, :] * fv
        div = div + (Y[:, 1:] - Y[:, :-1])

    return -div / (setup.mass_xv * setup.cfg.epsilon)


def step_imex(f, dt: float, setup: Setup, step: int | None = None, trace=None) -> np.ndarray:
    """Explicit upwind transport followed by the implicit collision solve with nu = dt / eps^2."""
    fstar = f + dt * transport_rhs(f, setup, trace)
    if not np.all(np.isfinite(fstar)):
        raise NumericalError("non-finite values after transport", step)
    g = implicit_collision_solve(fstar, dt / setup.cfg.epsilon**2, setup.cfg.kind, setup.vgrid)
    if not np.all(np.isfinite(g)):
        raise NumericalError("non-finite values after collision", step)
    return g


def initial_field(cfg: SimConfig, setup: Setup) -> np.ndarray:
    x = setup.xgrid.centers
    v = setup.vgrid.nodes
    a = cfg.initial_amplitude
    if cfg.initial == "cosine":
        return macro_to_field(1.0 + a * np.cos(np.pi * x), setup.vgrid)
    if cfg.initial == "bump":
        return macro_to_field(np.exp(-(((x - cfg.initial_center) / cfg.initial_width) ** 2)), setup.vgrid)
    if cfg.initial == "shifted":
        return 1.0 + a * np.outer(np.cos(np.pi * x), v)
    return np.full((setup.xgrid.nx, setup.vgrid.n), float(cfg.initial_value))


def time_grid(cfg: SimConfig, setup: Setup) -> tuple[int, float]:
    """Number of steps and the uniform step reaching T exactly without exceeding the stable step."""
    dt_max = stable_dt(cfg, setup)
    if cfg.dt is not None:
        if cfg.dt > dt_max * (1 + 1e-12):
            raise ConfigError(f"dt = {cfg.dt:g} exceeds the stable step {dt_max:g}", "time.dt")
        dt_max = cfg.dt
    n = max(1, math.ceil(cfg.T / dt_max - 1e-9))
    return n, cfg.T / n


@dataclass
class Trajectory:
    cfg: SimConfig
    records: list
    snapshots: list  # (t, f) pairs
    dt: float
    n_steps: int
    kappa: float
    M_c: float
    M0: float
    norm_in_sq: float
    volume: float

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def run_simulation(cfg: SimConfig, setup: Setup | None = None, f_in=None,
                   on_step: Callable | None = None) -> Trajectory:
    """Step from f_in to T recording diagnostics every ``record_every`` steps (and at T)."""
    from .diagnostics import Recorder

    setup = setup or build_setup(cfg)
    n_steps, dt = time_grid(cfg, setup)
    ratio = convexity_ratio(setup, dt)
    if ratio > 1.0:
        raise ConfigError(f"upwind step is not convex (ratio {ratio:.3f} > 1); lower time.cfl", "time.cfl")
    f = initial_field(cfg, setup) if f_in is None else np.array(f_in, dtype=float)
    rec = Recorder(setup, f)
    snapshots = [(0.0, f.copy())] if cfg.snapshot_every else []
    logger.info("run eps=%g kind=%s nx=%d nv=%d steps=%d dt=%.3e", cfg.epsilon, cfg.kind,
                cfg.nx, cfg.nv, n_steps, dt)
    for n in range(1, n_steps + 1):
        f = step_imex(f, dt, setup, step=n)
        t = n * dt
        if n % cfg.record_every == 0 or n == n_steps:
            rec.record(t, f)
        if cfg.snapshot_every and (n % cfg.snapshot_every == 0 or n == n_steps):
            snapshots.append((t, f.copy()))
        if on_step is not None:
            on_step(n, t, f)
    return Trajectory(cfg=cfg, records=rec.records, snapshots=snapshots, dt=dt, n_steps=n_steps,
                      kappa=rec.kappa, M_c=rec.M_c, M0=rec.M0, norm_in_sq=rec.norm_in_sq,
                      volume=setup.meas.volume)


def mass_of(f, setup: Setup) -> float:
    return float(np.sum(setup.meas.cell * f))


def M0_of(f, setup: Setup) -> float:
    return initial_mass(f, setup.meas)
