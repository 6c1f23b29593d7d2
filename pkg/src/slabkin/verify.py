"""
Invariant suites behind ``slabkin verify``.

Each suite returns a list of ``CaseResult``; a case fails when its residual
exceeds its tolerance.  Random cases draw from ``numpy.random.default_rng(seed)``
so a fixed seed reproduces the report exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .asymptotics import solve_layer, solve_parabolic
from .boundary import BoundaryConfig, identity_residuals, incoming_closure
from .collision import apply_bgk, apply_fp
from .elliptic import RobinOperator, elliptic_inequality_report
from .fields import moment0, perp
from .grids import build_spatial_grid, build_velocity_grid, inner_dm, make_potential, measure_weights, norm_dm
from .transport import SimConfig, build_setup, step_imex, stable_dt

FAULTS = ("none", "flip-weight")
IDENTITY_CFGS = ((1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.3, 0.3), (0.0, 0.0))


@dataclass
class CaseResult:
    module: str
    case: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _random_closed_trace(rng, bc, vg):
    f = rng.normal(1.0, 0.5, size=(2, vg.n)) * (1.0 + rng.uniform(0, 2))
    trace = np.full((2, vg.n), np.nan)
    for w in (0, 1):
        trace[w, vg.out_idx[w]] = f[w, vg.out_idx[w]]
    return incoming_closure(trace, bc, vg)


def boundary_suite(rng, fault: str = "none", n_traces: int = 200) -> list[CaseResult]:
    vg = build_velocity_grid(64, 8.0)
    xg = build_spatial_grid(16)
    meas = measure_weights(vg, xg, make_potential(xg, "cosine", 0.5))
    if fault == "flip-weight":
        wall = meas.wall.copy()
        wall[0, vg.in_idx[0][0]] *= -1.0  # one incoming node on the left wall
        meas = replace(meas, wall=wall)
    out = []
    for a, b in IDENTITY_CFGS:
        bc = BoundaryConfig.uniform(a, b)
        worst = 0.0
        robin_viol = 0.0
        for _ in range(n_traces // len(IDENTITY_CFGS)):
            rep = identity_residuals(_random_closed_trace(rng, bc, vg), bc, meas, vg,
                                     rho=rng.uniform(-2, 2, size=2))
            worst = max(worst, rep.residual_form1, rep.residual_form2, rep.residual_tangential)
            robin_viol = max(robin_viol, 0.0 if rep.robin_ok else 1.0)
        out.append(CaseResult("boundary", f"identity alpha={a} beta={b}", worst, 1e-12))
        out.append(CaseResult("boundary", f"robin bound alpha={a} beta={b}", robin_viol, 0.0))
    return out


def collision_suite(rng, n_fields: int = 200) -> list[CaseResult]:
    vg = build_velocity_grid(64, 8.0)
    xg = build_spatial_grid(8)
    meas = measure_weights(vg, xg, make_potential(xg))
    mass_err, diss, gap = 0.0, -math.inf, 0.0
    for _ in range(n_fields):
        f = rng.normal(size=(xg.nx, vg.n))
        for op in (apply_bgk, apply_fp):
            Lf = op(f, vg)
            mass_err = max(mass_err, float(np.max(np.abs(moment0(Lf, vg)))) / float(np.max(np.abs(f))))
            diss = max(diss, inner_dm(Lf, f, meas) / norm_dm(f, meas) ** 2)
        gap = max(gap, abs(inner_dm(apply_bgk(f, vg), f, meas) + norm_dm(perp(f, vg), meas) ** 2)
                  / norm_dm(f, meas) ** 2)
    out = [CaseResult("collision", "moment0(L f) = 0", mass_err, 1e-13),
           CaseResult("collision", "(L f, f) <= 0", max(diss, 0.0), 1e-14),
           CaseResult("collision", "BGK (L f, f) = -||f_perp||^2", gap, 1e-13)]
    errs = []
    for nv in (32, 64, 128):
        g = build_velocity_grid(nv, 8.0)
        e = []
        for p, lam in ((g.nodes, 1.0), (g.nodes**2 - 1.0, 2.0)):
            r = apply_fp(p[None, :], g)[0] + lam * p
            e.append(math.sqrt(float(np.sum(g.weights * r**2)) / g.Z))  # L^2(dmu)
        errs.append(e)
    errs = np.array(errs)
    order = float(np.min(np.log2(errs[:-1] / errs[1:])))
    out.append(CaseResult("collision", "FP eigen-relations order >= 1.8", max(0.0, 1.8 - order), 0.0))
    return out


def elliptic_suite(rng, n_sources: int = 100) -> list[CaseResult]:
    out = []
    errs = []
    for nx in (32, 64, 128):
        xg = build_spatial_grid(nx)
        meas = measure_weights(build_velocity_grid(8, 4.0), xg, make_potential(xg))
        op = RobinOperator(xg, meas, BoundaryConfig())
        S = (1 + np.pi**2) * np.cos(np.pi * xg.centers)
        errs.append(float(np.max(np.abs(op.solve(S).u - np.cos(np.pi * xg.centers)))))
    order = math.log2(errs[1] / errs[2])
    out.append(CaseResult("elliptic", "manufactured order in [1.8, 2.2]", max(0.0, abs(order - 2.0) - 0.2), 0.0))
    xg = build_spatial_grid(64)
    meas = measure_weights(build_velocity_grid(8, 4.0), xg, make_potential(xg, "cosine", 0.5))
    for s in (1.0, 0.5, 1.0 / (1.0 + 1e3), 0.0):  # c_b = 0, 1, 1e3, Dirichlet
        bc = BoundaryConfig.uniform(s, 0.0)
        op = RobinOperator(xg, meas, bc)
        worst = 0.0
        for _ in range(n_sources):
            S = rng.normal(size=xg.nx)
            rep = elliptic_inequality_report(S, op.solve(S), op)
            scale = rep.norm_S**2
            worst = max(worst, rep.identity_residual, max(0.0, -rep.lower_bound_gap) / scale)
        out.append(CaseResult("elliptic", f"exact relations c_b={float(bc.c_b[0]):g}", worst, 1e-8))
    return out


def layer_suite() -> list[CaseResult]:
    vg = build_velocity_grid(128, 8.0)
    xg = build_spatial_grid(4)
    meas = measure_weights(vg, xg, make_potential(xg))
    psi = np.tile(vg.nodes, (xg.nx, 1))
    eps = 0.5
    t = np.linspace(0.0, 3.0, 31) * eps**2
    ex = np.exp(-t / eps**2)
    out = []
    for kind, tol in (("bgk", 1e-14), ("fp", 1e-2)):
        L = solve_layer(psi, eps, kind, t, vg, meas)
        out.append(CaseResult("asymptotics", f"{kind} layer vs exp(-t/eps^2)",
                              float(np.max(np.abs(L.norm / L.norm[0] - ex) / ex)), tol))
    return out


def parabolic_suite() -> list[CaseResult]:
    errs = []
    for nx in (32, 64):
        xg = build_spatial_grid(nx)
        meas = measure_weights(build_velocity_grid(8, 4.0), xg, make_potential(xg))
        x = xg.centers
        par = solve_parabolic(1 + np.cos(np.pi * x), xg, meas, [0.0, 0.05, 0.1])
        errs.append(float(np.max(np.abs(par.rho[-1] - (1 + np.exp(-np.pi**2 * 0.1) * np.cos(np.pi * x))))))
    order = math.log2(errs[0] / errs[1])
    return [CaseResult("asymptotics", "parabolic oracle error (nx=64)", errs[1], 1e-3),
            CaseResult("asymptotics", "parabolic order >= 1.8", max(0.0, 1.8 - order), 0.0)]


def transport_suite() -> list[CaseResult]:
    cfg = SimConfig(epsilon=0.5, nx=32, nv=32, potential="cosine", potential_amplitude=0.5)
    s = build_setup(cfg)
    dt = stable_dt(cfg, s)
    c = np.full((cfg.nx, cfg.nv), 1.7)
    stat = float(np.max(np.abs(step_imex(c, dt, s) - c)))
    rng = np.random.default_rng(0)
    growth = 0.0
    for bc in ((1.0, 0.0), (0.3, 0.3), (0.0, 0.0)):
        sb = build_setup(cfg.replace(alpha_left=bc[0], alpha_right=bc[0], beta_left=bc[1], beta_right=bc[1]))
        f = rng.normal(1.0, 0.5, size=(cfg.nx, cfg.nv))
        for _ in range(5):
            g = step_imex(f, dt, sb)
            growth = max(growth, norm_dm(g, sb.meas) / norm_dm(f, sb.meas) - 1.0)
            f = g
    return [CaseResult("transport", "constants stationary", stat, 1e-13),
            CaseResult("transport", "||f_new|| <= ||f|| (1 + 1e-12)", max(growth, 0.0), 1e-12)]


def run_all(seed: int = 0, fault: str = "none") -> list[CaseResult]:
    if fault not in FAULTS:
        raise ValueError(f"unknown fault mode {fault!r}")
    rng = np.random.default_rng(seed)
    return (boundary_suite(rng, fault) + collision_suite(rng) + elliptic_suite(rng)
            + layer_suite() + parabolic_suite() + transport_suite())


def format_report(results: list[CaseResult]) -> str:
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.module:<12} {r.case:<40} residual={r.residual:.3e} tol={r.tol:.1e}"
             for r in results]
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} cases passed")
    return "\n".join(lines)
