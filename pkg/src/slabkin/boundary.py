"""
Maxwell wall closure: alpha diffuse + beta specular + (1 - alpha - beta) absorbed.

The diffuse constant is taken per wall as c_w = 1 / S_out with
S_out = sum_{out} w_j |v_j|, so the diffuse value of a constant trace is exactly
that constant and the wall mass flux vanishes exactly when alpha + beta = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError
from .grids import NORMALS, MeasureWeights, VelocityGrid, flux_weight, inner_boundary

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryConfig:
    alpha: tuple = (1.0, 1.0)
    beta: tuple = (0.0, 0.0)
    iota: float = 1e-8
    s: np.ndarray = field(init=False, repr=False)
    c_b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.broadcast_to(np.asarray(self.alpha, dtype=float), (2,)))
        beta = tuple(float(b) for b in np.broadcast_to(np.asarray(self.beta, dtype=float), (2,)))
        for name, vals in (("alpha", alpha), ("beta", beta)):
            for w, x in zip(("left", "right"), vals):
                if not (0.0 <= x <= 1.0):
                    raise ConfigError(f"{name} must lie in [0, 1], got {x}", f"boundary.{name}_{w}")
        s = np.array(alpha) + np.array(beta)
        for w, x in zip(("left", "right"), s):
            if x > 1.0 + _SUM_TOL:
                raise ConfigError(f"alpha + beta <= 1 violated (sum = {x:g})", f"boundary.alpha_{w}")
        s = np.minimum(s, 1.0)
        c_b = np.where(s >= self.iota, (1.0 - s) / np.maximum(s, self.iota), np.inf)
        c_b[np.abs(1.0 - s) <= _SUM_TOL] = 0.0
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "c_b", c_b)

    @classmethod
    def uniform(cls, alpha: float, beta: float, iota: float = 1e-8) -> "BoundaryConfig":
        return cls((alpha, alpha), (beta, beta), iota)

    @property
    def absorbing(self) -> np.ndarray:
        """Per-wall pure-absorbing flag (alpha + beta < iota)."""
        return ~np.isfinite(self.c_b)

    @property
    def conservative(self) -> bool:
        """Both walls have alpha + beta = 1, so c_b = 0 and mass is conserved."""
        return bool(np.all(self.c_b == 0.0))


def outgoing_trace(f, vgrid: VelocityGrid) -> np.ndarray:
    """Wall trace holding upwind (adjacent-cell) values on outgoing nodes; incoming left as NaN."""
    f = np.asarray(f, dtype=float)
    trace = np.full((2, vgrid.n), np.nan)
    trace[0, vgrid.out_idx[0]] = f[0, vgrid.out_idx[0]]
    trace[1, vgrid.out_idx[1]] = f[-1, vgrid.out_idx[1]]
    return trace


def diffuse_values(trace, vgrid: VelocityGrid) -> np.ndarray:
    """D on both walls: sum_out w_j |v_j| f_j / S_out."""
    trace = np.asarray(trace, dtype=float)
    out = []
    for w in (0, 1):
        idx = vgrid.out_idx[w]
        flux = vgrid.weights[idx] * np.abs(vgrid.nodes[idx])
        out.append(float(np.sum(flux * trace[w, idx])) / float(np.sum(flux)))
    return np.array(out)


def diffuse_value(trace, wall: int, vgrid: VelocityGrid) -> float:
    return float(diffuse_values(trace, vgrid)[wall])


def incoming_closure(trace, cfg: BoundaryConfig, vgrid: VelocityGrid) -> np.ndarray:
    """Fill incoming nodes with alpha * D + beta * (mirrored outgoing value)."""
    trace = np.array(trace, dtype=float)
    if trace.shape != (2, vgrid.n):
        raise ContractError(f"trace shape {trace.shape} != (2, {vgrid.n})")
    D = diffuse_values(trace, vgrid)
    for w in (0, 1):
        out, inc = vgrid.out_idx[w], vgrid.in_idx[w]
        trace[w, inc] = cfg.alpha[w] * D[w] + cfg.beta[w] * trace[w, out]
    return trace


def wall_traces(f, cfg: BoundaryConfig, vgrid: VelocityGrid) -> np.ndarray:
    return incoming_closure(outgoing_trace(f, vgrid), cfg, vgrid)


def is_closed(trace, cfg: BoundaryConfig, vgrid: VelocityGrid, rtol: float = 1e-13) -> bool:
    trace = np.asarray(trace, dtype=float)
    if not np.all(np.isfinite(trace)):
        return False
    ref = incoming_closure(trace, cfg, vgrid)
    scale = max(float(np.max(np.abs(trace))), 1e-300)
    return bool(np.max(np.abs(ref - trace)) <= rtol * scale)


def boundary_dissipation(trace, M: MeasureWeights, vgrid: VelocityGrid) -> float:
    """(f^2, n.v)_boundary."""
    return inner_boundary(trace, trace, flux_weight, M, vgrid)


def mass_flux(trace, M: MeasureWeights, vgrid: VelocityGrid) -> np.ndarray:
    """Net outward mass flux sum_j b_j (n.v_j) f_j on each wall."""
    trace = np.asarray(trace, dtype=float)
    return np.sum(M.wall * np.outer(NORMALS, vgrid.nodes) * trace, axis=1)


@dataclass
class IdentityReport:
    lhs: float
    rhs_form1: float
    rhs_form2: float
    scale: float
    residual_form1: float
    residual_form2: float
    tangential_lhs: float
    tangential_rhs: float
    residual_tangential: float
    robin_lhs: float
    robin_rhs: float
    robin_constant: float

    @property
    def robin_ok(self) -> bool:
        return self.robin_lhs <= self.robin_rhs * (1 + 1e-12) + 1e-300

    def ok(self, rtol: float = 1e-12) -> bool:
        return (self.residual_form1 <= rtol and self.residual_form2 <= rtol
                and self.residual_tangential <= rtol and self.robin_ok)


def _half_sums(trace, D, M: MeasureWeights, vgrid: VelocityGrid):
    """Per-wall outgoing half-range sums of b|v| (f - D)^2, b|v| D^2, b|v| f^2."""
    dev, dsq, fsq = np.zeros(2), np.zeros(2), np.zeros(2)
    for w in (0, 1):
        idx = vgrid.out_idx[w]
        bw = M.wall[w, idx] * np.abs(vgrid.nodes[idx])
        f = trace[w, idx]
        dev[w] = np.sum(bw * (f - D[w]) ** 2)
        dsq[w] = np.sum(bw) * D[w] ** 2
        fsq[w] = np.sum(bw * f**2)
    return dev, dsq, fsq


def robin_constant(cfg: BoundaryConfig, vgrid: VelocityGrid) -> float:
    """Explicit constant K for |(v.(U - c_b rho n) f, n.v)| <= K (|U - c_b rho n| + |sqrt(c_b) rho|) B^{1/2}.

    Per wall with 0 < c_b < inf and s = alpha + beta,
        K_w = sqrt((1 + s) / s) * (sqrt(m3) + m2 / sqrt(m1)),
    where m_k = Z^{-1} sum_out w_j |v_j|^k.  Derived by Cauchy-Schwarz on the
    outgoing half-range sums after the mirror change of variables.
    """
    idx = vgrid.out_idx[1]
    w, v = vgrid.weights[idx] / vgrid.Z, np.abs(vgrid.nodes[idx])
    m1, m2, m3 = (float(np.sum(w * v**k)) for k in (1, 2, 3))
    K = 0.0
    for s, c in zip(cfg.s, cfg.c_b):
        if 0.0 < c < np.inf:
            K = max(K, math.sqrt((1 + s) / s) * (math.sqrt(m3) + m2 / math.sqrt(m1)))
    return K


def identity_residuals(trace, cfg: BoundaryConfig, M: MeasureWeights, vgrid: VelocityGrid,
                       U=(0.0, 0.0), rho=(1.0, 1.0)) -> IdentityReport:
    """Check the wall identities for a closed trace.

    (f^2, n.v) = ((1-b^2)(f-Df)^2, (n.v)_+) + ((1-(a+b)^2)(Df)^2, (n.v)_+)
               = ((a^2+2ab)(f-Df)^2, (n.v)_+) + ((1-(a+b)^2) f^2, (n.v)_+),
    (v U f, n.v) = (v U [(1-b) f - a Df], (n.v)_+)  for U tangential (U = 0 on a slab wall),
    and the Robin-type bound with U = 0 and per-wall scalars rho.
    """
    trace = np.asarray(trace, dtype=float)
    if not is_closed(trace, cfg, vgrid):
        raise ContractError("trace does not satisfy the incoming closure")
    U = np.asarray(U, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(U != 0.0):
        raise ContractError("on a slab the tangential condition n.U = 0 forces U = 0")
    a, b, s = np.array(cfg.alpha), np.array(cfg.beta), cfg.s
    D = diffuse_values(trace, vgrid)
    dev, dsq, fsq = _half_sums(trace, D, M, vgrid)
    lhs = boundary_dissipation(trace, M, vgrid)
    rhs1 = float(np.sum((1 - b**2) * dev + (1 - s**2) * dsq))
    rhs2 = float(np.sum((a**2 + 2 * a * b) * dev + (1 - s**2) * fsq))
    scale = max(inner_boundary(trace, trace, lambda n, v: np.abs(v), M, vgrid), 1e-300)

    # tangential identity: both sides carry the factor v.U, identically zero here
    nv_ = np.outer(NORMALS, vgrid.nodes)
    vU = np.outer(U, vgrid.nodes)
    t_lhs = float(np.sum(M.wall * vU * trace * nv_))
    t_rhs = 0.0
    for w in (0, 1):
        idx = vgrid.out_idx[w]
        t_rhs += float(np.sum(M.wall[w, idx] * vU[w, idx] * ((1 - b[w]) * trace[w, idx] - a[w] * D[w])
                              * np.abs(vgrid.nodes[idx])))

    active = np.isfinite(cfg.c_b)
    c = np.where(active, cfg.c_b, 0.0)
    r_lhs = abs(float(np.sum(c * rho * np.sum(M.wall * vgrid.nodes**2 * trace, axis=1))))
    norm_crho = math.sqrt(float(np.sum((c * rho) ** 2 * M.x_wall)))
    norm_sqrt = math.sqrt(float(np.sum(c * rho**2 * M.x_wall)))
    K = robin_constant(cfg, vgrid)
    r_rhs = K * (norm_crho + norm_sqrt) * math.sqrt(max(lhs, 0.0))

    return IdentityReport(
        lhs=lhs, rhs_form1=rhs1, rhs_form2=rhs2, scale=scale,
        residual_form1=abs(lhs - rhs1) / scale, residual_form2=abs(lhs - rhs2) / scale,
        tangential_lhs=t_lhs, tangential_rhs=t_rhs,
        residual_tangential=abs(t_lhs - t_rhs) / scale,
        robin_lhs=r_lhs, robin_rhs=r_rhs, robin_constant=K,
    )
