"""
Auxiliary Robin problem  u - u'' + phi' u' = S,  n.u' + c_b u = 0  on (0, 1).

Written as u - e^{phi} (e^{-phi} u')' = S and discretised by a three-point
flux form on the cell-centred mesh with ghost values closing the Robin
condition at second order.  With a_i = e^{-phi(x_i)} dx the stiffness part
is symmetric, and summation by parts holds exactly:

    sum_i a_i (L u)_i w_i = sum_faces A (du)(dw)/dx + sum_walls A_w ct_w u_adj w_adj,

where ct = c_b / (1 + c_b dx / 2) is the effective wall coefficient
(2 / dx in the Dirichlet limit c_b = inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .boundary import BoundaryConfig
from .errors import NumericalError
from .fields import initial_mass, moment0, perp
from .grids import MeasureWeights, Potential, SpatialGrid, VelocityGrid, measure_weights


def effective_wall_coefficient(c_b: float, dx: float) -> float:
    if not np.isfinite(c_b):
        return 2.0 / dx
    return c_b / (1.0 + 0.5 * c_b * dx)


@dataclass
class EllipticSolution:
    u: np.ndarray
    grad: np.ndarray  # (nx + 1,) first differences at faces, walls included
    d2: np.ndarray  # (nx,) second differences
    walls: np.ndarray  # (2,) wall traces from the ghost closure
    norm_u: float
    norm_grad: float
    norm_d2: float
    norm_boundary: float  # ||sqrt(c_b) u||_boundary
    residual: float  # ||u + L u - S|| / ||S||
    robin_residual: np.ndarray  # |n.u' + c_b u| at each wall (u_wall for Dirichlet walls)

    @property
    def grad_centers(self) -> np.ndarray:
        return 0.5 * (self.grad[1:] + self.grad[:-1])


class RobinOperator:
    """Assembled Robin problem for fixed mesh, potential and wall coefficients."""

    def __init__(self, xgrid: SpatialGrid, meas: MeasureWeights, bc: BoundaryConfig):
        self.xgrid = xgrid
        self.meas = meas
        self.c_b = np.array(bc.c_b, dtype=float)
        dx = xgrid.dx
        self.ct = np.array([effective_wall_coefficient(c, dx) for c in self.c_b])
        A = meas.x_face
        k = A[1:-1] / dx
        stiff = np.zeros(xgrid.nx)
        stiff[:-1] += k
        stiff[1:] += k
        stiff[0] += A[0] * self.ct[0]
        stiff[-1] += A[-1] * self.ct[1]
        self._stiff_diag, self._stiff_off = stiff, -k
        ab = np.zeros((2, xgrid.nx))
        ab[0, 1:] = -k
        ab[1] = meas.x_cell + stiff
        self._chol = cholesky_banded(ab, lower=False)

    def stiffness(self, u) -> np.ndarray:
        """K u = a dx L u."""
        u = np.asarray(u, dtype=float)
        Ku = self._stiff_diag * u
        Ku[:-1] += self._stiff_off * u[1:]
        Ku[1:] += self._stiff_off * u[:-1]
        return Ku

    def apply_L(self, u) -> np.ndarray:
        """-u'' + phi' u' with the Robin closure."""
        return self.stiffness(u) / self.meas.x_cell

    def ghosts(self, u) -> np.ndarray:
        dx = self.xgrid.dx
        g = []
        for c, ua in zip(self.c_b, (u[0], u[-1])):
            g.append(-ua if not np.isfinite(c) else ua * (1 - 0.5 * c * dx) / (1 + 0.5 * c * dx))
        return np.array(g)

    def boundary_form(self, u, w) -> float:
        """sum_walls e^{-phi_w} ct_w u_adj w_adj, the discrete (c_b u, w)_boundary."""
        A = self.meas.x_wall
        return float(A[0] * self.ct[0] * u[0] * w[0] + A[1] * self.ct[1] * u[-1] * w[-1])

    def grad_inner(self, u, w) -> float:
        """sum over interior faces of e^{-phi} du dw / dx."""
        A = self.meas.x_face[1:-1]
        return float(np.sum(A * np.diff(u) * np.diff(w)) / self.xgrid.dx)

    def solve(self, S) -> EllipticSolution:
        S = np.asarray(S, dtype=float)
        if not np.all(np.isfinite(S)):
            raise NumericalError("non-finite source in the Robin problem")
        u = cho_solve_banded((self._chol, False), self.meas.x_cell * S, check_finite=False)
        if not np.all(np.isfinite(u)):
            raise NumericalError("Robin solve failed")
        return self._solution(u, S)

    def _solution(self, u, S) -> EllipticSolution:
        dx = self.xgrid.dx
        gl, gr = self.ghosts(u)
        ext = np.concatenate(([gl], u, [gr]))
        grad = np.diff(ext) / dx
        d2 = np.diff(grad) / dx
        walls = 0.5 * np.array([gl + u[0], gr + u[-1]])
        ngrad = (-grad[0], grad[-1])  # outward normal derivative
        robin = np.array([abs(walls[w]) if not np.isfinite(c) else abs(ngrad[w] + c * walls[w])
                          for w, c in enumerate(self.c_b)])
        xc = self.meas.x_cell
        nS = math.sqrt(float(np.sum(xc * S**2)))
        r = u + self.apply_L(u) - S
        return EllipticSolution(
            u=u, grad=grad, d2=d2, walls=walls,
            norm_u=math.sqrt(float(np.sum(xc * u**2))),
            norm_grad=math.sqrt(max(self.grad_inner(u, u), 0.0)),
            norm_d2=math.sqrt(float(np.sum(xc * d2**2))),
            norm_boundary=math.sqrt(max(self.boundary_form(u, u), 0.0)),
            residual=math.sqrt(float(np.sum(xc * r**2))) / nS if nS > 0 else math.sqrt(float(np.sum(xc * r**2))),
            robin_residual=robin,
        )


def solve_robin(S, cfg: BoundaryConfig, pot: Potential, xgrid: SpatialGrid) -> EllipticSolution:
    from .grids import build_velocity_grid

    meas = measure_weights(build_velocity_grid(8, 4.0), xgrid, pot)
    return RobinOperator(xgrid, meas, cfg).solve(S)


def entropy_aux(f, vgrid: VelocityGrid, meas: MeasureWeights, bc: BoundaryConfig,
                op: RobinOperator | None = None, M0: float | None = None):
    """Solve the Robin problem with S = <f> - M_c and return (solution, A, M_c).

    M_c = M0 when both walls conserve mass (c_b = 0), otherwise 0.  Without an
    explicit M0 the normalised mass of f itself is used, which equals M0 along a
    conservative run.
    """
    op = op or RobinOperator(meas_xgrid(meas), meas, bc)
    if bc.conservative:
        M_c = initial_mass(f, meas) if M0 is None else float(M0)
    else:
        M_c = 0.0
    S = moment0(f, vgrid) - M_c
    sol = op.solve(S)
    A = float(np.sum(meas.x_cell * (S - sol.u) * S))
    return sol, A, M_c


def meas_xgrid(meas: MeasureWeights) -> SpatialGrid:
    from .grids import build_spatial_grid

    return build_spatial_grid(meas.x_cell.size)


def cross_term(f, sol: EllipticSolution, vgrid: VelocityGrid, meas: MeasureWeights) -> float:
    """(v . grad u, f_perp) under dm, grad u interpolated to cell centres."""
    fp = perp(f, vgrid)
    return float(np.sum(meas.cell * np.outer(sol.grad_centers, vgrid.nodes) * fp))


@dataclass
class EllipticReport:
    norm_S: float
    energy: float  # (S - u, S)
    full_norm: float  # ||u|| + ||grad u|| + ||D^2 u|| + ||sqrt(c_b) u||
    ratio_regularity: float  # full_norm / ||S||
    ratio_energy: float  # (||S|| + full_norm) / (S - u, S)^{1/2}
    ratio_poincare: float  # ||u|| / (||grad u|| + ||sqrt(c_b) u||)
    lower_bound_gap: float  # (S-u,S) - ||grad u||^2 - ||sqrt(c_b) u||^2  (>= 0)
    identity_residual: float  # |(S-u,S) - (||S||^2 - ||u||^2 - ||grad u||^2 - ||sqrt(c_b) u||^2)| / ||S||^2

    def ok(self, rtol: float = 1e-8) -> bool:
        scale = max(self.norm_S**2, 1e-300)
        return self.lower_bound_gap >= -rtol * scale and self.identity_residual <= rtol


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num == 0 else math.inf


def elliptic_inequality_report(S, sol: EllipticSolution, op: RobinOperator) -> EllipticReport:
    S = np.asarray(S, dtype=float)
    xc = op.meas.x_cell
    nS2 = float(np.sum(xc * S**2))
    energy = float(np.sum(xc * (S - sol.u) * S))
    g2 = op.grad_inner(sol.u, sol.u)
    b2 = op.boundary_form(sol.u, sol.u)
    u2 = float(np.sum(xc * sol.u**2))
    full = sol.norm_u + sol.norm_grad + sol.norm_d2 + sol.norm_boundary
    nS = math.sqrt(nS2)
    return EllipticReport(
        norm_S=nS, energy=energy, full_norm=full,
        ratio_regularity=_ratio(full, nS),
        ratio_energy=_ratio(nS + full, math.sqrt(max(energy, 0.0))),
        ratio_poincare=_ratio(sol.norm_u, sol.norm_grad + sol.norm_boundary),
        lower_bound_gap=energy - g2 - b2,
        identity_residual=_ratio(abs(energy - (nS2 - u2 - g2 - b2)), nS2) if nS2 > 0 else abs(energy),
    )
