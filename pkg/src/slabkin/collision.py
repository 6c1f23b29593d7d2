"""
Linear collision operators acting in v only: BGK relaxation and Fokker-Planck.

The Fokker-Planck operator is discretised in divergence form
    (L2 f)_j = (F_{j+1/2} - F_{j-1/2}) / w_j,   F_{j+1/2} = mu(v_{j+1/2}) (f_{j+1} - f_j) / dv,
with zero flux at +-vmax, so sum_j w_j (L2 f)_j telescopes to zero and
w_j (L2 f)_j is a symmetric negative semidefinite form.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import ConfigError, ContractError, NumericalError
from .fields import moment0
from .grids import VelocityGrid


class CollisionKind(str, Enum):
    BGK = "bgk"
    FP = "fp"

    @classmethod
    def parse(cls, value) -> "CollisionKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown collision kind {value!r} (expected 'bgk' or 'fp')", "model.kind") from None


def apply_bgk(f, vgrid: VelocityGrid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return moment0(f, vgrid)[:, None] - f


def fp_fluxes(f, vgrid: VelocityGrid) -> np.ndarray:
    """Fluxes at all nv + 1 half nodes (zero at both ends)."""
    f = np.asarray(f, dtype=float)
    inner = vgrid.mu_faces * np.diff(f, axis=-1) / vgrid.dv
    pad = np.zeros(f.shape[:-1] + (1,))
    return np.concatenate((pad, inner, pad), axis=-1)


def apply_fp(f, vgrid: VelocityGrid) -> np.ndarray:
    F = fp_fluxes(f, vgrid)
    return np.diff(F, axis=-1) / vgrid.weights


def apply_collision(f, vgrid: VelocityGrid, kind) -> np.ndarray:
    kind = CollisionKind.parse(kind)
    return apply_bgk(f, vgrid) if kind is CollisionKind.BGK else apply_fp(f, vgrid)


@lru_cache(maxsize=32)
def _fp_cholesky(nv: int, vmax: float, nu: float) -> np.ndarray:
    from .grids import build_velocity_grid

    vg = build_velocity_grid(nv, vmax)
    k = vg.mu_faces / vg.dv
    diag = vg.weights.copy()
    diag[:-1] += nu * k
    diag[1:] += nu * k
    ab = np.zeros((2, nv))
    ab[0, 1:] = -nu * k
    ab[1] = diag
    return cholesky_banded(ab, lower=False)


def fp_system_matrix(vgrid: VelocityGrid, nu: float) -> np.ndarray:
    """Dense symmetric matrix diag(w) - nu * W L2 (for tests and small checks)."""
    k = vgrid.mu_faces / vgrid.dv
    A = np.diag(vgrid.weights.astype(float))
    idx = np.arange(vgrid.n - 1)
    A[idx, idx] += nu * k
    A[idx + 1, idx + 1] += nu * k
    A[idx, idx + 1] -= nu * k
    A[idx + 1, idx] -= nu * k
    return A


def implicit_collision_solve(f, nu: float, kind, vgrid: VelocityGrid) -> np.ndarray:
    """Solve (I - nu L) g = f independently in every spatial cell."""
    if not nu > 0:
        raise ContractError(f"nu must be positive, got {nu}")
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise NumericalError("non-finite input to the collision solve")
    kind = CollisionKind.parse(kind)
    if kind is CollisionKind.BGK:
        rho = moment0(f, vgrid)[:, None]
        return rho + (f - rho) / (1.0 + nu)
    cb = _fp_cholesky(vgrid.n, vgrid.vmax, float(nu))
    rhs = (f * vgrid.weights).T
    g = cho_solve_banded((cb, False), rhs, check_finite=False).T
    # the exact solve conserves <f>; remove the rounding drift so long runs stay conservative
    g += (moment0(f, vgrid) - moment0(g, vgrid))[:, None]
    if not np.all(np.isfinite(g)):
        raise NumericalError("Fokker-Planck solve produced non-finite values")
    return np.ascontiguousarray(g)
