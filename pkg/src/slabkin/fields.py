"""
Macro-micro decomposition of distribution fields.

A field is an array f[i, j] ~ f(x_i, v_j) of shape (nx, nv), understood as a
density against dm.  Snapshots pair it with a time stamp and serialise to text.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError
from .grids import MeasureWeights, VelocityGrid, inner_dm


@dataclass
class DistributionField:
    values: np.ndarray
    t: float = 0.0


def _check(f, vgrid: VelocityGrid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[1] != vgrid.n:
        raise ContractError(f"field of shape {f.shape} does not match nv = {vgrid.n}")
    return f


def moment0(f, vgrid: VelocityGrid) -> np.ndarray:
    """<f>_i = Z^{-1} sum_j w_j f_ij."""
    return _check(f, vgrid) @ vgrid.weights / vgrid.Z


def moment1(f, vgrid: VelocityGrid) -> np.ndarray:
    """<v f>_i = Z^{-1} sum_j w_j v_j f_ij."""
    return _check(f, vgrid) @ (vgrid.weights * vgrid.nodes) / vgrid.Z


def perp(f, vgrid: VelocityGrid) -> np.ndarray:
    f = _check(f, vgrid)
    return f - moment0(f, vgrid)[:, None]


def mass(f, M: MeasureWeights) -> float:
    """(f, 1) under dm."""
    return inner_dm(f, np.ones_like(M.cell), M)


def initial_mass(f_in, M: MeasureWeights) -> float:
    """M0 = (int e^{-phi} dx)^{-1} int f_in dm."""
    return mass(f_in, M) / M.volume


def macro_to_field(rho, vgrid: VelocityGrid) -> np.ndarray:
    """Broadcast a macro field rho_i to the velocity-independent field rho_i * 1_j."""
    return np.repeat(np.asarray(rho, dtype=float)[:, None], vgrid.n, axis=1)


def dump_snapshot(path, field: DistributionField, vmax: float) -> None:
    """Text snapshot: header line 'nx nv vmax t' then one row of nv values per cell."""
    f = np.asarray(field.values, dtype=float)
    nx, nv = f.shape
    header = f"{nx} {nv} {vmax!r} {float(field.t)!r}"
    np.savetxt(Path(path), f, fmt="%.17g", header=header, comments="")


def load_snapshot(path) -> tuple[DistributionField, float]:
    path = Path(path)
    with path.open() as fh:
        head = fh.readline().split()
        if len(head) != 4:
            raise ContractError(f"{path}: malformed snapshot header")
        nx, nv, vmax, t = int(head[0]), int(head[1]), float(head[2]), float(head[3])
        values = np.loadtxt(fh, ndmin=2)
    if values.shape != (nx, nv):
        raise ContractError(f"{path}: expected {(nx, nv)} values, found {values.shape}")
    return DistributionField(values=values, t=t), vmax
