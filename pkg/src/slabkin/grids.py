"""
Discrete geometry for the slab (0, 1) x R.

Velocity quadrature for the Gaussian measure, the cell-centred spatial mesh,
external potential presets, and the weights realising the measures
dm = e^{-phi} dmu dx (cells) and e^{-phi} dmu (walls).

Walls are indexed 0 = left (outward normal -1) and 1 = right (outward normal +1).
Fields live on arrays of shape (nx, nv); wall traces on arrays of shape (2, nv).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, ContractError

NORMALS = np.array([-1.0, 1.0])
SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian(v):
    return np.exp(-0.5 * np.asarray(v, dtype=float) ** 2) / SQRT_2PI


@dataclass(frozen=True)
class VelocityGrid:
    nodes: np.ndarray
    dv: float
    weights: np.ndarray  # raw w_j = mu(v_j) dv
    Z: float
    s_plus: float
    s_minus: float
    vmax: float
    # outgoing / incoming node indices per wall, ordered so that in_idx[w][k] mirrors out_idx[w][k]
    out_idx: tuple = field(repr=False)
    in_idx: tuple = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def mirror(self) -> np.ndarray:
        """Index permutation realising v -> -v."""
        return np.arange(self.n)[::-1]

    @property
    def mass_error(self) -> float:
        return abs(self.Z - 1.0)

    @property
    def energy_error(self) -> float:
        return abs(float(np.sum(self.weights * self.nodes**2)) / self.Z - 1.0)

    @property
    def mu_faces(self) -> np.ndarray:
        """Gaussian at the nv - 1 interior half nodes v_{j+1/2}."""
        return gaussian(0.5 * (self.nodes[1:] + self.nodes[:-1]))

    @property
    def half_gaussian(self) -> np.ndarray:
        """Discrete Gaussian at all nv + 1 half nodes.

        Built as omega_{j+1/2} = -sum_{k<=j} v_k w_k, mirrored about v = 0, so that
        omega_{j+1/2} - omega_{j-1/2} = -v_j w_j and omega vanishes at +-vmax.
        """
        h = self.n // 2
        lower = np.concatenate(([0.0], -np.cumsum(self.nodes[:h] * self.weights[:h])))
        return np.concatenate((lower, lower[-2::-1]))


def build_velocity_grid(nv: int = 64, vmax: float = 8.0) -> VelocityGrid:
    if int(nv) != nv or nv < 8 or nv % 2:
        raise ConfigError(f"nv must be an even integer >= 8, got {nv}", "grids.nv")
    if not np.isfinite(vmax) or vmax <= 0:
        raise ConfigError(f"vmax must be positive, got {vmax}", "grids.vmax")
    if vmax < 4:
        raise ConfigError(f"vmax must be >= 4 for a negligible Gaussian tail, got {vmax}", "grids.vmax")
    nv = int(nv)
    dv = 2.0 * vmax / nv
    half = (np.arange(nv // 2) + 0.5) * dv
    nodes = np.concatenate((-half[::-1], half))
    w = gaussian(nodes) * dv
    h = nv // 2
    pos = np.arange(h, nv)
    neg = np.arange(h - 1, -1, -1)  # |v| increasing, matches pos term by term
    s_plus = float(np.sum(w[pos] * nodes[pos]))
    s_minus = float(np.sum(w[neg] * -nodes[neg]))
    return VelocityGrid(
        nodes=nodes, dv=dv, weights=w, Z=float(np.sum(w)),
        s_plus=s_plus, s_minus=s_minus, vmax=float(vmax),
        out_idx=(neg, pos), in_idx=(pos, neg),
    )


@dataclass(frozen=True)
class SpatialGrid:
    nx: int
    dx: float
    centers: np.ndarray
    faces: np.ndarray

    normals = NORMALS


def build_spatial_grid(nx: int = 64) -> SpatialGrid:
    if int(nx) != nx or nx < 2:
        raise ConfigError(f"nx must be an integer >= 2, got {nx}", "grids.nx")
    nx = int(nx)
    dx = 1.0 / nx
    return SpatialGrid(nx=nx, dx=dx, centers=(np.arange(nx) + 0.5) * dx, faces=np.arange(nx + 1) * dx)


@dataclass(frozen=True)
class Potential:
    kind: str
    params: dict
    centers: np.ndarray
    faces: np.ndarray
    slopes: np.ndarray  # phi' at the nx + 1 faces
    lipschitz: float

    @property
    def walls(self) -> np.ndarray:
        return self.faces[[0, -1]]


def _table_potential(path) -> tuple[Callable, Callable]:
    data = np.loadtxt(Path(path), ndmin=2)
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise ConfigError("tabulated potential needs two columns (x, phi) and >= 2 rows", "potential.path")
    x, p = data[:, 0], data[:, 1]
    if np.any(np.diff(x) <= 0) or x[0] > 0 or x[-1] < 1:
        raise ConfigError("tabulated x must be increasing and cover [0, 1]", "potential.path")
    slopes = np.diff(p) / np.diff(x)

    def value(s):
        return np.interp(s, x, p)

    def slope(s):
        k = np.clip(np.searchsorted(x, s, side="right") - 1, 0, slopes.size - 1)
        return slopes[k]

    return value, slope


def make_potential(xgrid: SpatialGrid, kind: str = "zero", amplitude: float = 0.0,
                   path: str | None = None) -> Potential:
    """Potential presets: zero, linear a*x, cosine a*cos(pi x), table (two-column file)."""
    a = float(amplitude)
    if kind == "zero":
        value = lambda s: np.zeros_like(s)
        slope = lambda s: np.zeros_like(s)
    elif kind == "linear":
        value = lambda s: a * s
        slope = lambda s: np.full_like(s, a)
    elif kind == "cosine":
        value = lambda s: a * np.cos(np.pi * s)
        slope = lambda s: -a * np.pi * np.sin(np.pi * s)
    elif kind == "table":
        if path is None:
            raise ConfigError("table potential needs a path", "potential.path")
        value, slope = _table_potential(path)
    else:
        raise ConfigError(f"unknown potential kind {kind!r}", "potential.kind")
    centers = np.asarray(value(xgrid.centers), dtype=float)
    faces = np.asarray(value(xgrid.faces), dtype=float)
    slopes = np.asarray(slope(xgrid.faces), dtype=float)
    if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(faces)) and np.all(np.isfinite(slopes))):
        raise ConfigError("potential has non-finite values", "potential")
    params = {"amplitude": a} if kind != "table" else {"path": str(path)}
    return Potential(kind=kind, params=params, centers=centers, faces=faces, slopes=slopes,
                     lipschitz=float(np.max(np.abs(slopes))))


@dataclass(frozen=True)
class MeasureWeights:
    cell: np.ndarray  # (nx, nv): e^{-phi(x_i)} w_j dx / Z
    wall: np.ndarray  # (2, nv): e^{-phi(wall)} w_j / Z
    x_cell: np.ndarray  # (nx,): e^{-phi(x_i)} dx, the measure for macro fields
    x_face: np.ndarray  # (nx + 1,): e^{-phi} at faces
    x_wall: np.ndarray  # (2,): e^{-phi} at the walls

    @property
    def volume(self) -> float:
        """Discrete integral of e^{-phi} over (0, 1)."""
        return float(np.sum(self.x_cell))


def measure_weights(vgrid: VelocityGrid, xgrid: SpatialGrid, pot: Potential) -> MeasureWeights:
    a = np.exp(-pot.centers)
    A = np.exp(-pot.faces)
    wn = vgrid.weights / vgrid.Z
    return MeasureWeights(
        cell=np.outer(a * xgrid.dx, wn),
        wall=np.outer(A[[0, -1]], wn),
        x_cell=a * xgrid.dx,
        x_face=A,
        x_wall=A[[0, -1]],
    )


def inner_dm(F, G, M: MeasureWeights) -> float:
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if F.shape != M.cell.shape or G.shape != M.cell.shape:
        raise ContractError(f"field shapes {F.shape}, {G.shape} do not match grid {M.cell.shape}")
    return float(np.sum(M.cell * F * G))


def norm_dm(F, M: MeasureWeights) -> float:
    return math.sqrt(max(inner_dm(F, F, M), 0.0))


def inner_x(a, b, M: MeasureWeights) -> float:
    """Inner product of macro fields, (a, b) = sum_i e^{-phi_i} dx a_i b_i."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != M.x_cell.shape or b.shape != M.x_cell.shape:
        raise ContractError(f"macro shapes {a.shape}, {b.shape} do not match {M.x_cell.shape}")
    return float(np.sum(M.x_cell * a * b))


def normal_velocity(vgrid: VelocityGrid) -> np.ndarray:
    """n_x . v_j on each wall, shape (2, nv)."""
    return np.outer(NORMALS, vgrid.nodes)


def inner_boundary(F, G, weight, M: MeasureWeights, vgrid: VelocityGrid) -> float:
    """sum_wall sum_j b_{wall,j} weight(wall, v_j) F G.

    ``weight`` is an array broadcastable to (2, nv) or a callable ``(n, v) -> array``
    evaluated on the (2, nv) tables of normals and velocities.
    """
    F = np.asarray(F, dtype=float)
    G = np.asarray(G, dtype=float)
    if F.shape != M.wall.shape or G.shape != M.wall.shape:
        raise ContractError(f"trace shapes {F.shape}, {G.shape} do not match {M.wall.shape}")
    if callable(weight):
        n = np.broadcast_to(NORMALS[:, None], M.wall.shape)
        v = np.broadcast_to(vgrid.nodes[None, :], M.wall.shape)
        weight = weight(n, v)
    return float(np.sum(M.wall * weight * F * G))


def flux_weight(n, v):
    return n * v


def outflux_weight(n, v):
    return np.maximum(n * v, 0.0)
